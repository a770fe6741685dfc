use serde::Serialize;

use crate::model::{BayesianNetwork, Instantiation, ParameterRef};

use super::{SensitivityConstants, SensitivityError, TIE_TOLERANCE};

/// How the rest of a CPT row follows when one entry is set to `t`: entry
/// `v ≠ x` becomes `weights[v] · (1 - t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariation {
    pub weights: Vec<f64>,
    /// Set when every other entry was zero and the freed mass is spread
    /// uniformly instead of proportionally.
    pub uniform: bool,
}

/// Proportional co-variation weights for changing entry `x` of `row`.
pub fn covariation_weights(row: &[f64], x: usize) -> Covariation {
    let rest: f64 = row
        .iter()
        .enumerate()
        .filter(|&(v, _)| v != x)
        .map(|(_, p)| p)
        .sum();
    let uniform = rest <= 0.0;
    let others = (row.len() - 1) as f64;
    let weights = row
        .iter()
        .enumerate()
        .map(|(v, &p)| match (v == x, uniform) {
            (true, _) => 0.0,
            (false, true) => 1.0 / others,
            (false, false) => p / rest,
        })
        .collect();
    Covariation { weights, uniform }
}

/// Sets entry `x` of `row` to `t` and rescales the other entries so the row
/// still sums to one.
pub fn apply_covariation(row: &[f64], x: usize, t: f64) -> Result<Vec<f64>, SensitivityError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SensitivityError::ValueOutOfRange(t));
    }
    if x >= row.len() {
        return Err(SensitivityError::BadValueIndex { value: x, len: row.len() });
    }
    let cov = covariation_weights(row, x);
    Ok(cov
        .weights
        .iter()
        .enumerate()
        .map(|(v, w)| if v == x { t } else { w * (1.0 - t) })
        .collect())
}

/// Group of instantiations the MPE witness belongs to, relative to the
/// parameter's row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum WitnessBranch {
    /// Consistent with `xu`: the witness uses the parameter itself.
    Parameter,
    /// Consistent with `x*u` for the given other value `x*`.
    Sibling(usize),
    /// Consistent with a different parent instantiation.
    OtherParents,
}

/// The competing group whose inequality is tight at an interval endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Competitor {
    /// Instantiations consistent with value `v` of the same row.
    Value(usize),
    /// Instantiations inconsistent with the row's parent instantiation (`k`).
    OtherParents,
}

/// Closed range of values for one parameter over which the current witness
/// stays an MPE solution, with the rest of its row co-varying.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessInterval {
    pub parameter: ParameterRef,
    pub current: f64,
    pub lower: f64,
    pub upper: f64,
    /// `None` when the endpoint is the domain bound 0 or 1.
    pub lower_binding: Option<Competitor>,
    pub upper_binding: Option<Competitor>,
    pub branch: WitnessBranch,
    /// The current value sits on an endpoint: some competitor ties.
    pub tie: bool,
    pub uniform_redistribution: bool,
}

impl RobustnessInterval {
    pub fn is_full(&self) -> bool {
        self.lower <= 0.0 && self.upper >= 1.0
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lower <= t && t <= self.upper
    }
}

/// `slope · t + intercept`: a group's best probability as the parameter
/// moves to `t`.
#[derive(Debug, Clone, Copy)]
struct Line {
    slope: f64,
    intercept: f64,
}

/// Interval for `param` around its current value, derived from the
/// linear inequalities between the witness's group and every other group.
pub fn robustness_interval(
    param: ParameterRef,
    constants: &SensitivityConstants,
    witness: &Instantiation,
    net: &BayesianNetwork,
) -> RobustnessInterval {
    let var = param.var;
    let row = net.cpt(var).row(param.row);
    let current = row[param.value];
    let cov = covariation_weights(row, param.value);
    let coefs = constants.r.row(var, param.row);

    let value_line = |v: usize| {
        if v == param.value {
            Line { slope: coefs[v], intercept: 0.0 }
        } else {
            let c = coefs[v] * cov.weights[v];
            Line { slope: -c, intercept: c }
        }
    };
    let k = constants.k.get(var, param.row);
    let has_other_rows = net.num_rows(var) > 1;

    let witness_row = net.row_index(var, |p| witness.value(p));
    let branch = if witness_row != param.row {
        WitnessBranch::OtherParents
    } else if witness.value(var) == param.value {
        WitnessBranch::Parameter
    } else {
        WitnessBranch::Sibling(witness.value(var))
    };
    let own = match branch {
        WitnessBranch::Parameter => value_line(param.value),
        WitnessBranch::Sibling(v) => value_line(v),
        WitnessBranch::OtherParents => Line { slope: 0.0, intercept: k },
    };

    let mut competitors: Vec<(Competitor, Line)> = (0..row.len())
        .filter(|&v| !matches!(branch, WitnessBranch::Parameter if v == param.value))
        .filter(|&v| !matches!(branch, WitnessBranch::Sibling(s) if s == v))
        .map(|v| (Competitor::Value(v), value_line(v)))
        .collect();
    if has_other_rows && branch != WitnessBranch::OtherParents {
        competitors.push((Competitor::OtherParents, Line { slope: 0.0, intercept: k }));
    }

    let (mut lower, mut upper) = (0.0_f64, 1.0_f64);
    let (mut lower_binding, mut upper_binding) = (None, None);
    for (who, line) in competitors {
        // own(t) - line(t) >= 0
        let slope = own.slope - line.slope;
        let intercept = own.intercept - line.intercept;
        if slope == 0.0 {
            continue;
        }
        let root = -intercept / slope;
        if slope > 0.0 && root > lower {
            lower = root;
            lower_binding = Some(who);
        } else if slope < 0.0 && root < upper {
            upper = root;
            upper_binding = Some(who);
        }
    }

    let near = |a: f64, b: f64| (a - b).abs() <= TIE_TOLERANCE;
    let tie = (lower_binding.is_some() && near(lower, current))
        || (upper_binding.is_some() && near(upper, current))
        || lower > current
        || upper < current;
    RobustnessInterval {
        parameter: param,
        current,
        lower: lower.min(current),
        upper: upper.max(current),
        lower_binding,
        upper_binding,
        branch,
        tie,
        uniform_redistribution: cov.uniform,
    }
}
