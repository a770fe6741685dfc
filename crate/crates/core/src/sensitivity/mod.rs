//! Sensitivity constants, robustness intervals and evidence retraction.
//!
//! For a parameter `θ_{x|u}`, every instantiation consistent with the
//! evidence falls in one of three groups: consistent with `xu`, with `x*u`
//! for another value `x*`, or with a different parent instantiation. Within
//! the first two groups the best instantiation's probability is
//! `r(e, x'u) · θ_{x'|u}`; the third group's best probability `k(e, u)` does
//! not depend on the row at all. The robustness conditions follow from
//! comparing those group maxima as the row co-varies.

mod interval;
mod retraction;

use thiserror::Error;

use crate::compile::ArithmeticCircuit;
use crate::engine::{extract_mpe, run_dmaxc, EngineError, EvaluationState, MpeResult};
use crate::model::{BayesianNetwork, Evidence, ParameterRef, VarId};

pub use interval::{
    apply_covariation, covariation_weights, robustness_interval, Competitor, Covariation,
    RobustnessInterval, WitnessBranch,
};
pub use retraction::{
    mpe_multiplicity, retraction_analysis, retraction_table, retraction_verdict,
    variable_multiplicity, Multiplicity, RetractionTable, RetractionVerdict,
};

/// Relative tolerance under which two probabilities count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub(crate) fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

#[derive(Debug, Error, PartialEq)]
pub enum SensitivityError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("new parameter value {0} is outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("value index {value} is out of range for a row of {len}")]
    BadValueIndex { value: usize, len: usize },
    #[error("variable {0} is not set in the evidence")]
    NotInEvidence(VarId),
    #[error("variable {0} is set in the evidence")]
    InEvidence(VarId),
    #[error("evaluation state has no registers; run the register pass first")]
    NoRegisters,
}

/// `r(e, xu)` for every CPT cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMap {
    cards: Vec<usize>,
    /// Per variable, indexed by `row * cardinality + value`.
    values: Vec<Vec<f64>>,
}

impl CoefficientMap {
    pub fn get(&self, p: ParameterRef) -> f64 {
        self.values[p.var.0][p.row * self.cards[p.var.0] + p.value]
    }

    pub fn row(&self, var: VarId, row: usize) -> &[f64] {
        let card = self.cards[var.0];
        &self.values[var.0][row * card..(row + 1) * card]
    }

    pub fn num_rows(&self, var: VarId) -> usize {
        self.values[var.0].len() / self.cards[var.0]
    }

    pub fn num_variables(&self) -> usize {
        self.cards.len()
    }
}

/// `k(e, u)` for every family instantiation.
#[derive(Debug, Clone, PartialEq)]
pub struct KMap {
    values: Vec<Vec<f64>>,
}

impl KMap {
    pub fn get(&self, var: VarId, row: usize) -> f64 {
        self.values[var.0][row]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityConstants {
    pub r: CoefficientMap,
    pub k: KMap,
}

impl SensitivityConstants {
    pub fn new(net: &BayesianNetwork, r: CoefficientMap) -> Self {
        let k = parent_k_map(&r, net);
        SensitivityConstants { r, k }
    }
}

/// Reads the parameter registers left by the register pass.
pub fn parameter_coefficient_map(
    state: &EvaluationState,
    circuit: &ArithmeticCircuit,
) -> Result<CoefficientMap, SensitivityError> {
    if !state.has_registers() {
        return Err(SensitivityError::NoRegisters);
    }
    let cards: Vec<usize> = (0..circuit.num_variables())
        .map(|v| circuit.cardinality(VarId(v)))
        .collect();
    let values = (0..circuit.num_variables())
        .map(|v| {
            let var = VarId(v);
            let card = cards[v];
            (0..circuit.num_rows(var) * card)
                .map(|i| {
                    let p = ParameterRef { var, row: i / card, value: i % card };
                    state.r(circuit.param_leaf(p))
                })
                .collect()
        })
        .collect();
    Ok(CoefficientMap { cards, values })
}

/// `k(e, u) = max over x and u* ≠ u of r(e, xu*) · θ_{x|u*}`; zero for a
/// family with a single row, where no other parent instantiation exists.
pub fn parent_k_map(r: &CoefficientMap, net: &BayesianNetwork) -> KMap {
    let values = net
        .var_ids()
        .map(|var| {
            let rows = net.num_rows(var);
            let best: Vec<f64> = (0..rows)
                .map(|row| {
                    net.cpt(var)
                        .row(row)
                        .iter()
                        .zip(r.row(var, row))
                        .map(|(theta, coef)| coef * theta)
                        .fold(0.0, f64::max)
                })
                .collect();
            // best and runner-up rows, so each exclusion is O(1)
            let (mut first, mut second) = ((0.0, usize::MAX), 0.0);
            for (row, &b) in best.iter().enumerate() {
                if b > first.0 {
                    second = first.0;
                    first = (b, row);
                } else if b > second {
                    second = b;
                }
            }
            (0..rows)
                .map(|row| if row == first.1 { second } else { first.0 })
                .collect()
        })
        .collect();
    KMap { values }
}

/// Everything computed for one evidence query.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub evidence: Evidence,
    pub mpe: MpeResult,
    pub constants: SensitivityConstants,
    /// One per parameter, in [`BayesianNetwork::parameters`] order.
    pub intervals: Vec<RobustnessInterval>,
    pub retraction: RetractionTable,
    pub verdicts: Vec<(VarId, RetractionVerdict)>,
    pub multiplicity: Vec<(VarId, Multiplicity)>,
}

/// Runs the register pass once and derives every sensitivity result from it.
pub fn analyze(
    net: &BayesianNetwork,
    circuit: &ArithmeticCircuit,
    e: &Evidence,
) -> Result<Analysis, SensitivityError> {
    let state = run_dmaxc(circuit, e)?;
    let mpe = extract_mpe(circuit, &state)?;
    let constants = SensitivityConstants::new(net, parameter_coefficient_map(&state, circuit)?);
    let intervals = net
        .parameters()
        .map(|p| robustness_interval(p, &constants, &mpe.witness, net))
        .collect();
    let retraction = retraction_table(&state, circuit)?;
    let verdicts = retraction_analysis(&retraction, e);
    let multiplicity = mpe_multiplicity(&retraction, e);
    Ok(Analysis {
        evidence: e.clone(),
        mpe,
        constants,
        intervals,
        retraction,
        verdicts,
        multiplicity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile;
    use crate::model::load_network;

    const AB: &str = include_str!("../../fixtures/ab.json");

    fn constants(e: &str) -> (BayesianNetwork, SensitivityConstants) {
        let net = load_network(AB).unwrap();
        let (_, c) = compile(&net);
        let state = run_dmaxc(&c, &Evidence::parse(&net, e).unwrap()).unwrap();
        let r = parameter_coefficient_map(&state, &c).unwrap();
        (net.clone(), SensitivityConstants::new(&net, r))
    }

    fn p(var: usize, row: usize, value: usize) -> ParameterRef {
        ParameterRef { var: VarId(var), row, value }
    }

    #[test]
    fn coefficients_without_evidence() {
        let (_, k) = constants("");
        for row in 0..2 {
            for value in 0..2 {
                assert!((k.r.get(p(1, row, value)) - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coefficients_under_a() {
        let (_, k) = constants("A=a");
        assert!((k.r.get(p(0, 0, 0)) - 0.8).abs() < 1e-12);
        assert_eq!(k.r.get(p(1, 1, 0)), 0.0);
    }

    #[test]
    fn k_constants() {
        let (_, c) = constants("");
        assert!((c.k.get(VarId(1), 0) - 0.3).abs() < 1e-12);
        assert!((c.k.get(VarId(1), 1) - 0.4).abs() < 1e-12);
        assert_eq!(c.k.get(VarId(0), 0), 0.0);
        let (_, c) = constants("A=a");
        assert_eq!(c.k.get(VarId(1), 0), 0.0);
        assert_eq!(c.k.get(VarId(0), 0), 0.0);
    }

    #[test]
    fn coefficient_map_needs_registers() {
        let net = load_network(AB).unwrap();
        let (_, c) = compile(&net);
        let state = crate::engine::evaluate_max(&c, &Evidence::empty()).unwrap();
        assert_eq!(
            parameter_coefficient_map(&state, &c),
            Err(SensitivityError::NoRegisters)
        );
    }

    #[test]
    fn family_identity_holds_on_fixture() {
        for e in ["", "A=a", "A=a_bar", "B=b", "A=a B=b_bar"] {
            let (net, c) = constants(e);
            let (_, circuit) = compile(&net);
            let mpe = run_dmaxc(&circuit, &Evidence::parse(&net, e).unwrap())
                .unwrap()
                .mpe_probability();
            for var in net.var_ids() {
                for row in 0..net.num_rows(var) {
                    let best = net
                        .cpt(var)
                        .row(row)
                        .iter()
                        .zip(c.r.row(var, row))
                        .map(|(t, r)| t * r)
                        .fold(c.k.get(var, row), f64::max);
                    assert!(ties(best, mpe), "{e}: {var} row {row}: {best} vs {mpe}");
                }
            }
        }
    }
}
