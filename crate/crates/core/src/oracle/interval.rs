use crate::model::{BayesianNetwork, Evidence, Instantiation, VarId};
use crate::sensitivity::{apply_covariation, RobustnessInterval};

use super::{brute_force_mpe, check_guard, consistent, factors, for_each_instantiation};
use super::{OracleError, ARGMAX_TOLERANCE};

/// Samples closer than this to an interval endpoint are skipped.
pub const ENDPOINT_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCheck {
    pub passed: bool,
    pub inside_checked: usize,
    pub outside_checked: usize,
    /// Parameter values at which the witness's membership in the argmax set
    /// disagreed with the interval.
    pub counterexamples: Vec<f64>,
}

/// Evenly spaced points strictly inside the interval and in its complement
/// within [0, 1], away from the endpoints by at least [`ENDPOINT_BAND`].
/// No outside points are produced for the full interval.
pub fn sample_points(lower: f64, upper: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let away = |t: f64| (t - lower).abs() > ENDPOINT_BAND && (t - upper).abs() > ENDPOINT_BAND;
    let inside = if upper > lower {
        (0..n)
            .map(|i| lower + (upper - lower) * (i as f64 + 0.5) / n as f64)
            .filter(|&t| away(t))
            .collect()
    } else {
        Vec::new()
    };
    let below = lower.max(0.0);
    let above = (1.0 - upper).max(0.0);
    let total = below + above;
    let outside = if total > 0.0 {
        (0..n)
            .map(|i| {
                let s = total * (i as f64 + 0.5) / n as f64;
                if s < below {
                    s
                } else {
                    upper + (s - below)
                }
            })
            .filter(|&t| away(t) && (0.0..=1.0).contains(&t))
            .collect()
    } else {
        Vec::new()
    };
    (inside, outside)
}

fn judge(
    interval: &RobustnessInterval,
    n_samples: usize,
    mut witness_wins: impl FnMut(f64) -> Result<bool, OracleError>,
) -> Result<IntervalCheck, OracleError> {
    let (inside, outside) = sample_points(interval.lower, interval.upper, n_samples);
    let mut counterexamples = Vec::new();
    for &t in &inside {
        if !witness_wins(t)? {
            counterexamples.push(t);
        }
    }
    for &t in &outside {
        if witness_wins(t)? {
            counterexamples.push(t);
        }
    }
    Ok(IntervalCheck {
        passed: counterexamples.is_empty(),
        inside_checked: inside.len(),
        outside_checked: outside.len(),
        counterexamples,
    })
}

/// Checks an interval by rebuilding the network at sampled parameter values
/// and enumerating its MPE set each time.
pub fn verify_robustness_interval(
    net: &BayesianNetwork,
    e: &Evidence,
    witness: &Instantiation,
    interval: &RobustnessInterval,
    n_samples: usize,
    guard: u64,
) -> Result<IntervalCheck, OracleError> {
    check_guard(net, guard)?;
    let p = interval.parameter;
    let row = net.cpt(p.var).row(p.row).to_vec();
    judge(interval, n_samples, |t| {
        let changed = net.with_row(p.var, p.row, apply_covariation(&row, p.value, t)?)?;
        Ok(brute_force_mpe(&changed, e, guard)?.contains(witness))
    })
}

/// One enumeration's worth of facts about a family, enough to get the MPE
/// probability of the network after any change to a single row of its CPT.
///
/// Changing row `u` only rescales instantiations whose parents match `u`; for
/// those the best instantiation with child value `v` has probability
/// `θ'_{v|u} · best_rest[u][v]`. All other instantiations keep their
/// probability, so their maximum is fixed.
#[derive(Debug, Clone)]
pub struct FamilySweep {
    var: VarId,
    card: usize,
    /// Per row and value: max product of the other families' parameters.
    best_rest: Vec<f64>,
    /// Per row: max probability of an instantiation in that row.
    best_total: Vec<f64>,
}

impl FamilySweep {
    pub fn new(
        net: &BayesianNetwork,
        e: &Evidence,
        var: VarId,
        guard: u64,
    ) -> Result<Self, OracleError> {
        check_guard(net, guard)?;
        e.check(net)?;
        let n = net.num_variables();
        let card = net.cardinality(var);
        let rows = net.num_rows(var);
        let mut best_rest = vec![0.0_f64; rows * card];
        let mut best_total = vec![0.0_f64; rows];
        let (mut row_of, mut f) = (vec![0; n], vec![0.0; n]);
        for_each_instantiation(net, |values| {
            if !consistent(values, e) {
                return;
            }
            factors(net, values, &mut row_of, &mut f);
            let u = row_of[var.0];
            let rest: f64 = f
                .iter()
                .enumerate()
                .filter(|&(v, _)| v != var.0)
                .map(|(_, p)| p)
                .product();
            let slot = &mut best_rest[u * card + values[var.0]];
            *slot = f64::max(*slot, rest);
            best_total[u] = best_total[u].max(rest * f[var.0]);
        });
        Ok(FamilySweep {
            var,
            card,
            best_rest,
            best_total,
        })
    }

    pub fn var(&self) -> VarId {
        self.var
    }

    /// MPE probability once row `row` is replaced by `new_row`.
    pub fn mpe_with_row(&self, row: usize, new_row: &[f64]) -> f64 {
        let others = self
            .best_total
            .iter()
            .enumerate()
            .filter(|&(u, _)| u != row)
            .map(|(_, &p)| p)
            .fold(0.0, f64::max);
        new_row
            .iter()
            .zip(&self.best_rest[row * self.card..(row + 1) * self.card])
            .map(|(theta, rest)| theta * rest)
            .fold(others, f64::max)
    }

    /// Same verdict as [`verify_robustness_interval`], without re-enumerating
    /// per sample. The witness's own probability is recomputed directly.
    pub fn verify(
        &self,
        net: &BayesianNetwork,
        witness: &Instantiation,
        interval: &RobustnessInterval,
        n_samples: usize,
    ) -> Result<IntervalCheck, OracleError> {
        let p = interval.parameter;
        assert_eq!(p.var, self.var, "sweep built for another family");
        let row = net.cpt(p.var).row(p.row).to_vec();
        judge(interval, n_samples, |t| {
            let new_row = apply_covariation(&row, p.value, t)?;
            let best = self.mpe_with_row(p.row, &new_row);
            let own: f64 = net
                .var_ids()
                .map(|v| {
                    let r = net.row_index(v, |q| witness.value(q));
                    if v == p.var && r == p.row {
                        new_row[witness.value(v)]
                    } else {
                        net.cpt(v).row(r)[witness.value(v)]
                    }
                })
                .product();
            Ok(best - own <= ARGMAX_TOLERANCE * best)
        })
    }
}
