//! Ground truth by exhaustive enumeration of complete instantiations.
//!
//! Nothing here touches the circuit; every quantity is a max or a sum over
//! explicit instantiations. Enumeration is refused, not truncated, once the
//! instantiation count exceeds the guard.

mod audit;
mod interval;

use thiserror::Error;

use crate::model::{BayesianNetwork, Evidence, Instantiation, ModelError, ParameterRef, VarId};
use crate::sensitivity::SensitivityError;

pub use audit::{audit_network, Audit};
pub use interval::{sample_points, verify_robustness_interval, FamilySweep, IntervalCheck};

pub const DEFAULT_GUARD: u64 = 1 << 24;

/// Relative tolerance for argmax membership.
pub const ARGMAX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("network has {} instantiations, above the enumeration guard of {guard}",
        .size.map_or_else(|| "more than 2^64".to_string(), |s| s.to_string()))]
    GuardExceeded { size: Option<u64>, guard: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
}

fn check_guard(net: &BayesianNetwork, guard: u64) -> Result<(), OracleError> {
    match net.num_instantiations() {
        Some(size) if size <= guard => Ok(()),
        size => Err(OracleError::GuardExceeded { size, guard }),
    }
}

/// Calls `f` with every complete instantiation in lexicographic order.
fn for_each_instantiation(net: &BayesianNetwork, mut f: impl FnMut(&[usize])) {
    let cards: Vec<usize> = net.var_ids().map(|v| net.cardinality(v)).collect();
    let mut values = vec![0usize; cards.len()];
    loop {
        f(&values);
        let mut i = cards.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            values[i] += 1;
            if values[i] < cards[i] {
                break;
            }
            values[i] = 0;
        }
    }
}

fn consistent(values: &[usize], e: &Evidence) -> bool {
    e.iter().all(|(v, x)| values[v.0] == x)
}

/// Per-family parameter factors of one instantiation, and their rows.
fn factors(net: &BayesianNetwork, values: &[usize], rows: &mut [usize], out: &mut [f64]) {
    for v in net.var_ids() {
        let row = net.row_index(v, |p| values[p.0]);
        rows[v.0] = row;
        out[v.0] = net.cpt(v).row(row)[values[v.0]];
    }
}

/// One term of the network polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct TermView {
    pub instantiation: Instantiation,
    /// Product of compatible parameters and indicator values under `e`.
    pub value: f64,
}

pub fn term_views(
    net: &BayesianNetwork,
    e: &Evidence,
    guard: u64,
) -> Result<Vec<TermView>, OracleError> {
    check_guard(net, guard)?;
    e.check(net)?;
    let mut out = Vec::new();
    for_each_instantiation(net, |values| {
        let x = Instantiation::new(values.to_vec());
        let indicator = if consistent(values, e) { 1.0 } else { 0.0 };
        let value = crate::model::joint_probability(net, &x).expect("complete") * indicator;
        out.push(TermView { instantiation: x, value });
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMpe {
    /// Every instantiation within [`ARGMAX_TOLERANCE`] of the maximum, in
    /// lexicographic order. Empty when the evidence has probability zero.
    pub argmax: Vec<Instantiation>,
    pub probability: f64,
}

impl OracleMpe {
    pub fn contains(&self, x: &Instantiation) -> bool {
        self.argmax.binary_search(x).is_ok()
    }
}

pub fn brute_force_mpe(
    net: &BayesianNetwork,
    e: &Evidence,
    guard: u64,
) -> Result<OracleMpe, OracleError> {
    check_guard(net, guard)?;
    e.check(net)?;
    let n = net.num_variables();
    let (mut rows, mut f) = (vec![0; n], vec![0.0; n]);
    let mut scored: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut best = 0.0_f64;
    for_each_instantiation(net, |values| {
        if !consistent(values, e) {
            return;
        }
        factors(net, values, &mut rows, &mut f);
        let p: f64 = f.iter().product();
        if p > 0.0 && p >= best * (1.0 - ARGMAX_TOLERANCE) {
            best = best.max(p);
            scored.push((p, values.to_vec()));
        }
    });
    let argmax = scored
        .into_iter()
        .filter(|(p, _)| best - p <= ARGMAX_TOLERANCE * best)
        .map(|(_, v)| Instantiation::new(v))
        .collect();
    Ok(OracleMpe { argmax, probability: best })
}

/// `Pr(e)` for each evidence in `queries`, from a single enumeration.
pub fn brute_force_probabilities(
    net: &BayesianNetwork,
    queries: &[Evidence],
    guard: u64,
) -> Result<Vec<f64>, OracleError> {
    check_guard(net, guard)?;
    for e in queries {
        e.check(net)?;
    }
    let n = net.num_variables();
    let (mut rows, mut f) = (vec![0; n], vec![0.0; n]);
    let mut sums = vec![0.0; queries.len()];
    for_each_instantiation(net, |values| {
        factors(net, values, &mut rows, &mut f);
        let p: f64 = f.iter().product();
        for (sum, e) in sums.iter_mut().zip(queries) {
            if consistent(values, e) {
                *sum += p;
            }
        }
    });
    Ok(sums)
}

pub fn brute_force_probability(
    net: &BayesianNetwork,
    e: &Evidence,
    guard: u64,
) -> Result<f64, OracleError> {
    Ok(brute_force_probabilities(net, std::slice::from_ref(e), guard)?[0])
}

/// `r(e, xu)`: the largest term consistent with `e` and `xu`, with the factor
/// `θ_{x|u}` left out. Zero when no such instantiation exists.
pub fn brute_force_coefficient(
    net: &BayesianNetwork,
    e: &Evidence,
    param: ParameterRef,
    guard: u64,
) -> Result<f64, OracleError> {
    check_guard(net, guard)?;
    e.check(net)?;
    let n = net.num_variables();
    let (mut rows, mut f) = (vec![0; n], vec![0.0; n]);
    let mut best = 0.0_f64;
    for_each_instantiation(net, |values| {
        if !consistent(values, e) || values[param.var.0] != param.value {
            return;
        }
        factors(net, values, &mut rows, &mut f);
        if rows[param.var.0] != param.row {
            return;
        }
        let rest: f64 = f
            .iter()
            .enumerate()
            .filter(|&(v, _)| v != param.var.0)
            .map(|(_, p)| p)
            .product();
        best = best.max(rest);
    });
    Ok(best)
}

/// Every coefficient at once, laid out per variable as `row * card + value`.
pub fn brute_force_coefficients(
    net: &BayesianNetwork,
    e: &Evidence,
    guard: u64,
) -> Result<Vec<Vec<f64>>, OracleError> {
    check_guard(net, guard)?;
    e.check(net)?;
    let n = net.num_variables();
    let mut best: Vec<Vec<f64>> = net
        .var_ids()
        .map(|v| vec![0.0; net.num_rows(v) * net.cardinality(v)])
        .collect();
    let (mut rows, mut f) = (vec![0; n], vec![0.0; n]);
    let mut suffix = vec![1.0; n + 1];
    for_each_instantiation(net, |values| {
        if !consistent(values, e) {
            return;
        }
        factors(net, values, &mut rows, &mut f);
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] * f[i];
        }
        let mut prefix = 1.0;
        for v in 0..n {
            let rest = prefix * suffix[v + 1];
            let slot = &mut best[v][rows[v] * net.cardinality(VarId(v)) + values[v]];
            *slot = slot.max(rest);
            prefix *= f[v];
        }
    });
    Ok(best)
}

/// `k(e, u)`: the largest probability among instantiations consistent with
/// `e` whose parents of `var` differ from row `row`.
pub fn brute_force_k(
    net: &BayesianNetwork,
    e: &Evidence,
    var: VarId,
    row: usize,
    guard: u64,
) -> Result<f64, OracleError> {
    check_guard(net, guard)?;
    e.check(net)?;
    let n = net.num_variables();
    let (mut rows, mut f) = (vec![0; n], vec![0.0; n]);
    let mut best = 0.0_f64;
    for_each_instantiation(net, |values| {
        if !consistent(values, e) {
            return;
        }
        factors(net, values, &mut rows, &mut f);
        if rows[var.0] != row {
            best = best.max(f.iter().product());
        }
    });
    Ok(best)
}

/// Every `k(e, u)`, laid out per variable by row.
pub fn brute_force_k_map(
    net: &BayesianNetwork,
    e: &Evidence,
    guard: u64,
) -> Result<Vec<Vec<f64>>, OracleError> {
    check_guard(net, guard)?;
    e.check(net)?;
    let n = net.num_variables();
    let mut per_row: Vec<Vec<f64>> = net.var_ids().map(|v| vec![0.0; net.num_rows(v)]).collect();
    let (mut rows, mut f) = (vec![0; n], vec![0.0; n]);
    for_each_instantiation(net, |values| {
        if !consistent(values, e) {
            return;
        }
        factors(net, values, &mut rows, &mut f);
        let p: f64 = f.iter().product();
        for v in 0..n {
            let slot = &mut per_row[v][rows[v]];
            *slot = slot.max(p);
        }
    });
    Ok(per_row
        .iter()
        .map(|rows| {
            (0..rows.len())
                .map(|u| {
                    rows.iter()
                        .enumerate()
                        .filter(|&(other, _)| other != u)
                        .map(|(_, &p)| p)
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect())
}

/// `MPE_p(e - X, x)` for every variable and value.
pub fn brute_force_retraction(
    net: &BayesianNetwork,
    e: &Evidence,
    guard: u64,
) -> Result<Vec<Vec<f64>>, OracleError> {
    check_guard(net, guard)?;
    e.check(net)?;
    let n = net.num_variables();
    let mut table: Vec<Vec<f64>> = net.var_ids().map(|v| vec![0.0; net.cardinality(v)]).collect();
    let (mut rows, mut f) = (vec![0; n], vec![0.0; n]);
    for_each_instantiation(net, |values| {
        let mut mismatched = e.iter().filter(|&(v, x)| values[v.0] != x).map(|(v, _)| v);
        let first = mismatched.next();
        if mismatched.next().is_some() {
            return;
        }
        factors(net, values, &mut rows, &mut f);
        let p: f64 = f.iter().product();
        match first {
            // consistent with e: counts for every (X, x) it assigns
            None => {
                for v in 0..n {
                    let slot = &mut table[v][values[v]];
                    *slot = slot.max(p);
                }
            }
            // consistent with e - X only
            Some(v) => {
                let slot = &mut table[v.0][values[v.0]];
                *slot = slot.max(p);
            }
        }
    });
    Ok(table)
}

/// Relative closeness used by the equivalence checks.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_network;

    const AB: &str = include_str!("../../fixtures/ab.json");

    fn fixture() -> BayesianNetwork {
        load_network(AB).unwrap()
    }

    fn ev(net: &BayesianNetwork, s: &str) -> Evidence {
        Evidence::parse(net, s).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn mpe_by_enumeration() {
        let net = fixture();
        for (e, witness, prob) in [("A=a", [0, 1], 0.4), ("", [0, 1], 0.4), ("A=a_bar", [1, 0], 0.3)] {
            let m = brute_force_mpe(&net, &ev(&net, e), DEFAULT_GUARD).unwrap();
            assert_eq!(m.argmax, vec![Instantiation::new(witness.to_vec())]);
            assert!(close(m.probability, prob));
        }
    }

    #[test]
    fn impossible_evidence_has_empty_argmax() {
        let net = load_network(
            r#"{"variables":[{"name":"A","values":["a","a_bar"]}],
                "cpts":[{"child":"A","table":[[1.0,0.0]]}]}"#,
        )
        .unwrap();
        let m = brute_force_mpe(&net, &ev(&net, "A=a_bar"), DEFAULT_GUARD).unwrap();
        assert!(m.argmax.is_empty());
        assert_eq!(m.probability, 0.0);
    }

    #[test]
    fn ties_are_all_returned() {
        let net = load_network(
            r#"{"variables":[{"name":"A","values":["a","a_bar"]}],
                "cpts":[{"child":"A","table":[[0.5,0.5]]}]}"#,
        )
        .unwrap();
        let m = brute_force_mpe(&net, &Evidence::empty(), DEFAULT_GUARD).unwrap();
        assert_eq!(m.argmax.len(), 2);
    }

    #[test]
    fn coefficients() {
        let net = fixture();
        let p = |var, row, value| ParameterRef { var: VarId(var), row, value };
        let a = ev(&net, "A=a");
        assert!(close(brute_force_coefficient(&net, &a, p(0, 0, 0), DEFAULT_GUARD).unwrap(), 0.8));
        let none = Evidence::empty();
        assert!(close(brute_force_coefficient(&net, &none, p(1, 1, 0), DEFAULT_GUARD).unwrap(), 0.5));
        assert_eq!(brute_force_coefficient(&net, &a, p(1, 1, 0), DEFAULT_GUARD).unwrap(), 0.0);
    }

    #[test]
    fn bulk_coefficients_match_single_queries() {
        let net = fixture();
        for e in ["", "A=a", "B=b_bar", "A=a_bar B=b"] {
            let e = ev(&net, e);
            let bulk = brute_force_coefficients(&net, &e, DEFAULT_GUARD).unwrap();
            for p in net.parameters() {
                let single = brute_force_coefficient(&net, &e, p, DEFAULT_GUARD).unwrap();
                assert!(rel_close(bulk[p.var.0][p.row * 2 + p.value], single, 1e-15) || single == 0.0);
            }
        }
    }

    #[test]
    fn k_constants() {
        let net = fixture();
        let none = Evidence::empty();
        assert!(close(brute_force_k(&net, &none, VarId(1), 0, DEFAULT_GUARD).unwrap(), 0.3));
        assert!(close(brute_force_k(&net, &none, VarId(1), 1, DEFAULT_GUARD).unwrap(), 0.4));
        for e in ["", "A=a", "B=b"] {
            let e = ev(&net, e);
            assert_eq!(brute_force_k(&net, &e, VarId(0), 0, DEFAULT_GUARD).unwrap(), 0.0);
            let bulk = brute_force_k_map(&net, &e, DEFAULT_GUARD).unwrap();
            for v in net.var_ids() {
                for row in 0..net.num_rows(v) {
                    assert_eq!(bulk[v.0][row], brute_force_k(&net, &e, v, row, DEFAULT_GUARD).unwrap());
                }
            }
        }
    }

    #[test]
    fn k_is_max_of_other_rows_coefficient_products() {
        let net = fixture();
        for e in ["", "A=a", "B=b"] {
            let e = ev(&net, e);
            for v in net.var_ids() {
                for u in 0..net.num_rows(v) {
                    let via_r = (0..net.num_rows(v))
                        .filter(|&other| other != u)
                        .flat_map(|row| (0..net.cardinality(v)).map(move |value| ParameterRef { var: v, row, value }))
                        .map(|p| brute_force_coefficient(&net, &e, p, DEFAULT_GUARD).unwrap() * net.theta(p))
                        .fold(0.0, f64::max);
                    let direct = brute_force_k(&net, &e, v, u, DEFAULT_GUARD).unwrap();
                    assert!(rel_close(via_r, direct, 1e-12) || via_r == direct);
                }
            }
        }
    }

    #[test]
    fn retraction_by_enumeration() {
        let net = fixture();
        let t = brute_force_retraction(&net, &ev(&net, "A=a"), DEFAULT_GUARD).unwrap();
        assert!(close(t[0][0], 0.4) && close(t[0][1], 0.3));
        assert!(close(t[1][0], 0.1) && close(t[1][1], 0.4));
        let t = brute_force_retraction(&net, &ev(&net, "A=a B=b"), DEFAULT_GUARD).unwrap();
        assert!(close(t[1][1], 0.4));
    }

    #[test]
    fn term_views_sum_to_one() {
        let net = fixture();
        let terms = term_views(&net, &Evidence::empty(), DEFAULT_GUARD).unwrap();
        assert_eq!(terms.len(), 4);
        assert!(close(terms.iter().map(|t| t.value).sum(), 1.0));
        let best = terms.iter().map(|t| t.value).fold(0.0, f64::max);
        let m = brute_force_mpe(&net, &Evidence::empty(), DEFAULT_GUARD).unwrap();
        assert_eq!(best, m.probability);
        let under_a = term_views(&net, &ev(&net, "A=a"), DEFAULT_GUARD).unwrap();
        assert!(close(under_a.iter().map(|t| t.value).sum(), 0.5));
    }

    #[test]
    fn guard_is_enforced() {
        let net = fixture();
        let err = brute_force_mpe(&net, &Evidence::empty(), 3).unwrap_err();
        assert!(matches!(err, OracleError::GuardExceeded { size: Some(4), guard: 3 }));
        assert!(brute_force_retraction(&net, &Evidence::empty(), 3).is_err());
    }
}
