use std::fmt::Write as _;

use crate::compile::{check_decomposability, compile};
use crate::engine::{evaluate_sum, EngineError};
use crate::model::{BayesianNetwork, Evidence};
use crate::sensitivity::{analyze, SensitivityError, TIE_TOLERANCE};

use super::{
    brute_force_coefficients, brute_force_k_map, brute_force_mpe, brute_force_probability,
    brute_force_retraction, rel_close, FamilySweep, OracleError,
};

/// Relative tolerance for engine-versus-oracle comparisons.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

/// Outcome of comparing every engine output for one query to the oracle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Audit {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Compiles `net`, runs the full analysis under `e` and checks each result
/// against enumeration. Intervals are sampled `samples` times on each side;
/// zero skips them.
pub fn audit_network(
    net: &BayesianNetwork,
    e: &Evidence,
    guard: u64,
    samples: usize,
) -> Result<Audit, OracleError> {
    let mut audit = Audit::default();
    let (_, circuit) = compile(net);
    let bad = check_decomposability(&circuit);
    audit.expect(bad.is_empty(), || format!("{} non-decomposable multiply nodes", bad.len()));

    let pr = brute_force_probability(net, e, guard)?;
    match evaluate_sum(&circuit, e) {
        Ok(got) => audit.expect(rel_close(got, pr, EQUIVALENCE_TOLERANCE), || {
            format!("Pr(e): circuit {got}, enumeration {pr}")
        }),
        Err(err) => audit.expect(false, || format!("Pr(e): {err}")),
    }

    let oracle = brute_force_mpe(net, e, guard)?;
    let analysis = match analyze(net, &circuit, e) {
        Ok(a) => a,
        Err(SensitivityError::Engine(EngineError::ZeroProbability)) => {
            audit.expect(oracle.probability == 0.0, || {
                format!("engine reports zero probability, enumeration {}", oracle.probability)
            });
            return Ok(audit);
        }
        Err(err) => return Err(err.into()),
    };
    let mpe = analysis.mpe.probability;
    audit.expect(rel_close(mpe, oracle.probability, EQUIVALENCE_TOLERANCE), || {
        format!("MPE_p: engine {mpe}, enumeration {}", oracle.probability)
    });
    audit.expect(oracle.contains(&analysis.mpe.witness), || {
        format!("witness {} not in argmax", net.describe_assignment(&analysis.mpe.witness))
    });

    let r = brute_force_coefficients(net, e, guard)?;
    for p in net.parameters() {
        let (got, want) = (analysis.constants.r.get(p), r[p.var.0][p.row * net.cardinality(p.var) + p.value]);
        audit.expect(rel_close(got, want, EQUIVALENCE_TOLERANCE), || {
            format!("r for {}: engine {got}, enumeration {want}", net.describe_parameter(p))
        });
    }

    let k = brute_force_k_map(net, e, guard)?;
    for var in net.var_ids() {
        for (row, &want) in k[var.0].iter().enumerate() {
            let got = analysis.constants.k.get(var, row);
            audit.expect(rel_close(got, want, EQUIVALENCE_TOLERANCE), || {
                format!("k for {} row {row}: engine {got}, enumeration {want}", net.variable(var).name)
            });

            let best = net
                .cpt(var)
                .row(row)
                .iter()
                .zip(analysis.constants.r.row(var, row))
                .map(|(theta, coef)| theta * coef)
                .fold(analysis.constants.k.get(var, row), f64::max);
            audit.expect(rel_close(best, mpe, TIE_TOLERANCE), || {
                format!("family identity for {} row {row}: {best} vs {mpe}", net.variable(var).name)
            });
        }
    }

    let table = brute_force_retraction(net, e, guard)?;
    for var in net.var_ids() {
        for (x, &want) in table[var.0].iter().enumerate() {
            let got = analysis.retraction.entry(var, x);
            audit.expect(rel_close(got, want, EQUIVALENCE_TOLERANCE), || {
                let mut s = String::new();
                let _ = write!(s, "retraction {}={}: ", net.variable(var).name, net.variable(var).values[x]);
                let _ = write!(s, "engine {got}, enumeration {want}");
                s
            });
        }
    }

    if samples > 0 {
        for var in net.var_ids() {
            let sweep = FamilySweep::new(net, e, var, guard)?;
            for iv in analysis.intervals.iter().filter(|iv| iv.parameter.var == var) {
                let check = sweep.verify(net, &analysis.mpe.witness, iv, samples)?;
                audit.expect(check.passed, || {
                    format!(
                        "interval [{}, {}] for {} fails at t = {:?}",
                        iv.lower,
                        iv.upper,
                        net.describe_parameter(iv.parameter),
                        check.counterexamples
                    )
                });
            }
        }
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_network;
    use crate::oracle::DEFAULT_GUARD;

    const AB: &str = include_str!("../../fixtures/ab.json");

    #[test]
    fn fixture_passes_under_every_evidence() {
        let net = load_network(AB).unwrap();
        for e in ["", "A=a", "A=a_bar", "B=b", "A=a_bar B=b_bar"] {
            let e = Evidence::parse(&net, e).unwrap();
            let audit = audit_network(&net, &e, DEFAULT_GUARD, 20).unwrap();
            assert!(audit.passed(), "{:?}", audit.failures);
            assert!(audit.checks > 20);
        }
    }

    #[test]
    fn impossible_evidence_is_audited_not_failed() {
        let net = load_network(
            r#"{"variables":[{"name":"A","values":["a","a_bar"]},{"name":"B","values":["b","b_bar"]}],
                "cpts":[{"child":"A","table":[[1.0,0.0]]},
                        {"child":"B","parents":["A"],"table":[[0.3,0.7],[0.5,0.5]]}]}"#,
        )
        .unwrap();
        let e = Evidence::parse(&net, "A=a_bar").unwrap();
        let audit = audit_network(&net, &e, DEFAULT_GUARD, 5).unwrap();
        assert!(audit.passed(), "{:?}", audit.failures);
    }

    #[test]
    fn guard_propagates() {
        let net = load_network(AB).unwrap();
        assert!(audit_network(&net, &Evidence::empty(), 2, 0).is_err());
    }
}
