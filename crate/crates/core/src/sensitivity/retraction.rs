use serde::Serialize;

use crate::compile::ArithmeticCircuit;
use crate::engine::EvaluationState;
use crate::model::{Evidence, VarId};

use super::{ties, SensitivityError};

/// `MPE_p(e - X, x)` for every variable and value, read from the indicator
/// registers.
#[derive(Debug, Clone, PartialEq)]
pub struct RetractionTable {
    entries: Vec<Vec<f64>>,
    mpe_probability: f64,
}

impl RetractionTable {
    pub fn entry(&self, var: VarId, value: usize) -> f64 {
        self.entries[var.0][value]
    }

    pub fn entries(&self, var: VarId) -> &[f64] {
        &self.entries[var.0]
    }

    pub fn num_variables(&self) -> usize {
        self.entries.len()
    }

    pub fn mpe_probability(&self) -> f64 {
        self.mpe_probability
    }
}

pub fn retraction_table(
    state: &EvaluationState,
    circuit: &ArithmeticCircuit,
) -> Result<RetractionTable, SensitivityError> {
    if !state.has_registers() {
        return Err(SensitivityError::NoRegisters);
    }
    let entries = (0..circuit.num_variables())
        .map(|v| {
            (0..circuit.cardinality(VarId(v)))
                .map(|x| state.r(circuit.indicator_leaf(VarId(v), x)))
                .collect()
        })
        .collect();
    Ok(RetractionTable {
        entries,
        mpe_probability: state.mpe_probability(),
    })
}

/// What retracting one observation does to the MPE identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetractionVerdict {
    /// `MPE(e) = MPE(e - X)`.
    IdentityPreservedStrictly,
    /// `MPE(e) ⊂ MPE(e - X)`: another value of `X` ties.
    IdentityEnlarged,
    /// Some other value of `X` does strictly better once `X` is retracted.
    IdentityChanges,
}

pub fn retraction_verdict(
    table: &RetractionTable,
    e: &Evidence,
    var: VarId,
) -> Result<RetractionVerdict, SensitivityError> {
    let observed = e.get(var).ok_or(SensitivityError::NotInEvidence(var))?;
    let mpe = table.mpe_probability;
    let mut verdict = RetractionVerdict::IdentityPreservedStrictly;
    for (x, &alt) in table.entries(var).iter().enumerate() {
        if x == observed {
            continue;
        }
        if ties(alt, mpe) {
            verdict = RetractionVerdict::IdentityEnlarged;
        } else if alt > mpe {
            return Ok(RetractionVerdict::IdentityChanges);
        }
    }
    Ok(verdict)
}

/// Verdicts for every observed variable, in variable order.
pub fn retraction_analysis(table: &RetractionTable, e: &Evidence) -> Vec<(VarId, RetractionVerdict)> {
    e.iter()
        .map(|(v, _)| (v, retraction_verdict(table, e, v).expect("variable is observed")))
        .collect()
}

/// Which values an unobserved variable takes across the MPE solutions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplicity {
    /// Every MPE solution assigns this value.
    Forced(usize),
    /// MPE solutions exist for each of these values.
    Multiple(Vec<usize>),
}

pub fn variable_multiplicity(
    table: &RetractionTable,
    e: &Evidence,
    var: VarId,
) -> Result<Multiplicity, SensitivityError> {
    if e.contains(var) {
        return Err(SensitivityError::InEvidence(var));
    }
    let entries = table.entries(var);
    let best = entries.iter().copied().fold(0.0, f64::max);
    let tying: Vec<usize> = (0..entries.len())
        .filter(|&x| ties(entries[x], best))
        .collect();
    Ok(match tying[..] {
        [x] => Multiplicity::Forced(x),
        _ => Multiplicity::Multiple(tying),
    })
}

/// Multiplicity of every unobserved variable, in variable order.
pub fn mpe_multiplicity(table: &RetractionTable, e: &Evidence) -> Vec<(VarId, Multiplicity)> {
    (0..table.num_variables())
        .map(VarId)
        .filter(|&v| !e.contains(v))
        .map(|v| (v, variable_multiplicity(table, e, v).expect("variable is unobserved")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile;
    use crate::engine::run_dmaxc;
    use crate::model::{load_network, BayesianNetwork};

    const AB: &str = include_str!("../../fixtures/ab.json");

    fn table(net: &BayesianNetwork, e: &str) -> (Evidence, RetractionTable) {
        let (_, c) = compile(net);
        let e = Evidence::parse(net, e).unwrap();
        let state = run_dmaxc(&c, &e).unwrap();
        (e.clone(), retraction_table(&state, &c).unwrap())
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    fn uniform_pair() -> BayesianNetwork {
        load_network(
            r#"{"variables":[{"name":"X","values":["x","x_bar"]},{"name":"Y","values":["y","y_bar"]}],
                "cpts":[{"child":"X","table":[[0.5,0.5]]},
                        {"child":"Y","parents":["X"],"table":[[0.5,0.5],[0.5,0.5]]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn fixture_table_under_a() {
        let net = load_network(AB).unwrap();
        let (_, t) = table(&net, "A=a");
        let expected = [[0.4, 0.3], [0.1, 0.4]];
        for (v, row) in expected.iter().enumerate() {
            for (x, want) in row.iter().enumerate() {
                assert!(close(t.entry(VarId(v), x), *want), "{v} {x}");
            }
        }
    }

    #[test]
    fn observed_entry_equals_mpe() {
        let net = load_network(AB).unwrap();
        let (_, t) = table(&net, "A=a B=b");
        assert!(close(t.entry(VarId(0), 0), t.mpe_probability()));
        assert!(close(t.entry(VarId(1), 0), t.mpe_probability()));
        assert!(close(t.entry(VarId(1), 1), 0.4));
    }

    #[test]
    fn verdicts() {
        let net = load_network(AB).unwrap();
        let (e, t) = table(&net, "A=a");
        assert_eq!(
            retraction_verdict(&t, &e, VarId(0)),
            Ok(RetractionVerdict::IdentityPreservedStrictly)
        );
        assert_eq!(
            retraction_verdict(&t, &e, VarId(1)),
            Err(SensitivityError::NotInEvidence(VarId(1)))
        );
        let (e, t) = table(&net, "A=a_bar");
        assert_eq!(
            retraction_analysis(&t, &e),
            vec![(VarId(0), RetractionVerdict::IdentityChanges)]
        );
        let sym = uniform_pair();
        let (e, t) = table(&sym, "X=x");
        assert_eq!(
            retraction_verdict(&t, &e, VarId(0)),
            Ok(RetractionVerdict::IdentityEnlarged)
        );
    }

    #[test]
    fn multiplicity() {
        let net = load_network(AB).unwrap();
        let (e, t) = table(&net, "A=a");
        assert_eq!(mpe_multiplicity(&t, &e), vec![(VarId(1), Multiplicity::Forced(1))]);
        assert_eq!(
            variable_multiplicity(&t, &e, VarId(0)),
            Err(SensitivityError::InEvidence(VarId(0)))
        );
        let (e, t) = table(&net, "");
        assert_eq!(variable_multiplicity(&t, &e, VarId(0)), Ok(Multiplicity::Forced(0)));

        let sym = uniform_pair();
        let (e, t) = table(&sym, "");
        for (_, m) in mpe_multiplicity(&t, &e) {
            assert_eq!(m, Multiplicity::Multiple(vec![0, 1]));
        }
    }
}
