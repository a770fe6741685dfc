//! Circuit passes: sum evaluation, max evaluation with MPE extraction, and
//! the downward register pass that yields every parameter's MPE coefficient.

use thiserror::Error;

use crate::compile::{ArithmeticCircuit, NodeId, NodeKind};
use crate::model::{Evidence, Instantiation, VarId};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("evidence assigns value {value} to variable {var}, which the circuit does not have")]
    InvalidEvidence { var: VarId, value: usize },
    #[error("evidence has probability zero; there is no MPE witness")]
    ZeroProbability,
    #[error("MPE sub-circuit is inconsistent at variable {0}")]
    InconsistentSubCircuit(VarId),
}

/// Indicator values: `λ_x = 0` iff `x` contradicts the evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSetting(Vec<Vec<f64>>);

impl IndicatorSetting {
    pub fn new(circuit: &ArithmeticCircuit, e: &Evidence) -> Result<Self, EngineError> {
        let mut values: Vec<Vec<f64>> = (0..circuit.num_variables())
            .map(|v| vec![1.0; circuit.cardinality(VarId(v))])
            .collect();
        for (var, value) in e.iter() {
            let row = values
                .get_mut(var.0)
                .filter(|row| value < row.len())
                .ok_or(EngineError::InvalidEvidence { var, value })?;
            row.iter_mut().for_each(|l| *l = 0.0);
            row[value] = 1.0;
        }
        Ok(IndicatorSetting(values))
    }

    pub fn get(&self, var: VarId, value: usize) -> f64 {
        self.0[var.0][value]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Semantics {
    Sum,
    Max,
}

fn upward(
    circuit: &ArithmeticCircuit,
    e: &Evidence,
    semantics: Semantics,
) -> Result<Vec<f64>, EngineError> {
    let lambda = IndicatorSetting::new(circuit, e)?;
    let mut p = Vec::with_capacity(circuit.len());
    for node in circuit.nodes() {
        let value = match &node.kind {
            NodeKind::Parameter { theta, .. } => *theta,
            NodeKind::Indicator { var, value } => lambda.get(*var, *value),
            NodeKind::Multiply => node.children.iter().map(|c| p[c.index()]).product(),
            NodeKind::Combine => {
                let vals = node.children.iter().map(|c| p[c.index()]);
                match semantics {
                    Semantics::Sum => vals.sum(),
                    Semantics::Max => vals.fold(0.0, f64::max),
                }
            }
        };
        p.push(value);
    }
    Ok(p)
}

/// `Pr(e)`: the circuit evaluated with combine nodes as additions.
pub fn evaluate_sum(circuit: &ArithmeticCircuit, e: &Evidence) -> Result<f64, EngineError> {
    Ok(upward(circuit, e, Semantics::Sum)?[circuit.root().index()])
}

/// Node values and registers for one evidence query.
///
/// `p` holds the max-semantics value of every node. `r` is empty after
/// [`evaluate_max`] and holds the downward registers after [`run_dmaxc`].
#[derive(Debug, Clone)]
pub struct EvaluationState {
    evidence: Evidence,
    p: Vec<f64>,
    r: Vec<f64>,
}

impl EvaluationState {
    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn p(&self, node: NodeId) -> f64 {
        self.p[node.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn has_registers(&self) -> bool {
        !self.r.is_empty()
    }

    /// Register of `node`. Panics unless the state came from [`run_dmaxc`].
    pub fn r(&self, node: NodeId) -> f64 {
        assert!(self.has_registers(), "registers are filled by run_dmaxc");
        self.r[node.index()]
    }

    pub fn registers(&self) -> &[f64] {
        &self.r
    }

    /// `MPE_p(e)`, the root value under max semantics.
    pub fn mpe_probability(&self) -> f64 {
        *self.p.last().expect("circuits are non-empty")
    }
}

/// Bottom-up pass with combine nodes read as maximizations.
pub fn evaluate_max(
    circuit: &ArithmeticCircuit,
    e: &Evidence,
) -> Result<EvaluationState, EngineError> {
    let mut p = upward(circuit, e, Semantics::Max)?;
    // Nodes past the root are unreachable from it; only builder-made circuits
    // can have them. Keep `p.last()` meaning the root value.
    p.truncate(circuit.root().index() + 1);
    Ok(EvaluationState {
        evidence: e.clone(),
        p,
        r: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpeResult {
    pub probability: f64,
    pub witness: Instantiation,
}

/// Walks the MPE sub-circuit: every child of a multiply node, and the
/// lowest-index child matching the value of each maximization node.
pub fn extract_mpe(
    circuit: &ArithmeticCircuit,
    state: &EvaluationState,
) -> Result<MpeResult, EngineError> {
    let probability = state.p(circuit.root());
    if probability <= 0.0 {
        return Err(EngineError::ZeroProbability);
    }
    let mut assigned: Vec<Option<usize>> = vec![None; circuit.num_variables()];
    let mut visited = vec![false; circuit.root().index() + 1];
    let mut stack = vec![circuit.root()];
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut visited[id.index()], true) {
            continue;
        }
        let node = circuit.node(id);
        match &node.kind {
            NodeKind::Multiply => stack.extend(node.children.iter().copied()),
            NodeKind::Combine => {
                let target = state.p(id);
                let pick = node
                    .children
                    .iter()
                    .copied()
                    .find(|&c| state.p(c) == target)
                    .expect("a maximization node equals one of its children");
                stack.push(pick);
            }
            NodeKind::Indicator { var, value } => match assigned[var.0] {
                Some(prev) if prev != *value => {
                    return Err(EngineError::InconsistentSubCircuit(*var))
                }
                _ => assigned[var.0] = Some(*value),
            },
            NodeKind::Parameter { .. } => {}
        }
    }
    let values = assigned
        .iter()
        .enumerate()
        .map(|(v, x)| x.ok_or(EngineError::InconsistentSubCircuit(VarId(v))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MpeResult {
        probability,
        witness: Instantiation::new(values),
    })
}

/// Max evaluation followed by the downward register pass.
///
/// Registers start at 1 for the root and 0 elsewhere; nodes are visited
/// parents first. A maximization node passes its register to each child; a
/// multiply node passes its register times the product of the other
/// children's values. Sibling products come from prefix and suffix products,
/// so zero-valued children never cause a division.
///
/// Afterwards `r[θ_{x|u}]` is the coefficient `r(e, xu)` and `r[λ_x]` is
/// `MPE_p(e - X, x)`.
pub fn run_dmaxc(
    circuit: &ArithmeticCircuit,
    e: &Evidence,
) -> Result<EvaluationState, EngineError> {
    let mut state = evaluate_max(circuit, e)?;
    let n = state.p.len();
    let mut r = vec![0.0_f64; n];
    r[n - 1] = 1.0;
    let mut suffix = Vec::new();
    for i in (0..n).rev() {
        let rv = r[i];
        let node = &circuit.nodes()[i];
        match node.kind {
            NodeKind::Combine => {
                for c in &node.children {
                    let slot = &mut r[c.index()];
                    *slot = slot.max(rv);
                }
            }
            NodeKind::Multiply => {
                let kids = &node.children;
                suffix.clear();
                suffix.resize(kids.len() + 1, 1.0);
                for j in (0..kids.len()).rev() {
                    suffix[j] = suffix[j + 1] * state.p[kids[j].index()];
                }
                let mut prefix = 1.0;
                for (j, c) in kids.iter().enumerate() {
                    let candidate = rv * prefix * suffix[j + 1];
                    let slot = &mut r[c.index()];
                    *slot = slot.max(candidate);
                    prefix *= state.p[c.index()];
                }
            }
            NodeKind::Parameter { .. } | NodeKind::Indicator { .. } => {}
        }
    }
    state.r = r;
    Ok(state)
}
