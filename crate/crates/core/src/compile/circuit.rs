use std::collections::HashMap;
use std::fmt::Write as _;

use crate::model::{BayesianNetwork, ParameterRef, VarId};

use super::CompileError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Addition under sum semantics, maximization under max semantics.
    Combine,
    Multiply,
    Parameter { param: ParameterRef, theta: f64 },
    Indicator { var: VarId, value: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitNode {
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
}

impl CircuitNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Rooted DAG over parameter and indicator leaves, stored children first.
#[derive(Debug, Clone)]
pub struct ArithmeticCircuit {
    nodes: Vec<CircuitNode>,
    root: NodeId,
    cardinalities: Vec<usize>,
    /// Per variable, indexed by `row * cardinality + value`.
    param_leaves: Vec<Vec<NodeId>>,
    indicator_leaves: Vec<Vec<NodeId>>,
}

impl ArithmeticCircuit {
    pub fn nodes(&self) -> &[CircuitNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &CircuitNode {
        &self.nodes[id.index()]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }

    pub fn num_variables(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinality(&self, var: VarId) -> usize {
        self.cardinalities[var.0]
    }

    pub fn num_rows(&self, var: VarId) -> usize {
        self.param_leaves[var.0].len() / self.cardinalities[var.0]
    }

    pub fn param_leaf(&self, p: ParameterRef) -> NodeId {
        self.param_leaves[p.var.0][p.row * self.cardinalities[p.var.0] + p.value]
    }

    pub fn indicator_leaf(&self, var: VarId, value: usize) -> NodeId {
        self.indicator_leaves[var.0][value]
    }

    /// Debug listing, one node per line: `id kind children... [label]`.
    pub fn dump(&self, net: &BayesianNetwork) -> String {
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let kind = match &node.kind {
                NodeKind::Combine => "+",
                NodeKind::Multiply => "*",
                NodeKind::Parameter { .. } => "theta",
                NodeKind::Indicator { .. } => "lambda",
            };
            write!(out, "{i} {kind}").unwrap();
            for c in &node.children {
                write!(out, " {}", c.0).unwrap();
            }
            match &node.kind {
                NodeKind::Parameter { param, theta } => {
                    write!(out, " [{} = {theta}]", net.describe_parameter(*param)).unwrap()
                }
                NodeKind::Indicator { var, value } => {
                    let v = net.variable(*var);
                    write!(out, " [λ({}={})]", v.name, v.values[*value]).unwrap()
                }
                _ => {}
            }
            out.push('\n');
        }
        out
    }
}

/// Incremental circuit construction with structural hashing.
///
/// Every parameter and indicator leaf of the network is created up front,
/// so the node list is topologically ordered by construction.
pub struct CircuitBuilder {
    nodes: Vec<CircuitNode>,
    cardinalities: Vec<usize>,
    param_leaves: Vec<Vec<NodeId>>,
    indicator_leaves: Vec<Vec<NodeId>>,
    interned: HashMap<(bool, Vec<NodeId>), NodeId>,
}

impl CircuitBuilder {
    pub fn new(net: &BayesianNetwork) -> Self {
        let mut b = CircuitBuilder {
            nodes: Vec::new(),
            cardinalities: net.var_ids().map(|v| net.cardinality(v)).collect(),
            param_leaves: Vec::new(),
            indicator_leaves: Vec::new(),
            interned: HashMap::new(),
        };
        for var in net.var_ids() {
            let leaves = (0..net.cardinality(var))
                .map(|value| b.push(NodeKind::Indicator { var, value }, Vec::new()))
                .collect();
            b.indicator_leaves.push(leaves);
        }
        for var in net.var_ids() {
            let card = net.cardinality(var);
            let mut leaves = Vec::with_capacity(net.num_rows(var) * card);
            for (row, probs) in net.cpt(var).rows().iter().enumerate() {
                for (value, &theta) in probs.iter().enumerate() {
                    let param = ParameterRef { var, row, value };
                    leaves.push(b.push(NodeKind::Parameter { param, theta }, Vec::new()));
                }
            }
            b.param_leaves.push(leaves);
        }
        b
    }

    fn push(&mut self, kind: NodeKind, children: Vec<NodeId>) -> NodeId {
        let id = NodeId(u32::try_from(self.nodes.len()).expect("circuit exceeds u32 node ids"));
        self.nodes.push(CircuitNode { kind, children });
        id
    }

    pub fn indicator(&self, var: VarId, value: usize) -> NodeId {
        self.indicator_leaves[var.0][value]
    }

    pub fn parameter(&self, p: ParameterRef) -> NodeId {
        self.param_leaves[p.var.0][p.row * self.cardinalities[p.var.0] + p.value]
    }

    /// Product node; a single child is returned as is. Children are sorted so
    /// that equal products share one node.
    pub fn multiply(&mut self, mut children: Vec<NodeId>) -> NodeId {
        assert!(!children.is_empty(), "multiply needs a child");
        if children.len() == 1 {
            return children[0];
        }
        children.sort_unstable();
        self.intern(true, children)
    }

    /// Combine node; child order is kept because it fixes MPE tie-breaking.
    pub fn combine(&mut self, children: Vec<NodeId>) -> NodeId {
        assert!(!children.is_empty(), "combine needs a child");
        if children.len() == 1 {
            return children[0];
        }
        self.intern(false, children)
    }

    fn intern(&mut self, multiply: bool, children: Vec<NodeId>) -> NodeId {
        if let Some(&id) = self.interned.get(&(multiply, children.clone())) {
            return id;
        }
        let kind = if multiply {
            NodeKind::Multiply
        } else {
            NodeKind::Combine
        };
        let id = self.push(kind, children.clone());
        self.interned.insert((multiply, children), id);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn finish(self, root: NodeId) -> Result<ArithmeticCircuit, CompileError> {
        if root.index() >= self.nodes.len() {
            return Err(CompileError::DanglingRoot);
        }
        Ok(ArithmeticCircuit {
            nodes: self.nodes,
            root,
            cardinalities: self.cardinalities,
            param_leaves: self.param_leaves,
            indicator_leaves: self.indicator_leaves,
        })
    }
}

/// Fixed-width bit set over `2n` slots: indicator variables, then families.
#[derive(Clone)]
struct Scope(Vec<u64>);

impl Scope {
    fn empty(bits: usize) -> Self {
        Scope(vec![0; bits.div_ceil(64)])
    }

    fn insert(&mut self, bit: usize) {
        self.0[bit / 64] |= 1 << (bit % 64);
    }

    fn intersects(&self, other: &Scope) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }

    fn union_with(&mut self, other: &Scope) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }
}

/// Multiply nodes whose children share a network variable (through indicator
/// leaves) or a CPT (through parameter leaves).
pub fn check_decomposability(circuit: &ArithmeticCircuit) -> Vec<NodeId> {
    let n = circuit.num_variables();
    let mut scopes: Vec<Scope> = Vec::with_capacity(circuit.len());
    let mut violations = Vec::new();
    for (i, node) in circuit.nodes.iter().enumerate() {
        let mut scope = Scope::empty(2 * n);
        match &node.kind {
            NodeKind::Indicator { var, .. } => scope.insert(var.0),
            NodeKind::Parameter { param, .. } => scope.insert(n + param.var.0),
            NodeKind::Combine => {
                for c in &node.children {
                    scope.union_with(&scopes[c.index()]);
                }
            }
            NodeKind::Multiply => {
                let mut clash = false;
                for c in &node.children {
                    let child = &scopes[c.index()];
                    clash |= scope.intersects(child);
                    scope.union_with(child);
                }
                if clash {
                    violations.push(NodeId(i as u32));
                }
            }
        }
        scopes.push(scope);
    }
    violations
}
