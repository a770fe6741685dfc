//! Compilation of a network into an arithmetic circuit for its network
//! polynomial.
//!
//! Compilation runs variable elimination symbolically: a factor cell holds a
//! circuit node instead of a number. Each family starts as a factor whose
//! cells are `λ_x · θ_{x|u}`; eliminating a variable multiplies the factors
//! that mention it and combines over its values. Circuit size is therefore
//! bounded by the elimination order's induced width.

mod circuit;
mod order;

use thiserror::Error;

use crate::model::{BayesianNetwork, ParameterRef, VarId};

pub use circuit::{
    check_decomposability, ArithmeticCircuit, CircuitBuilder, CircuitNode, NodeId, NodeKind,
};
pub use order::{induced_width, min_fill_order, EliminationOrder};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("elimination order is not a permutation of the network variables")]
    InvalidOrder,
    #[error("circuit root is not one of its nodes")]
    DanglingRoot,
}

struct Factor {
    /// Ascending variable ids; the last one varies fastest in `cells`.
    scope: Vec<VarId>,
    cells: Vec<NodeId>,
}

impl Factor {
    fn cell(&self, values: &[usize], cards: &[usize]) -> NodeId {
        let idx = self
            .scope
            .iter()
            .fold(0, |acc, v| acc * cards[v.0] + values[v.0]);
        self.cells[idx]
    }
}

/// Visits every assignment of `scope` in row-major order, writing values into
/// the network-wide slot array `values`.
fn for_each_assignment(
    scope: &[VarId],
    cards: &[usize],
    values: &mut [usize],
    mut f: impl FnMut(&[usize]),
) {
    for v in scope {
        values[v.0] = 0;
    }
    loop {
        f(values);
        let mut carried = true;
        for v in scope.iter().rev() {
            values[v.0] += 1;
            if values[v.0] < cards[v.0] {
                carried = false;
                break;
            }
            values[v.0] = 0;
        }
        if carried {
            return;
        }
    }
}

/// Compiles `net` along `order`. The result is deterministic in its inputs.
pub fn compile_circuit(
    net: &BayesianNetwork,
    order: &EliminationOrder,
) -> Result<ArithmeticCircuit, CompileError> {
    if order.order().len() != net.num_variables() {
        return Err(CompileError::InvalidOrder);
    }
    let cards: Vec<usize> = net.var_ids().map(|v| net.cardinality(v)).collect();
    let mut builder = CircuitBuilder::new(net);
    let mut values = vec![0usize; net.num_variables()];

    let mut pool: Vec<Factor> = Vec::with_capacity(net.num_variables());
    for var in net.var_ids() {
        let cpt = net.cpt(var);
        let mut scope: Vec<VarId> = cpt.parents().to_vec();
        scope.push(var);
        scope.sort_unstable();
        let mut cells = Vec::new();
        for_each_assignment(&scope, &cards, &mut values, |vals| {
            let row = net.row_index(var, |p| vals[p.0]);
            let value = vals[var.0];
            let theta = builder.parameter(ParameterRef { var, row, value });
            let lambda = builder.indicator(var, value);
            cells.push(builder.multiply(vec![lambda, theta]));
        });
        pool.push(Factor { scope, cells });
    }

    for &var in order.order() {
        let (bucket, rest): (Vec<Factor>, Vec<Factor>) =
            pool.into_iter().partition(|f| f.scope.contains(&var));
        pool = rest;
        let mut scope: Vec<VarId> = bucket
            .iter()
            .flat_map(|f| f.scope.iter().copied())
            .filter(|&v| v != var)
            .collect();
        scope.sort_unstable();
        scope.dedup();
        let mut cells = Vec::new();
        for_each_assignment(&scope, &cards, &mut values, |vals| {
            let mut vals = vals.to_vec();
            let branches = (0..cards[var.0])
                .map(|x| {
                    vals[var.0] = x;
                    let parts = bucket.iter().map(|f| f.cell(&vals, &cards)).collect();
                    builder.multiply(parts)
                })
                .collect();
            cells.push(builder.combine(branches));
        });
        pool.push(Factor { scope, cells });
    }

    let scalars: Vec<NodeId> = pool
        .iter()
        .map(|f| {
            debug_assert!(f.scope.is_empty());
            f.cells[0]
        })
        .collect();
    let root = builder.multiply(scalars);
    builder.finish(root)
}

/// Compiles along a min-fill order.
pub fn compile(net: &BayesianNetwork) -> (EliminationOrder, ArithmeticCircuit) {
    let order = min_fill_order(net);
    let circuit = compile_circuit(net, &order).expect("min-fill orders are permutations");
    (order, circuit)
}
