use std::collections::BTreeSet;

use crate::model::{BayesianNetwork, VarId};

use super::CompileError;

/// A variable elimination order and the induced width it produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrder {
    order: Vec<VarId>,
    width: usize,
}

impl EliminationOrder {
    /// Wraps a caller-supplied order, which must be a permutation of the
    /// network's variables.
    pub fn new(net: &BayesianNetwork, order: Vec<VarId>) -> Result<Self, CompileError> {
        let n = net.num_variables();
        let mut seen = vec![false; n];
        for &v in &order {
            if v.0 >= n || std::mem::replace(&mut seen[v.0], true) {
                return Err(CompileError::InvalidOrder);
            }
        }
        if order.len() != n {
            return Err(CompileError::InvalidOrder);
        }
        let width = induced_width(net, &order);
        Ok(EliminationOrder { order, width })
    }

    pub fn order(&self) -> &[VarId] {
        &self.order
    }

    /// Largest clique size minus one created while eliminating.
    pub fn width(&self) -> usize {
        self.width
    }
}

fn moral_graph(net: &BayesianNetwork) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); net.num_variables()];
    for cpt in net.cpts() {
        let family: Vec<usize> = cpt
            .parents()
            .iter()
            .chain(std::iter::once(&cpt.child()))
            .map(|v| v.0)
            .collect();
        for (i, &a) in family.iter().enumerate() {
            for &b in &family[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    adj
}

fn eliminate(adj: &mut [BTreeSet<usize>], v: usize) -> usize {
    let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
    for (i, &a) in nbrs.iter().enumerate() {
        adj[a].remove(&v);
        for &b in &nbrs[i + 1..] {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    nbrs.len()
}

fn fill_in(adj: &[BTreeSet<usize>], v: usize) -> usize {
    let nbrs: Vec<usize> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        missing += nbrs[i + 1..].iter().filter(|b| !adj[a].contains(b)).count();
    }
    missing
}

/// Induced width of `order` on the moral graph.
pub fn induced_width(net: &BayesianNetwork, order: &[VarId]) -> usize {
    let mut adj = moral_graph(net);
    order
        .iter()
        .map(|v| eliminate(&mut adj, v.0))
        .max()
        .unwrap_or(0)
}

/// Greedy min-fill order over the moral graph. Ties go to the variable
/// declared first.
pub fn min_fill_order(net: &BayesianNetwork) -> EliminationOrder {
    let n = net.num_variables();
    let mut adj = moral_graph(net);
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    let mut width = 0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (fill_in(&adj, v), v))
            .expect("a live variable remains");
        alive[v] = false;
        width = width.max(eliminate(&mut adj, v));
        order.push(VarId(v));
    }
    EliminationOrder { order, width }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cpt, Variable};

    fn binary(name: String) -> Variable {
        Variable::new(name.clone(), [format!("{name}0"), format!("{name}1")])
    }

    fn chain(n: usize) -> BayesianNetwork {
        let vars = (0..n).map(|i| binary(format!("X{i}"))).collect();
        let cpts = (0..n)
            .map(|i| {
                if i == 0 {
                    Cpt::new(VarId(0), vec![], vec![vec![0.3, 0.7]])
                } else {
                    Cpt::new(VarId(i), vec![VarId(i - 1)], vec![vec![0.9, 0.1], vec![0.4, 0.6]])
                }
            })
            .collect();
        BayesianNetwork::new(vars, cpts).unwrap()
    }

    #[test]
    fn single_edge_has_width_one() {
        let net = chain(2);
        let order = min_fill_order(&net);
        assert_eq!(order.width(), 1);
        assert_eq!(order.order(), &[VarId(0), VarId(1)]);
    }

    #[test]
    fn chain_of_ten_has_width_one() {
        assert_eq!(min_fill_order(&chain(10)).width(), 1);
    }

    #[test]
    fn three_parent_child_has_width_three() {
        // Moral graph of P0,P1,P2 -> C is K4: whichever vertex goes first
        // has three neighbours that are already pairwise adjacent.
        let vars = (0..4).map(|i| binary(format!("V{i}"))).collect();
        let mut cpts: Vec<Cpt> = (0..3)
            .map(|i| Cpt::new(VarId(i), vec![], vec![vec![0.5, 0.5]]))
            .collect();
        cpts.push(Cpt::new(
            VarId(3),
            vec![VarId(0), VarId(1), VarId(2)],
            vec![vec![0.5, 0.5]; 8],
        ));
        let net = BayesianNetwork::new(vars, cpts).unwrap();
        let order = min_fill_order(&net);
        assert_eq!(order.width(), 3);
        assert_eq!(induced_width(&net, order.order()), 3);
    }

    #[test]
    fn bad_orders_are_rejected() {
        let net = chain(3);
        assert!(EliminationOrder::new(&net, vec![VarId(0), VarId(1)]).is_err());
        assert!(EliminationOrder::new(&net, vec![VarId(0), VarId(0), VarId(1)]).is_err());
        assert!(EliminationOrder::new(&net, vec![VarId(0), VarId(1), VarId(5)]).is_err());
        let ok = EliminationOrder::new(&net, vec![VarId(1), VarId(0), VarId(2)]).unwrap();
        // eliminating the middle of a chain first joins its two neighbours
        assert_eq!(ok.width(), 2);
    }
}
