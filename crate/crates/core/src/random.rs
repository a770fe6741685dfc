//! Seed-reproducible random networks and evidence for the equivalence checks.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::model::{BayesianNetwork, Cpt, Evidence, VarId, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomNetworkConfig {
    pub min_variables: usize,
    pub max_variables: usize,
    pub min_cardinality: usize,
    pub max_cardinality: usize,
    pub max_parents: usize,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        RandomNetworkConfig {
            min_variables: 3,
            max_variables: 12,
            min_cardinality: 2,
            max_cardinality: 3,
            max_parents: 3,
        }
    }
}

/// A row drawn from the flat Dirichlet: normalized unit exponentials.
pub fn dirichlet_row(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// Variables are topologically ordered by index; parents come from earlier
/// variables only, so the graph is acyclic by construction.
pub fn random_network(rng: &mut impl Rng, config: &RandomNetworkConfig) -> BayesianNetwork {
    let n = rng.random_range(config.min_variables..=config.max_variables);
    let variables: Vec<Variable> = (0..n)
        .map(|i| {
            let card = rng.random_range(config.min_cardinality..=config.max_cardinality);
            Variable::new(format!("X{i}"), (0..card).map(|v| format!("v{v}")))
        })
        .collect();
    let cpts = (0..n)
        .map(|i| {
            let count = rng.random_range(0..=config.max_parents.min(i));
            let mut parents: Vec<VarId> = index::sample(rng, i, count).into_iter().map(VarId).collect();
            parents.sort();
            let rows: usize = parents.iter().map(|p| variables[p.0].cardinality()).product();
            let card = variables[i].cardinality();
            let table = (0..rows).map(|_| dirichlet_row(rng, card)).collect();
            Cpt::new(VarId(i), parents, table)
        })
        .collect();
    BayesianNetwork::new(variables, cpts).expect("generated network is valid")
}

/// Each variable is observed with probability one in three, at a uniform value.
pub fn random_evidence(rng: &mut impl Rng, net: &BayesianNetwork) -> Evidence {
    let mut e = Evidence::empty();
    for v in net.var_ids() {
        if rng.random_bool(1.0 / 3.0) {
            e.set(v, rng.random_range(0..net.cardinality(v)));
        }
    }
    e
}

/// `count` networks, each with `evidence_per_net` evidence settings, all
/// determined by `seed`.
pub fn random_suite(
    seed: u64,
    count: usize,
    evidence_per_net: usize,
) -> Vec<(BayesianNetwork, Vec<Evidence>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = RandomNetworkConfig::default();
    (0..count)
        .map(|_| {
            let net = random_network(&mut rng, &config);
            let evidence = (0..evidence_per_net).map(|_| random_evidence(&mut rng, &net)).collect();
            (net, evidence)
        })
        .collect()
}
