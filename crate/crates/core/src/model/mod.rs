//! Discrete Bayesian networks.
//!
//! A network is a list of [`Variable`]s plus one [`Cpt`] per variable. CPT rows
//! are indexed lexicographically over the parent instantiations: parents in
//! declared order, values in declared order, the last parent varying fastest.
//! A [`BayesianNetwork`] can only be obtained through validation and is
//! immutable afterwards.

mod format;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{load_network, serialize_network, CptDocument, NetworkDocument};
pub use validate::{validate_network, Violation};

/// Maximum allowed deviation of a CPT row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub values: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, values: impl IntoIterator<Item = S>) -> Self {
        Variable {
            name: name.into(),
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// Conditional probability table of one variable given its parents.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(child: VarId, parents: Vec<VarId>, rows: Vec<Vec<f64>>) -> Self {
        Cpt {
            child,
            parents,
            rows,
        }
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.rows[row]
    }
}

/// One CPT cell: the parameter for `value` of `var` under parent row `row`.
///
/// `row` encodes the parent instantiation in the lexicographic row order; use
/// [`BayesianNetwork::parent_values`] to decode it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParameterRef {
    pub var: VarId,
    pub row: usize,
    pub value: usize,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid network: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}` has no value `{value}`")]
    UnknownValue { variable: String, value: String },
    #[error("malformed evidence token `{0}`, expected Var=value")]
    EvidenceToken(String),
    #[error("variable `{0}` is assigned more than once")]
    DuplicateAssignment(String),
    #[error("variable index {0} is out of range")]
    VarOutOfRange(usize),
    #[error("value index {value} is out of range for variable `{variable}`")]
    ValueOutOfRange { variable: String, value: usize },
    #[error("instantiation assigns {found} variables, the network has {expected}")]
    Incomplete { expected: usize, found: usize },
    #[error("row {row} of `{variable}` is not a valid replacement row")]
    InvalidRow { variable: String, row: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// A validated Bayesian network.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    variables: Vec<Variable>,
    /// Indexed by child variable.
    cpts: Vec<Cpt>,
}

impl BayesianNetwork {
    /// Builds and validates a network. CPTs may be given in any order.
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self, ModelError> {
        let violations = validate::check_parts(&variables, &cpts);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let mut cpts = cpts;
        cpts.sort_by_key(|c| c.child);
        Ok(BayesianNetwork { variables, cpts })
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.variables[var.0]
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.variables.len()).map(VarId)
    }

    pub fn cardinality(&self, var: VarId) -> usize {
        self.variables[var.0].cardinality()
    }

    pub fn cpt(&self, var: VarId) -> &Cpt {
        &self.cpts[var.0]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn find_variable(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn num_rows(&self, var: VarId) -> usize {
        self.cpts[var.0].rows.len()
    }

    /// Row of `var`'s CPT selected by the parent values `value_of` reports.
    pub fn row_index(&self, var: VarId, value_of: impl Fn(VarId) -> usize) -> usize {
        self.cpts[var.0]
            .parents
            .iter()
            .fold(0, |acc, &p| acc * self.cardinality(p) + value_of(p))
    }

    /// Decodes a row index into the parent values, in declared parent order.
    pub fn parent_values(&self, var: VarId, row: usize) -> Vec<usize> {
        let parents = &self.cpts[var.0].parents;
        let mut out = vec![0; parents.len()];
        let mut rest = row;
        for (slot, &p) in out.iter_mut().zip(parents).rev() {
            let card = self.cardinality(p);
            *slot = rest % card;
            rest /= card;
        }
        out
    }

    pub fn theta(&self, p: ParameterRef) -> f64 {
        self.cpts[p.var.0].rows[p.row][p.value]
    }

    /// Every CPT cell, ordered by variable, row, value.
    pub fn parameters(&self) -> impl Iterator<Item = ParameterRef> + '_ {
        self.cpts.iter().flat_map(move |cpt| {
            let var = cpt.child;
            let card = self.cardinality(var);
            (0..cpt.rows.len())
                .flat_map(move |row| (0..card).map(move |value| ParameterRef { var, row, value }))
        })
    }

    pub fn num_parameters(&self) -> usize {
        self.cpts.iter().map(|c| c.rows.len() * c.rows[0].len()).sum()
    }

    /// Number of complete instantiations, `None` on overflow.
    pub fn num_instantiations(&self) -> Option<u64> {
        self.variables
            .iter()
            .try_fold(1u64, |acc, v| acc.checked_mul(v.cardinality() as u64))
    }

    /// Returns a copy with one CPT row replaced. The new row must hold
    /// probabilities that sum to 1 within [`ROW_SUM_TOLERANCE`].
    pub fn with_row(&self, var: VarId, row: usize, values: Vec<f64>) -> Result<Self, ModelError> {
        let bad = || ModelError::InvalidRow {
            variable: self.variable(var).name.clone(),
            row,
        };
        if var.0 >= self.num_variables() || row >= self.num_rows(var) {
            return Err(bad());
        }
        let sum: f64 = values.iter().sum();
        if values.len() != self.cardinality(var)
            || values.iter().any(|p| !(0.0..=1.0).contains(p))
            || (sum - 1.0).abs() > ROW_SUM_TOLERANCE
        {
            return Err(bad());
        }
        let mut net = self.clone();
        net.cpts[var.0].rows[row] = values;
        Ok(net)
    }

    /// Human-readable label of a parameter, e.g. `θ(B=b_bar | A=a)`.
    pub fn describe_parameter(&self, p: ParameterRef) -> String {
        let var = self.variable(p.var);
        let parents = self.cpts[p.var.0].parents.iter().zip(self.parent_values(p.var, p.row));
        let given: Vec<String> = parents
            .map(|(&u, val)| format!("{}={}", self.variable(u).name, self.variable(u).values[val]))
            .collect();
        if given.is_empty() {
            format!("θ({}={})", var.name, var.values[p.value])
        } else {
            format!("θ({}={} | {})", var.name, var.values[p.value], given.join(", "))
        }
    }

    /// `Var=value` pairs for everything `a` assigns, in variable order.
    pub fn describe_assignment(&self, a: &impl Assignment) -> String {
        a.assigned()
            .into_iter()
            .map(|(v, x)| format!("{}={}", self.variable(v).name, self.variable(v).values[x]))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub(crate) fn check_reference(&self, var: VarId, value: usize) -> Result<(), ModelError> {
        let v = self
            .variables
            .get(var.0)
            .ok_or(ModelError::VarOutOfRange(var.0))?;
        if value >= v.cardinality() {
            return Err(ModelError::ValueOutOfRange {
                variable: v.name.clone(),
                value,
            });
        }
        Ok(())
    }
}

/// Read access shared by complete instantiations and partial evidence.
pub trait Assignment {
    fn value_of(&self, var: VarId) -> Option<usize>;
    /// Assigned `(variable, value)` pairs in variable order.
    fn assigned(&self) -> Vec<(VarId, usize)>;
}

/// A complete instantiation: one value index per network variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instantiation(Vec<usize>);

impl Instantiation {
    pub fn new(values: Vec<usize>) -> Self {
        Instantiation(values)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn value(&self, var: VarId) -> usize {
        self.0[var.0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses `Var=value` tokens naming every variable exactly once.
    pub fn parse(net: &BayesianNetwork, text: &str) -> Result<Self, ModelError> {
        let e = Evidence::parse(net, text)?;
        if e.len() != net.num_variables() {
            return Err(ModelError::Incomplete {
                expected: net.num_variables(),
                found: e.len(),
            });
        }
        Ok(Instantiation(e.assigned().into_iter().map(|(_, x)| x).collect()))
    }
}

impl Assignment for Instantiation {
    fn value_of(&self, var: VarId) -> Option<usize> {
        self.0.get(var.0).copied()
    }

    fn assigned(&self) -> Vec<(VarId, usize)> {
        self.0.iter().enumerate().map(|(i, &x)| (VarId(i), x)).collect()
    }
}

/// Partial assignment of observed variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Evidence(BTreeMap<VarId, usize>);

impl Evidence {
    pub fn empty() -> Self {
        Evidence::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Self {
        Evidence(pairs.into_iter().collect())
    }

    /// Parses whitespace-separated `Var=value` tokens.
    pub fn parse(net: &BayesianNetwork, text: &str) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for token in text.split_whitespace() {
            let (name, value) = token
                .split_once('=')
                .ok_or_else(|| ModelError::EvidenceToken(token.to_string()))?;
            if name.is_empty() || value.is_empty() {
                return Err(ModelError::EvidenceToken(token.to_string()));
            }
            let var = net
                .find_variable(name)
                .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))?;
            let x = net.variable(var).value_index(value).ok_or_else(|| {
                ModelError::UnknownValue {
                    variable: name.to_string(),
                    value: value.to_string(),
                }
            })?;
            if map.insert(var, x).is_some() {
                return Err(ModelError::DuplicateAssignment(name.to_string()));
            }
        }
        Ok(Evidence(map))
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.0.contains_key(&var)
    }

    pub fn set(&mut self, var: VarId, value: usize) {
        self.0.insert(var, value);
    }

    /// Evidence with `var` retracted (`e - X`).
    pub fn without(&self, var: VarId) -> Evidence {
        let mut out = self.clone();
        out.0.remove(&var);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.0.iter().map(|(&v, &x)| (v, x))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that every assignment names a declared variable and value.
    pub fn check(&self, net: &BayesianNetwork) -> Result<(), ModelError> {
        self.iter().try_for_each(|(v, x)| net.check_reference(v, x))
    }
}

impl Assignment for Evidence {
    fn value_of(&self, var: VarId) -> Option<usize> {
        self.get(var)
    }

    fn assigned(&self) -> Vec<(VarId, usize)> {
        self.iter().collect()
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// True iff no variable is assigned different values by `a` and `b`.
pub fn is_compatible(
    net: &BayesianNetwork,
    a: &impl Assignment,
    b: &impl Assignment,
) -> Result<bool, ModelError> {
    let a = a.assigned();
    let b = b.assigned();
    for &(v, x) in a.iter().chain(&b) {
        net.check_reference(v, x)?;
    }
    let b: BTreeMap<VarId, usize> = b.into_iter().collect();
    Ok(a.iter().all(|(v, x)| b.get(v).is_none_or(|y| y == x)))
}

/// Product of the parameters compatible with the complete instantiation `x`.
pub fn joint_probability(net: &BayesianNetwork, x: &Instantiation) -> Result<f64, ModelError> {
    if x.len() != net.num_variables() {
        return Err(ModelError::Incomplete {
            expected: net.num_variables(),
            found: x.len(),
        });
    }
    for (v, val) in x.assigned() {
        net.check_reference(v, val)?;
    }
    Ok(net
        .var_ids()
        .map(|v| {
            let row = net.row_index(v, |p| x.value(p));
            net.cpt(v).rows[row][x.value(v)]
        })
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ab() -> BayesianNetwork {
        BayesianNetwork::new(
            vec![
                Variable::new("A", ["a", "a_bar"]),
                Variable::new("B", ["b", "b_bar"]),
            ],
            vec![
                Cpt::new(VarId(0), vec![], vec![vec![0.5, 0.5]]),
                Cpt::new(VarId(1), vec![VarId(0)], vec![vec![0.2, 0.8], vec![0.6, 0.4]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn joint_probability_of_fixture_instantiations() {
        let net = ab();
        let cases = [([0, 1], 0.4), ([0, 0], 0.1), ([1, 0], 0.3), ([1, 1], 0.2)];
        for (values, expected) in cases {
            let p = joint_probability(&net, &Instantiation::new(values.to_vec())).unwrap();
            assert!((p - expected).abs() < 1e-15, "{values:?}: {p}");
        }
    }

    #[test]
    fn joint_probability_rejects_incomplete() {
        let net = ab();
        let err = joint_probability(&net, &Instantiation::new(vec![0])).unwrap_err();
        assert!(matches!(err, ModelError::Incomplete { expected: 2, found: 1 }));
    }

    #[test]
    fn compatibility() {
        let net = ab();
        let x = Instantiation::new(vec![0, 1]);
        let a = Evidence::parse(&net, "A=a").unwrap();
        let ab = Evidence::parse(&net, "A=a B=b").unwrap();
        assert!(is_compatible(&net, &a, &x).unwrap());
        assert!(!is_compatible(&net, &ab, &x).unwrap());
        assert!(is_compatible(&net, &Evidence::empty(), &x).unwrap());
        let bogus = Evidence::from_pairs([(VarId(7), 0)]);
        assert!(is_compatible(&net, &bogus, &x).is_err());
    }

    #[test]
    fn evidence_parsing_errors() {
        let net = ab();
        assert!(matches!(
            Evidence::parse(&net, "A"),
            Err(ModelError::EvidenceToken(_))
        ));
        assert!(matches!(
            Evidence::parse(&net, "C=c"),
            Err(ModelError::UnknownVariable(_))
        ));
        assert!(matches!(
            Evidence::parse(&net, "A=z"),
            Err(ModelError::UnknownValue { .. })
        ));
        assert!(matches!(
            Evidence::parse(&net, "A=a A=a_bar"),
            Err(ModelError::DuplicateAssignment(_))
        ));
        assert!(Evidence::parse(&net, "  ").unwrap().is_empty());
    }

    #[test]
    fn row_index_round_trips_parent_values() {
        let net = BayesianNetwork::new(
            vec![
                Variable::new("P", ["p0", "p1", "p2"]),
                Variable::new("Q", ["q0", "q1"]),
                Variable::new("C", ["c0", "c1"]),
            ],
            vec![
                Cpt::new(VarId(0), vec![], vec![vec![0.2, 0.3, 0.5]]),
                Cpt::new(VarId(1), vec![], vec![vec![0.5, 0.5]]),
                Cpt::new(VarId(2), vec![VarId(0), VarId(1)], vec![vec![0.5, 0.5]; 6]),
            ],
        )
        .unwrap();
        for row in 0..6 {
            let pv = net.parent_values(VarId(2), row);
            assert_eq!(net.row_index(VarId(2), |p| pv[p.0]), row);
        }
        // last parent varies fastest
        assert_eq!(net.parent_values(VarId(2), 1), vec![0, 1]);
        assert_eq!(net.parent_values(VarId(2), 2), vec![1, 0]);
    }

    #[test]
    fn describe_parameter_names_family() {
        let net = ab();
        let p = ParameterRef { var: VarId(1), row: 0, value: 1 };
        assert_eq!(net.describe_parameter(p), "θ(B=b_bar | A=a)");
        let p = ParameterRef { var: VarId(0), row: 0, value: 0 };
        assert_eq!(net.describe_parameter(p), "θ(A=a)");
    }

    #[test]
    fn with_row_checks_the_replacement() {
        let net = ab();
        let changed = net.with_row(VarId(1), 0, vec![0.4, 0.6]).unwrap();
        assert_eq!(changed.theta(ParameterRef { var: VarId(1), row: 0, value: 1 }), 0.6);
        assert!(net.with_row(VarId(1), 0, vec![0.4, 0.7]).is_err());
        assert!(net.with_row(VarId(1), 2, vec![0.4, 0.6]).is_err());
    }
}
