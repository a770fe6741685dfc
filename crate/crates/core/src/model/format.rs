//! On-disk network format: a JSON document with a `variables` list (name and
//! ordered values) and a `cpts` list (child, ordered parents, row-major table).
//!
//! ```json
//! {
//!   "variables": [{ "name": "A", "values": ["a", "a_bar"] }],
//!   "cpts": [{ "child": "A", "parents": [], "table": [[0.5, 0.5]] }]
//! }
//! ```

use serde::{Deserialize, Serialize};

use super::{validate, BayesianNetwork, ModelError, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub variables: Vec<Variable>,
    pub cpts: Vec<CptDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptDocument {
    pub child: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub table: Vec<Vec<f64>>,
}

impl NetworkDocument {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }
}

impl BayesianNetwork {
    pub fn from_document(doc: &NetworkDocument) -> Result<Self, ModelError> {
        let (cpts, mut violations) = validate::resolve(doc);
        if !violations.is_empty() {
            violations.extend(validate::check_parts(&doc.variables, &cpts));
            return Err(ModelError::Invalid(violations));
        }
        BayesianNetwork::new(doc.variables.clone(), cpts)
    }

    pub fn to_document(&self) -> NetworkDocument {
        let name = |v: super::VarId| self.variable(v).name.clone();
        NetworkDocument {
            variables: self.variables.clone(),
            cpts: self
                .cpts
                .iter()
                .map(|c| CptDocument {
                    child: name(c.child),
                    parents: c.parents.iter().map(|&p| name(p)).collect(),
                    table: c.rows.clone(),
                })
                .collect(),
        }
    }
}

/// Parses and validates a network document.
pub fn load_network(text: &str) -> Result<BayesianNetwork, ModelError> {
    BayesianNetwork::from_document(&NetworkDocument::parse(text)?)
}

pub fn serialize_network(net: &BayesianNetwork) -> String {
    serde_json::to_string_pretty(&net.to_document()).expect("network documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{VarId, Violation};

    const AB: &str = r#"{
        "variables": [
            { "name": "A", "values": ["a", "a_bar"] },
            { "name": "B", "values": ["b", "b_bar"] }
        ],
        "cpts": [
            { "child": "B", "parents": ["A"], "table": [[0.2, 0.8], [0.6, 0.4]] },
            { "child": "A", "parents": [], "table": [[0.5, 0.5]] }
        ]
    }"#;

    #[test]
    fn loads_fixture() {
        let net = load_network(AB).unwrap();
        assert_eq!(net.num_variables(), 2);
        assert_eq!(net.cpt(VarId(1)).rows(), &[vec![0.2, 0.8], vec![0.6, 0.4]]);
        assert_eq!(net.cpt(VarId(1)).parents(), &[VarId(0)]);
        assert_eq!(net.variable(VarId(1)).values, vec!["b", "b_bar"]);
    }

    #[test]
    fn single_root() {
        let net = load_network(
            r#"{"variables":[{"name":"X","values":["x","x_bar"]}],
                "cpts":[{"child":"X","table":[[0.5,0.5]]}]}"#,
        )
        .unwrap();
        assert_eq!(net.num_variables(), 1);
        assert_eq!(net.num_parameters(), 2);
    }

    #[test]
    fn row_sum_violation_is_a_validation_error() {
        let text = AB.replace("[0.2, 0.8]", "[0.2, 0.7]");
        match load_network(&text) {
            Err(ModelError::Invalid(v)) => {
                assert!(matches!(&v[..], [Violation::RowSum { row: 0, .. }]))
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        assert!(matches!(load_network("{ \"variables\": "), Err(ModelError::Parse(_))));
        assert!(matches!(
            load_network(r#"{"variables":[],"cpts":[],"extra":1}"#),
            Err(ModelError::Parse(_))
        ));
    }

    #[test]
    fn unknown_parent_is_a_validation_error() {
        let text = AB.replace("\"parents\": [\"A\"]", "\"parents\": [\"Q\"]");
        assert!(matches!(load_network(&text), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn serialize_then_load_is_identity() {
        let net = load_network(AB).unwrap();
        let again = load_network(&serialize_network(&net)).unwrap();
        assert_eq!(net, again);
    }
}
