use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::{Cpt, NetworkDocument, VarId, Variable, ROW_SUM_TOLERANCE};

/// One violated network invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("network declares no variables")]
    NoVariables,
    #[error("variable name `{0}` is declared more than once")]
    DuplicateVariable(String),
    #[error("variable `{variable}` declares value `{value}` more than once")]
    DuplicateValue { variable: String, value: String },
    #[error("variable `{0}` needs at least two values")]
    TooFewValues(String),
    #[error("CPT `{cpt}` references unknown variable `{name}`")]
    UnknownVariable { cpt: String, name: String },
    #[error("variable `{0}` has no CPT")]
    MissingCpt(String),
    #[error("variable `{0}` has more than one CPT")]
    DuplicateCpt(String),
    #[error("CPT of `{variable}` lists parent `{parent}` more than once")]
    DuplicateParent { variable: String, parent: String },
    #[error("CPT of `{variable}` has {found} rows, expected {expected}")]
    RowCount {
        variable: String,
        expected: usize,
        found: usize,
    },
    #[error("row {row} of `{variable}` has {found} entries, expected {expected}")]
    RowLength {
        variable: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row} of `{variable}` holds {value}, outside [0, 1]")]
    OutOfRange {
        variable: String,
        row: usize,
        value: f64,
    },
    #[error("row {row} of `{variable}` sums to {sum}")]
    RowSum {
        variable: String,
        row: usize,
        sum: f64,
    },
    #[error("parent relation is cyclic through {}", .0.join(", "))]
    Cycle(Vec<String>),
}

/// Reports every violated invariant of a parsed network document. An empty
/// list means the document describes a valid network.
pub fn validate_network(doc: &NetworkDocument) -> Vec<Violation> {
    let (cpts, mut violations) = resolve(doc);
    violations.extend(check_parts(&doc.variables, &cpts));
    violations
}

/// Translates names into ids. CPTs with unknown names are dropped and
/// reported; a dropped CPT does not also count as missing.
pub(super) fn resolve(doc: &NetworkDocument) -> (Vec<Cpt>, Vec<Violation>) {
    let lookup = |name: &str| doc.variables.iter().position(|v| v.name == name).map(VarId);
    let mut violations = Vec::new();
    let mut cpts = Vec::new();
    for c in &doc.cpts {
        let mut ok = true;
        let mut unknown = |name: &str| {
            ok = false;
            violations.push(Violation::UnknownVariable {
                cpt: c.child.clone(),
                name: name.to_string(),
            });
        };
        let child = lookup(&c.child);
        if child.is_none() {
            unknown(&c.child);
        }
        let mut parents = Vec::with_capacity(c.parents.len());
        for p in &c.parents {
            match lookup(p) {
                Some(id) => parents.push(id),
                None => unknown(p),
            }
        }
        if let (true, Some(child)) = (ok, child) {
            cpts.push(Cpt::new(child, parents, c.table.clone()));
        }
    }
    (cpts, violations)
}

pub(super) fn check_parts(variables: &[Variable], cpts: &[Cpt]) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = variables.len();
    if n == 0 {
        out.push(Violation::NoVariables);
    }

    let mut names = HashSet::new();
    for v in variables {
        if !names.insert(v.name.as_str()) {
            out.push(Violation::DuplicateVariable(v.name.clone()));
        }
        let mut seen = HashSet::new();
        for x in &v.values {
            if !seen.insert(x.as_str()) {
                out.push(Violation::DuplicateValue {
                    variable: v.name.clone(),
                    value: x.clone(),
                });
            }
        }
        if v.values.len() < 2 {
            out.push(Violation::TooFewValues(v.name.clone()));
        }
    }

    let name = |id: VarId| {
        variables
            .get(id.0)
            .map(|v| v.name.clone())
            .unwrap_or_else(|| format!("#{}", id.0))
    };

    let mut count = vec![0usize; n];
    let mut usable = Vec::new();
    for cpt in cpts {
        let ids_ok = cpt.child.0 < n && cpt.parents.iter().all(|p| p.0 < n);
        if !ids_ok {
            let bad = std::iter::once(cpt.child)
                .chain(cpt.parents.iter().copied())
                .find(|id| id.0 >= n)
                .unwrap();
            out.push(Violation::UnknownVariable {
                cpt: name(cpt.child),
                name: name(bad),
            });
            continue;
        }
        count[cpt.child.0] += 1;
        let mut seen = BTreeSet::new();
        for &p in &cpt.parents {
            if !seen.insert(p) {
                out.push(Violation::DuplicateParent {
                    variable: name(cpt.child),
                    parent: name(p),
                });
            }
        }
        usable.push(cpt);
    }
    for (i, &c) in count.iter().enumerate() {
        match c {
            0 => out.push(Violation::MissingCpt(variables[i].name.clone())),
            1 => {}
            _ => out.push(Violation::DuplicateCpt(variables[i].name.clone())),
        }
    }

    for cpt in &usable {
        let var = name(cpt.child);
        let card = variables[cpt.child.0].values.len();
        let expected: usize = cpt
            .parents
            .iter()
            .map(|p| variables[p.0].values.len())
            .product();
        if cpt.rows.len() != expected {
            out.push(Violation::RowCount {
                variable: var.clone(),
                expected,
                found: cpt.rows.len(),
            });
        }
        for (r, row) in cpt.rows.iter().enumerate() {
            if row.len() != card {
                out.push(Violation::RowLength {
                    variable: var.clone(),
                    row: r,
                    expected: card,
                    found: row.len(),
                });
            }
            if let Some(&value) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                out.push(Violation::OutOfRange {
                    variable: var.clone(),
                    row: r,
                    value,
                });
            }
            let sum: f64 = row.iter().sum();
            if sum.is_nan() || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                out.push(Violation::RowSum {
                    variable: var.clone(),
                    row: r,
                    sum,
                });
            }
        }
    }

    // Kahn's algorithm; whatever is left over lies on or behind a cycle.
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for cpt in &usable {
        for &p in &cpt.parents {
            indegree[cpt.child.0] += 1;
            children[p.0].push(cpt.child.0);
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut removed = 0;
    while let Some(i) = stack.pop() {
        removed += 1;
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                stack.push(c);
            }
        }
    }
    if removed < n {
        let stuck = (0..n)
            .filter(|&i| indegree[i] > 0)
            .map(|i| variables[i].name.clone())
            .collect();
        out.push(Violation::Cycle(stuck));
    }

    out
}
