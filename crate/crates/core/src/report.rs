//! Serializable views of analysis results: a JSON report for machines and
//! aligned text tables for people.

use std::fmt::Write as _;

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::compile::{check_decomposability, ArithmeticCircuit, EliminationOrder};
use crate::engine::MpeResult;
use crate::model::{Assignment, BayesianNetwork, Evidence, ParameterRef, VarId};
use crate::sensitivity::{
    Analysis, Competitor, Multiplicity, RetractionTable, RetractionVerdict, WitnessBranch,
};

/// Significant digits of every number in the JSON report.
pub const REPORT_DIGITS: usize = 15;
/// Significant digits in text tables.
pub const TABLE_DIGITS: usize = 6;

/// Fixed-point decimal with `digits` significant digits. Never uses an
/// exponent.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0.0".to_string() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(1) as usize;
    format!("{x:.decimals$}")
}

fn trimmed(x: f64, digits: usize) -> String {
    let s = format_significant(x, digits);
    if s.contains('.') {
        let s = s.trim_end_matches('0');
        s.strip_suffix('.').map_or_else(|| s.to_string(), |s| s.to_string())
    } else {
        s
    }
}

/// A probability written with [`REPORT_DIGITS`] significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Number(pub f64);

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text = format_significant(self.0, REPORT_DIGITS);
        RawValue::from_string(text).map_err(S::Error::custom)?.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Setting {
    pub variable: String,
    pub value: String,
}

fn settings(net: &BayesianNetwork, a: &impl Assignment) -> Vec<Setting> {
    a.assigned()
        .into_iter()
        .map(|(v, x)| setting(net, v, x))
        .collect()
}

fn setting(net: &BayesianNetwork, v: VarId, x: usize) -> Setting {
    let var = net.variable(v);
    Setting {
        variable: var.name.clone(),
        value: var.values[x].clone(),
    }
}

fn show(list: &[Setting]) -> String {
    list.iter()
        .map(|s| format!("{}={}", s.variable, s.value))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Serialize)]
pub struct CompileSection {
    pub variables: usize,
    pub parameters: usize,
    pub nodes: usize,
    pub edges: usize,
    pub width: usize,
    pub elimination_order: Vec<String>,
    pub decomposable: bool,
}

impl CompileSection {
    pub fn new(net: &BayesianNetwork, order: &EliminationOrder, circuit: &ArithmeticCircuit) -> Self {
        CompileSection {
            variables: net.num_variables(),
            parameters: net.num_parameters(),
            nodes: circuit.len(),
            edges: circuit.num_edges(),
            width: order.width(),
            elimination_order: order
                .order()
                .iter()
                .map(|&v| net.variable(v).name.clone())
                .collect(),
            decomposable: check_decomposability(circuit).is_empty(),
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let rows = [
            ("variables", self.variables.to_string()),
            ("parameters", self.parameters.to_string()),
            ("nodes", self.nodes.to_string()),
            ("edges", self.edges.to_string()),
            ("width", self.width.to_string()),
            ("order", self.elimination_order.join(" ")),
            ("decomposable", self.decomposable.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<13} {v}");
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MpeSection {
    pub witness: Vec<Setting>,
    pub probability: Number,
}

impl MpeSection {
    pub fn new(net: &BayesianNetwork, mpe: &MpeResult) -> Self {
        MpeSection {
            witness: settings(net, &mpe.witness),
            probability: Number(mpe.probability),
        }
    }

    pub fn to_table(&self) -> String {
        format!(
            "witness      {}\nprobability  {}\n",
            show(&self.witness),
            trimmed(self.probability.0, TABLE_DIGITS)
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalEntry {
    pub lower: Number,
    pub upper: Number,
    pub lower_binding: Option<Competitor>,
    pub upper_binding: Option<Competitor>,
    pub tie: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterEntry {
    pub label: String,
    pub variable: String,
    pub value: String,
    pub given: Vec<Setting>,
    pub current: Number,
    pub r: Number,
    pub k: Number,
    pub branch: WitnessBranch,
    pub interval: IntervalEntry,
    pub uniform_redistribution: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RetractionEntry {
    pub variable: String,
    pub value: String,
    pub probability: Number,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictEntry {
    pub variable: String,
    pub observed: String,
    pub verdict: RetractionVerdict,
}

/// MPE of the network with one observation retracted, by a fresh pass.
#[derive(Debug, Clone, Serialize)]
pub struct RetractedWitness {
    pub variable: String,
    pub witness: Vec<Setting>,
    pub probability: Number,
}

#[derive(Debug, Clone, Serialize)]
pub struct RetractionSection {
    pub mpe_probability: Number,
    pub table: Vec<RetractionEntry>,
    pub verdicts: Vec<VerdictEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retracted_witnesses: Option<Vec<RetractedWitness>>,
}

impl RetractionSection {
    pub fn new(
        net: &BayesianNetwork,
        e: &Evidence,
        table: &RetractionTable,
        verdicts: &[(VarId, RetractionVerdict)],
    ) -> Self {
        let entries = net
            .var_ids()
            .flat_map(|v| (0..net.cardinality(v)).map(move |x| (v, x)))
            .map(|(v, x)| {
                let s = setting(net, v, x);
                RetractionEntry {
                    variable: s.variable,
                    value: s.value,
                    probability: Number(table.entry(v, x)),
                }
            })
            .collect();
        let verdicts = verdicts
            .iter()
            .map(|&(v, verdict)| {
                let s = setting(net, v, e.get(v).expect("verdicts cover observed variables"));
                VerdictEntry {
                    variable: s.variable,
                    observed: s.value,
                    verdict,
                }
            })
            .collect();
        RetractionSection {
            mpe_probability: Number(table.mpe_probability()),
            table: entries,
            verdicts,
            retracted_witnesses: None,
        }
    }

    pub fn with_witnesses(mut self, net: &BayesianNetwork, witnesses: &[(VarId, MpeResult)]) -> Self {
        self.retracted_witnesses = Some(
            witnesses
                .iter()
                .map(|(v, mpe)| RetractedWitness {
                    variable: net.variable(*v).name.clone(),
                    witness: settings(net, &mpe.witness),
                    probability: Number(mpe.probability),
                })
                .collect(),
        );
        self
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:<12} MPE_p(e-X, x)", "variable", "value");
        for t in &self.table {
            let _ = writeln!(out, "{:<12} {:<12} {}", t.variable, t.value, trimmed(t.probability.0, TABLE_DIGITS));
        }
        for v in &self.verdicts {
            let verdict = serde_json::to_value(v.verdict).expect("verdict serializes");
            let _ = writeln!(
                out,
                "retract {}={}: {}",
                v.variable,
                v.observed,
                verdict.as_str().unwrap_or_default()
            );
        }
        for w in self.retracted_witnesses.iter().flatten() {
            let _ = writeln!(
                out,
                "without {}: {} ({})",
                w.variable,
                show(&w.witness),
                trimmed(w.probability.0, TABLE_DIGITS)
            );
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityEntry {
    pub variable: String,
    /// The value every MPE solution shares, if any.
    pub forced: Option<String>,
    pub values: Vec<String>,
}

pub fn multiplicity_entries(
    net: &BayesianNetwork,
    multiplicity: &[(VarId, Multiplicity)],
) -> Vec<MultiplicityEntry> {
    multiplicity
        .iter()
        .map(|(v, m)| {
            let var = net.variable(*v);
            let values: Vec<usize> = match m {
                Multiplicity::Forced(x) => vec![*x],
                Multiplicity::Multiple(xs) => xs.clone(),
            };
            MultiplicityEntry {
                variable: var.name.clone(),
                forced: match m {
                    Multiplicity::Forced(x) => Some(var.values[*x].clone()),
                    Multiplicity::Multiple(_) => None,
                },
                values: values.iter().map(|&x| var.values[x].clone()).collect(),
            }
        })
        .collect()
}

fn multiplicity_table(entries: &[MultiplicityEntry]) -> String {
    let mut out = String::new();
    for m in entries {
        let what = match &m.forced {
            Some(x) => format!("forced {x}"),
            None => format!("multiple {}", m.values.join(" ")),
        };
        let _ = writeln!(out, "{:<12} {what}", m.variable);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub evidence: Vec<Setting>,
    pub mpe: MpeSection,
    pub parameters: Vec<ParameterEntry>,
    pub retraction: RetractionSection,
    pub multiplicity: Vec<MultiplicityEntry>,
}

impl SensitivityReport {
    pub fn new(net: &BayesianNetwork, analysis: &Analysis) -> Self {
        let parameters = analysis
            .intervals
            .iter()
            .map(|iv| parameter_entry(net, analysis, iv.parameter, iv))
            .collect();
        SensitivityReport {
            evidence: settings(net, &analysis.evidence),
            mpe: MpeSection::new(net, &analysis.mpe),
            parameters,
            retraction: RetractionSection::new(
                net,
                &analysis.evidence,
                &analysis.retraction,
                &analysis.verdicts,
            ),
            multiplicity: multiplicity_entries(net, &analysis.multiplicity),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "evidence     {}", show(&self.evidence));
        out.push_str(&self.mpe.to_table());
        out.push('\n');
        let header = ["parameter", "current", "r", "k", "lower", "upper", "binds", "note"];
        let rows: Vec<[String; 8]> = self
            .parameters
            .iter()
            .map(|p| {
                let binds = [p.interval.lower_binding, p.interval.upper_binding]
                    .map(|b| match b {
                        None => "-".to_string(),
                        Some(Competitor::Value(_)) => "value".to_string(),
                        Some(Competitor::OtherParents) => "k".to_string(),
                    })
                    .join("/");
                let mut notes = Vec::new();
                if p.interval.tie {
                    notes.push("tie");
                }
                if p.uniform_redistribution {
                    notes.push("uniform");
                }
                [
                    p.label.clone(),
                    trimmed(p.current.0, TABLE_DIGITS),
                    trimmed(p.r.0, TABLE_DIGITS),
                    trimmed(p.k.0, TABLE_DIGITS),
                    trimmed(p.interval.lower.0, TABLE_DIGITS),
                    trimmed(p.interval.upper.0, TABLE_DIGITS),
                    binds,
                    notes.join(","),
                ]
            })
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            let _ = writeln!(out, "{}", padded.join("  ").trim_end());
        };
        line(&header.map(String::from));
        for row in &rows {
            line(row);
        }
        out.push('\n');
        out.push_str(&self.retraction.to_table());
        out.push_str(&multiplicity_table(&self.multiplicity));
        out
    }
}

fn parameter_entry(
    net: &BayesianNetwork,
    analysis: &Analysis,
    p: ParameterRef,
    iv: &crate::sensitivity::RobustnessInterval,
) -> ParameterEntry {
    let var = net.variable(p.var);
    let given = net
        .cpt(p.var)
        .parents()
        .iter()
        .zip(net.parent_values(p.var, p.row))
        .map(|(&u, x)| setting(net, u, x))
        .collect();
    ParameterEntry {
        label: net.describe_parameter(p),
        variable: var.name.clone(),
        value: var.values[p.value].clone(),
        given,
        current: Number(iv.current),
        r: Number(analysis.constants.r.get(p)),
        k: Number(analysis.constants.k.get(p.var, p.row)),
        branch: iv.branch,
        interval: IntervalEntry {
            lower: Number(iv.lower),
            upper: Number(iv.upper),
            lower_binding: iv.lower_binding,
            upper_binding: iv.upper_binding,
            tie: iv.tie,
        },
        uniform_redistribution: iv.uniform_redistribution,
    }
}

/// Multiplicity section on its own, for the `retract` command.
pub fn multiplicity_to_table(entries: &[MultiplicityEntry]) -> String {
    multiplicity_table(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile;
    use crate::model::load_network;
    use crate::sensitivity::analyze;

    const AB: &str = include_str!("../fixtures/ab.json");

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.4, 15), "0.400000000000000");
        assert_eq!(format_significant(0.6, 6), "0.600000");
        assert_eq!(format_significant(1.0, 15), "1.00000000000000");
        assert_eq!(format_significant(0.0, 15), "0.0");
        assert_eq!(format_significant(3.0 / 7.0, 15), "0.428571428571429");
        assert_eq!(format_significant(1.5e-20, 3), "0.0000000000000000000150");
        assert_eq!(trimmed(0.4, 6), "0.4");
        assert_eq!(trimmed(1.0, 6), "1");
        assert_eq!(trimmed(3.0 / 7.0, 6), "0.428571");
    }

    #[test]
    fn report_numbers_keep_precision() {
        let net = load_network(AB).unwrap();
        let (_, c) = compile(&net);
        let analysis = analyze(&net, &c, &Evidence::empty()).unwrap();
        let json = SensitivityReport::new(&net, &analysis).to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["evidence", "mpe", "parameters", "retraction", "multiplicity"] {
            assert!(value.get(key).is_some(), "{key}");
        }
        let b_bar_a = value["parameters"]
            .as_array()
            .unwrap()
            .iter()
            .find(|p| p["label"] == "θ(B=b_bar | A=a)")
            .unwrap();
        assert_eq!(b_bar_a["interval"]["lower"].as_f64(), Some(0.6));
        assert_eq!(b_bar_a["interval"]["upper"].as_f64(), Some(1.0));
        assert!(json.contains("0.600000000000000"));
    }

    #[test]
    fn table_lists_every_parameter() {
        let net = load_network(AB).unwrap();
        let (_, c) = compile(&net);
        let analysis = analyze(&net, &c, &Evidence::parse(&net, "A=a").unwrap()).unwrap();
        let table = SensitivityReport::new(&net, &analysis).to_table();
        assert_eq!(table.matches("θ(").count(), net.num_parameters());
        assert!(table.contains("identity-preserved-strictly"));
        assert!(table.contains("forced b_bar"));
    }
}
