//! Command-line front end. [`run`] does all the work so tests can drive it
//! without spawning a process.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::compile::compile;
use crate::engine::{extract_mpe, run_dmaxc};
use crate::model::{load_network, BayesianNetwork, Evidence, ModelError};
use crate::oracle::{audit_network, OracleError, DEFAULT_GUARD};
use crate::random::random_suite;
use crate::report::{
    multiplicity_entries, multiplicity_to_table, CompileSection, MpeSection, MultiplicityEntry,
    RetractionSection, SensitivityReport,
};
use crate::sensitivity::{analyze, mpe_multiplicity, retraction_analysis, retraction_table, SensitivityError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

/// Evidence settings drawn per random network by `check`.
const EVIDENCE_PER_RANDOM_NET: usize = 5;

#[derive(Debug, Parser)]
#[command(name = "mpe-robust", version, about = "MPE sensitivity analysis on compiled Bayesian networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile the network and print circuit statistics.
    Compile(Query),
    /// Print an MPE witness and its probability.
    Mpe(Query),
    /// Full sensitivity report: coefficients, robustness intervals,
    /// retraction and multiplicity.
    Sensitivity(Query),
    /// Retraction table, verdicts and multiplicity.
    Retract {
        #[command(flatten)]
        query: Query,
        /// Also recompute the MPE witness with each observation retracted.
        #[arg(long)]
        witness: bool,
    },
    /// Compare every computed quantity with exhaustive enumeration.
    Check {
        #[command(flatten)]
        query: Query,
        /// Number of random networks to check in addition to the given one.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Interval samples on each side of every robustness interval.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Report,
}

#[derive(Debug, Args)]
pub struct Query {
    /// Network file (JSON).
    pub network: PathBuf,
    /// Evidence as Var=value tokens.
    pub tokens: Vec<String>,
    /// Evidence as a single space-separated string of Var=value tokens.
    #[arg(long, short)]
    pub evidence: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Largest instantiation count the enumeration oracle will accept.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    pub guard: u64,
}

#[derive(Debug)]
enum Failure {
    Read(PathBuf, std::io::Error),
    Network(PathBuf, ModelError),
    Evidence(ModelError),
    Guard(String),
    Analysis(SensitivityError),
    Output(std::io::Error),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Read(p, e) => write!(f, "cannot read network file {}: {e}", p.display()),
            Failure::Network(p, e) => write!(f, "cannot load network {}: {e}", p.display()),
            Failure::Evidence(e) => write!(f, "invalid evidence: {e}"),
            Failure::Guard(m) => write!(f, "enumeration guard exceeded: {m}"),
            Failure::Analysis(e) => write!(f, "analysis failed: {e}"),
            Failure::Output(e) => write!(f, "cannot write output: {e}"),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::GuardExceeded { .. } => Failure::Guard(e.to_string()),
            OracleError::Model(m) => Failure::Evidence(m),
            OracleError::Sensitivity(s) => Failure::Analysis(s),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Output(e)
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(err, "error: {failure}");
            EXIT_ERROR
        }
    }
}

fn load(query: &Query) -> Result<(BayesianNetwork, Evidence), Failure> {
    let net = read_network(&query.network)?;
    let mut text = query.tokens.join(" ");
    if let Some(extra) = &query.evidence {
        text.push(' ');
        text.push_str(extra);
    }
    let e = Evidence::parse(&net, &text).map_err(Failure::Evidence)?;
    Ok((net, e))
}

fn read_network(path: &Path) -> Result<BayesianNetwork, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Read(path.to_path_buf(), e))?;
    load_network(&text).map_err(|e| Failure::Network(path.to_path_buf(), e))
}

fn emit(out: &mut impl Write, format: Format, value: &impl Serialize, table: impl FnOnce() -> String) -> Result<(), Failure> {
    match format {
        Format::Report => {
            let mut s = serde_json::to_string_pretty(value).expect("report serializes");
            s.push('\n');
            out.write_all(s.as_bytes())?;
        }
        Format::Table => out.write_all(table().as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct RetractReport {
    retraction: RetractionSection,
    multiplicity: Vec<MultiplicityEntry>,
}

#[derive(Serialize)]
struct CheckEntry {
    network: String,
    evidence: String,
    checks: usize,
    failures: Vec<String>,
}

#[derive(Serialize)]
struct CheckReport {
    passed: bool,
    checks: usize,
    queries: Vec<CheckEntry>,
}

fn execute(command: Command, out: &mut impl Write) -> Result<i32, Failure> {
    match command {
        Command::Compile(q) => {
            let (net, _) = load(&q)?;
            let (order, circuit) = compile(&net);
            let section = CompileSection::new(&net, &order, &circuit);
            emit(out, q.format, &section, || section.to_table())?;
        }
        Command::Mpe(q) => {
            let (net, e) = load(&q)?;
            let (_, circuit) = compile(&net);
            let state = run_dmaxc(&circuit, &e).map_err(|e| Failure::Analysis(e.into()))?;
            let mpe = extract_mpe(&circuit, &state).map_err(|e| Failure::Analysis(e.into()))?;
            let section = MpeSection::new(&net, &mpe);
            emit(out, q.format, &section, || section.to_table())?;
        }
        Command::Sensitivity(q) => {
            let (net, e) = load(&q)?;
            let (_, circuit) = compile(&net);
            let analysis = analyze(&net, &circuit, &e).map_err(Failure::Analysis)?;
            let report = SensitivityReport::new(&net, &analysis);
            match q.format {
                Format::Report => out.write_all(report.to_json().as_bytes())?,
                Format::Table => out.write_all(report.to_table().as_bytes())?,
            }
        }
        Command::Retract { query: q, witness } => {
            let (net, e) = load(&q)?;
            let (_, circuit) = compile(&net);
            let state = run_dmaxc(&circuit, &e).map_err(|e| Failure::Analysis(e.into()))?;
            let table = retraction_table(&state, &circuit).map_err(Failure::Analysis)?;
            let verdicts = retraction_analysis(&table, &e);
            let mut retraction = RetractionSection::new(&net, &e, &table, &verdicts);
            if witness {
                let mut witnesses = Vec::new();
                for (v, _) in e.iter() {
                    let without = e.without(v);
                    let state = run_dmaxc(&circuit, &without).map_err(|e| Failure::Analysis(e.into()))?;
                    let mpe = extract_mpe(&circuit, &state).map_err(|e| Failure::Analysis(e.into()))?;
                    witnesses.push((v, mpe));
                }
                retraction = retraction.with_witnesses(&net, &witnesses);
            }
            let report = RetractReport {
                retraction,
                multiplicity: multiplicity_entries(&net, &mpe_multiplicity(&table, &e)),
            };
            emit(out, q.format, &report, || {
                report.retraction.to_table() + &multiplicity_to_table(&report.multiplicity)
            })?;
        }
        Command::Check {
            query: q,
            random,
            seed,
            samples,
        } => {
            let (net, e) = load(&q)?;
            let mut queries = Vec::new();
            let audit = audit_network(&net, &e, q.guard, samples)?;
            queries.push(CheckEntry {
                network: q.network.display().to_string(),
                evidence: net.describe_assignment(&e),
                checks: audit.checks,
                failures: audit.failures,
            });
            for (i, (net, evidence)) in random_suite(seed, random, EVIDENCE_PER_RANDOM_NET)
                .into_iter()
                .enumerate()
            {
                for e in std::iter::once(Evidence::empty()).chain(evidence) {
                    let audit = audit_network(&net, &e, q.guard, samples)?;
                    queries.push(CheckEntry {
                        network: format!("random #{i} (seed {seed})"),
                        evidence: net.describe_assignment(&e),
                        checks: audit.checks,
                        failures: audit.failures,
                    });
                }
            }
            let report = CheckReport {
                passed: queries.iter().all(|q| q.failures.is_empty()),
                checks: queries.iter().map(|q| q.checks).sum(),
                queries,
            };
            emit(out, q.format, &report, || check_table(&report))?;
            if !report.passed {
                return Ok(EXIT_CHECK_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

fn check_table(report: &CheckReport) -> String {
    let mut s = String::new();
    for q in &report.queries {
        let status = if q.failures.is_empty() { "ok" } else { "FAILED" };
        s.push_str(&format!("{status:<6} {} [{}] {} checks\n", q.network, q.evidence, q.checks));
        for f in &q.failures {
            s.push_str(&format!("       {f}\n"));
        }
    }
    let verdict = if report.passed { "passed" } else { "failed" };
    s.push_str(&format!("{} queries, {} checks, {verdict}\n", report.queries.len(), report.checks));
    s
}
