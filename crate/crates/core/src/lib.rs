//! Most probable explanation (MPE) analysis on Bayesian networks compiled to
//! arithmetic circuits: per-parameter sensitivity constants, robustness
//! intervals and evidence retraction from one upward and one downward pass,
//! checked against exhaustive enumeration.

pub mod cli;
pub mod compile;
pub mod engine;
pub mod model;
pub mod oracle;
pub mod random;
pub mod report;
pub mod sensitivity;
