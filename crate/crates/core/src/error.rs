//! Error type shared across the crate.

use std::fmt;

/// Everything that can go wrong when building inputs or running a solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside its mathematical domain (bad probability,
    /// state index out of range, malformed policy vector, ...).
    Domain(String),
    /// A configuration is structurally invalid (zero Monte Carlo samples,
    /// negative tolerance budget, inconsistent field combination, ...).
    Config(String),
    /// An operation was called in a mode where its closed form does not
    /// apply (e.g. a solver that requires equal idle/busy secondary failure
    /// probabilities).
    Mode(String),
    /// A root-finding bracket does not contain a sign change.
    Bracket(String),
    /// A combinatorial search exceeds its size budget.
    Budget(String),
    /// A perturbation/exchange check was invoked on inputs that violate the
    /// hypotheses it needs, with an explanation of which one failed.
    Hypothesis(String),
    /// The linear program has no feasible point.
    Infeasible,
    /// The linear program is unbounded above.
    Unbounded,
    /// A computed quantity failed an internal sanity check (occupancies
    /// that do not sum to one, meaningfully negative probabilities, ...).
    Numerical(String),
    /// An I/O error while writing requested output (trace files, dumps).
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Mode(msg) => write!(f, "mode error: {msg}"),
            Error::Bracket(msg) => write!(f, "bracketing error: {msg}"),
            Error::Budget(msg) => write!(f, "budget error: {msg}"),
            Error::Hypothesis(msg) => write!(f, "hypothesis violation: {msg}"),
            Error::Infeasible => write!(f, "linear program is infeasible"),
            Error::Unbounded => write!(f, "linear program is unbounded"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
