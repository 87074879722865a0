use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A named field of an input record violates its invariant.
    #[error("invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },

    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    /// The solver hit its iteration cap; carries the last iterate.
    #[error("solver did not converge after {iterations} iterations (last spend {last_spend}, log-prob gap {gap:e})")]
    SolverStalled {
        iterations: usize,
        last_n: Vec<f64>,
        last_spend: f64,
        gap: f64,
    },

    #[error("budget {budget} is below the vertex cost {vertex_cost} (deficit {deficit})")]
    InfeasibleBudget {
        budget: f64,
        vertex_cost: f64,
        deficit: f64,
    },

    #[error("enumeration guard exceeded: {0}")]
    Guard(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate bet_id {0:?}")]
    DuplicateBet(String),

    #[error("unknown bet_id(s): {}", .0.join(", "))]
    UnknownBets(Vec<String>),

    #[error("gambler {0:?} has wins on dependent bets; use the budget plausibility assessment")]
    DependentWins(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
