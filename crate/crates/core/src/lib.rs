//! Screening lottery prize-claim histories for implausible luck.
//!
//! The central quantity is the minimum a gambler must have spent for their
//! record of wins to have at least a small probability `ε` of happening by
//! chance. Modules, bottom up:
//!
//! - [`betamath`]: binomial tail `D(n; w, p)` for real `n`, in log space.
//! - [`solver`]: minimum-spend and maximum-probability convex programs.
//! - [`bkr`]: finite event algebra behind treating non-dependent wins as
//!   independent, with exhaustive checks.
//! - [`ruin`]: how many prizes a gambler recycling a bankroll can expect.
//! - [`screening`]: claim ingestion, profiles, verdicts and reports.
//! - [`oracles`]: slow independent references used by tests.

pub mod betamath;
pub mod bkr;
pub mod error;
pub mod oracles;
pub mod ruin;
pub mod screening;
pub mod solver;
mod special;

pub use error::{Error, Result};
pub use special::{ln_beta, ln_gamma};
