//! Transmission policies for a secondary link sharing a channel with a
//! retransmitting primary link.
//!
//! The primary source sends each packet up to `T` times, stopping early on
//! success; the secondary user transmits with a state-dependent probability
//! and its interference raises the primary failure rate. The channel state
//! (which transmission attempt the primary is on, or idle) forms a Markov
//! chain, so every long-run metric has a closed form. This crate provides:
//!
//! - [`phy`]: link budgets to failure probabilities under fading,
//! - [`model`]: the chain, its steady state, and the long-run metrics,
//! - [`analysis`]: metric gradients and perturbation/exchange checkers,
//! - [`lp`] / [`simplex`]: the occupancy-measure linear program,
//! - [`structured`]: flooding and enumeration solvers for the constrained
//!   reward-maximization problem,
//! - [`sim`]: a seeded slot-level simulator for cross-checking.

pub mod analysis;
pub mod error;
pub mod lp;
pub mod model;
pub mod phy;
pub mod sim;
pub mod simplex;
pub mod structured;

pub use error::Error;
pub use lp::{build_lp, extract_policy, per_state_values, solve_lp, Occupancy};
pub use model::{Metric, Metrics, Policy, StateDistribution, SystemParams};
pub use phy::{capacity, failure_probs, FadingModel, FailureProbs, LinkBudget, SecondaryRxMode};
pub use sim::{simulate, simulate_with_trace, SimConfig, SimStats};
pub use simplex::{simplex_solve, LinearProgram, LpSolution};
pub use structured::{
    bisect_root, sigma_from_epsilon, solve_enumerate, solve_horizontal, solve_vertical,
    ConstraintSpec, SigmaBound, SolveMethod, SolveReport,
};
