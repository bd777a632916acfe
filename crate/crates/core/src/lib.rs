//! Search over the programmatic policy space of the Karel DSL.
//!
//! The crate is organized bottom-up:
//!
//! * [`dsl`]: program ASTs, the canonical token text, structural measures
//!   and the constrained probabilistic sampler.
//! * [`mutation`]: the single-node subtree-regrowth neighborhood.
//! * [`karel`]: the grid world and the resumable program interpreter.
//! * [`tasks`]: the ten benchmark tasks and return estimation.
//! * [`search`]: hill climbing with restarts under an evaluation budget.
//! * [`metrics`]: behavior-similarity, identity-rate and convergence-rate.

pub mod dsl;
pub mod error;
pub mod karel;
pub mod metrics;
pub mod mutation;
pub mod search;
pub mod seed;
pub mod tasks;

pub use error::{Error, Result, SyntaxError};
