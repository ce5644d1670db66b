//! Exact tabular policy-gradient optimization on finite MDPs.
//!
//! The crate is layered bottom-up:
//!
//! * [`mdp`]: MDP model, softmax policies, exact evaluation and value iteration.
//! * [`gradient`]: exact softmax policy gradient, finite-difference and
//!   Monte Carlo estimators.
//! * [`optimizers`]: PG, heavy-ball, Nesterov, Adam and negative-momentum
//!   (SPG-NM) ascent steps.
//! * [`harness`]: built-in environments, experiment configs, runs, traces.

pub mod error;
pub mod gradient;
pub mod harness;
pub mod mdp;
pub mod optimizers;
pub mod table;

pub use error::{Error, Result};
pub use table::Table;
