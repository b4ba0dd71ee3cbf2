//! Multi-agent deterministic policy gradients (3DPG and MADDPG) trained over
//! a simulated lossy network with age-of-information bookkeeping.
//!
//! Module map:
//!
//! - [`nn`]: fixed-depth MLPs with exact reverse-mode gradients.
//! - [`env`]: the particle environments (spread and orientation coordination).
//! - [`algos`]: sample gradients, replay, target networks, exploration noise,
//!   step-size schedules and the minibatch train step.
//! - [`net`]: Bernoulli-access bit-budgeted links, dissemination schedule,
//!   policy caches, tuple assembly and AoI tracking.
//! - [`harness`]: run configs, the experiment loop, metrics, comparison and plots.

pub mod algos;
pub mod env;
pub mod harness;
pub mod net;
pub mod nn;

mod error;

pub use error::{Error, Result};
