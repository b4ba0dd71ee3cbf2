//! Cooperative particle environments: plain cover-the-landmarks ("spread")
//! and the orientation-weighted coordination variant.
//!
//! Observation layout for agent `i` (fixed, documented order):
//!
//! 1. `landmark_l - pos_i` for every landmark `l` in index order,
//! 2. `pos_j - pos_i` for every other agent `j` in increasing index order,
//! 3. `(cos theta_i, sin theta_i)`.
//!
//! The global state encoding consumed by critics is the concatenation of all
//! agents' observations in agent order.

mod particle;
mod reward;
mod types;

pub use particle::ParticleEnv;
pub use reward::{angular_difference, coordination_weight, reward_coord, reward_spread};
pub use types::{
    AgentState, EnvConfig, GlobalState, GlobalTransition, JointAction, OrientationControl, Variant,
};
