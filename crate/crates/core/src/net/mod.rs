//! Discrete-time lossy network simulation with age-of-information tracking.

mod aoi;
mod assembler;
mod cache;
mod channel;
mod diagnostics;
mod dominance;
mod network;
mod schedule;

pub use aoi::{aoi_snapshot, snapshot, AoiSnapshot, AoiTracker};
pub use assembler::{assemble_transition, TupleAssembler};
pub use cache::{CachedPolicy, PolicyCache};
pub use channel::{
    slot_tick, ChannelLink, Delivery, LocalTuple, Message, MessageFragment, MessageKind,
    WireSizing, BITS_PER_VALUE,
};
pub use diagnostics::{staleness_gradient_error, GradientErrorNorms};
pub use dominance::{
    dkw_epsilon, dominance_check, CompletionTimeBound, DominanceReport, MIN_DOMINANCE_SAMPLES,
};
pub use network::{AccessProb, Completion, Network, NetworkConfig};
pub use schedule::DisseminationSchedule;

#[cfg(test)]
mod tests;
