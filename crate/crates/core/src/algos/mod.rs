//! The learning core: sample gradients, minibatch updates, replay memory,
//! exploration noise and step-size schedules.

mod learner;
mod noise;
mod replay;
mod schedule;

pub use learner::{AgentLayout, AgentLearner, Algo, StepOutcome, TrainConfig};
pub use noise::{OuConfig, OuNoise};
pub use replay::ReplayBuffer;
pub use schedule::{schedule_eval, NamedBase, ScheduleKind, StepBase, StepSizeSchedule};

#[cfg(test)]
mod tests;
