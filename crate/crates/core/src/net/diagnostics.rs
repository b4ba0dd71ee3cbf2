use super::PolicyCache;
use crate::algos::{AgentLearner, Algo};
use crate::env::GlobalTransition;
use crate::{Error, Result};

/// Norms of the gradient errors caused by training on aged peer policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientErrorNorms {
    pub critic: f64,
    pub actor: f64,
}

/// Difference between the sample gradients computed with the current peer
/// policies and with the aged ones, for one transition.
///
/// `fresh` is only available when the true current policies are observable;
/// without it the diagnostic is unavailable.
pub fn staleness_gradient_error(
    learner: &AgentLearner,
    fresh: Option<&PolicyCache>,
    aged: &PolicyCache,
    sample: &GlobalTransition,
    gamma: f64,
) -> Result<GradientErrorNorms> {
    let fresh = fresh.ok_or(Error::DiagnosticUnavailable)?;
    let critic_fresh = learner.critic_sample_gradient(fresh, sample, gamma)?;
    let critic_aged = learner.critic_sample_gradient(aged, sample, gamma)?;
    let actor = match learner.algo {
        Algo::ThreeDpg => {
            let a = learner.actor_sample_gradient_3dpg(fresh, &sample.state)?;
            let b = learner.actor_sample_gradient_3dpg(aged, &sample.state)?;
            diff_norm(&a, &b)
        }
        // Peer actions come from the stored transition; policy age is irrelevant.
        Algo::Maddpg => 0.0,
    };
    Ok(GradientErrorNorms {
        critic: diff_norm(&critic_fresh, &critic_aged),
        actor,
    })
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
