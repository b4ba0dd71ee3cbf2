//! Finite-difference check of the three sample gradients on random small nets.
//!
//! The reference values use forward passes only: the critic gradient against
//! `-d/dtheta 1/2 (y - Q_theta(x))^2` with the bootstrap target `y` fixed,
//! and both actor gradients against `d/dphi Q(s, a)` with the own action
//! `a^i = pi_phi(s^i)` and the peer slots filled per algorithm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algos::{AgentLayout, AgentLearner, Algo};
use crate::env::{GlobalTransition, JointAction};
use crate::net::PolicyCache;
use crate::nn::{actor_forward, ActionBounds, MlpParams};
use crate::Result;

pub const FD_STEP: f64 = 1e-5;
pub const GAMMA: f64 = 0.9;

/// `|a - b| / max(|a|, |b|, 1e-3)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub cases: usize,
    pub max_params: usize,
    pub critic: f64,
    pub actor_3dpg: f64,
    pub actor_maddpg: f64,
}

impl GradcheckReport {
    pub fn worst(&self) -> f64 {
        self.critic.max(self.actor_3dpg).max(self.actor_maddpg)
    }
}

/// One randomly shaped agent with peers, a transition and an aged cache.
pub struct GradcheckCase {
    pub learner: AgentLearner,
    pub cache: PolicyCache,
    pub transition: GlobalTransition,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> Result<GradcheckCase> {
    let num_agents = rng.random_range(1..=3);
    let obs_dim = rng.random_range(1..=3);
    let action_dim = rng.random_range(1..=2);
    let bounds = ActionBounds::new(
        (0..action_dim)
            .map(|_| {
                let lo = rng.random_range(-1.0..0.0);
                (lo, lo + rng.random_range(0.2..1.5))
            })
            .collect(),
    )?;
    let layout = AgentLayout {
        num_agents,
        obs_dim,
        bounds: bounds.clone(),
    };
    let actor_hidden = [rng.random_range(2..=5)];
    let critic_hidden = [rng.random_range(2..=6), rng.random_range(2..=4)];
    let algo = if rng.random_bool(0.5) {
        Algo::ThreeDpg
    } else {
        Algo::Maddpg
    };
    let id = rng.random_range(0..num_agents);
    let mut learner =
        AgentLearner::new(id, algo, layout.clone(), &actor_hidden, &critic_hidden, rng)?;
    let jitter: Vec<f64> = (0..learner.critic.len())
        .map(|_| rng.random_range(-0.2..0.2))
        .collect();
    learner.critic_target.add_scaled(1.0, &jitter)?;
    let jitter: Vec<f64> = (0..learner.actor.len())
        .map(|_| rng.random_range(-0.2..0.2))
        .collect();
    learner.actor_target.add_scaled(1.0, &jitter)?;

    let mut cache = PolicyCache::new();
    for j in (0..num_agents).filter(|&j| j != id) {
        cache.offer(
            j,
            MlpParams::init_uniform(learner.actor.shape().clone(), rng),
            0,
        );
    }
    let vec = |n: usize, rng: &mut ChaCha8Rng| {
        (0..n)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    };
    let state = vec(layout.state_dim(), rng);
    let next_state = vec(layout.state_dim(), rng);
    let actions = JointAction(
        (0..num_agents)
            .map(|_| {
                bounds
                    .as_slice()
                    .iter()
                    .map(|&(lo, hi)| rng.random_range(lo..hi))
                    .collect()
            })
            .collect(),
    );
    let rewards = (0..num_agents)
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    Ok(GradcheckCase {
        learner,
        cache,
        transition: GlobalTransition {
            state,
            actions,
            rewards,
            next_state,
            origin_step: 0,
            raw: None,
        },
    })
}

fn critic_input(bounds: &ActionBounds, state: &[f64], actions: &[Vec<f64>]) -> Vec<f64> {
    let mut x = state.to_vec();
    for a in actions {
        for (&v, &(lo, hi)) in a.iter().zip(bounds.as_slice()) {
            x.push((2.0 * v - lo - hi) / (hi - lo));
        }
    }
    x
}

fn q(critic: &MlpParams, x: &[f64]) -> Result<f64> {
    Ok(critic.forward(x)?.0[0])
}

fn central_difference(
    values: &[f64],
    mut f: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut probe = values.to_vec();
    let mut grad = Vec::with_capacity(values.len());
    for k in 0..values.len() {
        probe[k] = values[k] + FD_STEP;
        let up = f(&probe)?;
        probe[k] = values[k] - FD_STEP;
        let down = f(&probe)?;
        probe[k] = values[k];
        grad.push((up - down) / (2.0 * FD_STEP));
    }
    Ok(grad)
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| relative_error(*x, *y))
        .fold(0.0, f64::max)
}

/// Worst relative errors `(critic, actor 3DPG, actor MADDPG)` of one case.
pub fn check_case(case: &GradcheckCase) -> Result<(f64, f64, f64)> {
    let l = &case.learner;
    let lay = &l.layout;
    let t = &case.transition;
    let i = l.id;
    let policy = |j: usize| -> Result<&MlpParams> {
        Ok(if j == i {
            &l.actor_target
        } else {
            &case.cache.get(j)?.params
        })
    };
    let mut next_actions = Vec::new();
    for j in 0..lay.num_agents {
        next_actions.push(actor_forward(
            policy(j)?,
            lay.local_obs(&t.next_state, j),
            &lay.bounds,
        )?);
    }
    let y = t.rewards[i]
        + GAMMA
            * q(
                &l.critic_target,
                &critic_input(&lay.bounds, &t.next_state, &next_actions),
            )?;
    let x = critic_input(&lay.bounds, &t.state, &t.actions.0);
    let fd = central_difference(l.critic.values(), |theta| {
        let c = MlpParams::from_values(l.critic.shape().clone(), theta.to_vec())?;
        let d = y - q(&c, &x)?;
        Ok(0.5 * d * d)
    })?;
    let reference: Vec<f64> = fd.iter().map(|g| -g).collect();
    let critic_err = max_rel(
        &l.critic_sample_gradient(&case.cache, t, GAMMA)?,
        &reference,
    );

    let actor_fd = |peer_actions: &[Vec<f64>]| {
        central_difference(l.actor.values(), |phi| {
            let a = MlpParams::from_values(l.actor.shape().clone(), phi.to_vec())?;
            let mut actions = peer_actions.to_vec();
            actions[i] = actor_forward(&a, lay.local_obs(&t.state, i), &lay.bounds)?;
            q(&l.critic, &critic_input(&lay.bounds, &t.state, &actions))
        })
    };
    let mut aged_actions = Vec::new();
    for j in 0..lay.num_agents {
        let p = if j == i {
            &l.actor
        } else {
            &case.cache.get(j)?.params
        };
        aged_actions.push(actor_forward(p, lay.local_obs(&t.state, j), &lay.bounds)?);
    }
    let dpg_err = max_rel(
        &l.actor_sample_gradient_3dpg(&case.cache, &t.state)?,
        &actor_fd(&aged_actions)?,
    );
    let maddpg_err = max_rel(
        &l.actor_sample_gradient_maddpg(&t.state, &t.actions)?,
        &actor_fd(&t.actions.0)?,
    );
    Ok((critic_err, dpg_err, maddpg_err))
}

pub fn gradcheck(cases: usize, seed: u64) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradcheckReport {
        cases,
        max_params: 0,
        critic: 0.0,
        actor_3dpg: 0.0,
        actor_maddpg: 0.0,
    };
    for _ in 0..cases {
        let case = random_case(&mut rng)?;
        let (c, a3, am) = check_case(&case)?;
        report.max_params = report
            .max_params
            .max(case.learner.critic.len())
            .max(case.learner.actor.len());
        report.critic = report.critic.max(c);
        report.actor_3dpg = report.actor_3dpg.max(a3);
        report.actor_maddpg = report.actor_maddpg.max(am);
    }
    Ok(report)
}
