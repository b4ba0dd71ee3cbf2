//! Independent single-agent DDPG used as a reduction oracle.
//!
//! Written against nn-core primitives only: no learner, no harness. The
//! floating-point operation order mirrors the obvious textbook loop so the
//! comparison can be bitwise.

#![allow(dead_code)]

use dpg_core::algos::{OuConfig, OuNoise, ReplayBuffer};
use dpg_core::env::{EnvConfig, GlobalTransition, JointAction, ParticleEnv};
use dpg_core::nn::{actor_forward, ActionBounds, Activation, MlpParams, MlpShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn alpha(n: u64) -> f64 {
    (-6.0f64).exp() / (n as f64 / 1000.0 + 1.0)
}

pub fn beta(n: u64) -> f64 {
    let d = n as f64 / 1000.0 + 1.0;
    let c = (-6.0f64).exp();
    c / d + c / (d * d)
}

pub struct Ddpg {
    pub bounds: ActionBounds,
    pub actor: MlpParams,
    pub critic: MlpParams,
    pub actor_target: MlpParams,
    pub critic_target: MlpParams,
    pub gamma: f64,
    pub tau: f64,
    pub minibatch: usize,
}

impl Ddpg {
    pub fn new(actor: MlpParams, critic: MlpParams, bounds: ActionBounds) -> Self {
        Self {
            bounds,
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            gamma: 0.9,
            tau: 0.01,
            minibatch: 128,
        }
    }

    fn encode(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        let mut x = state.to_vec();
        for (&a, &(lo, hi)) in action.iter().zip(self.bounds.as_slice()) {
            x.push((2.0 * a - lo - hi) / (hi - lo));
        }
        x
    }

    /// One minibatch update; returns the mean squared TD error, or `None`
    /// while the memory holds fewer than `minibatch` transitions.
    pub fn step(&mut self, memory: &ReplayBuffer, n: u64, rng: &mut ChaCha8Rng) -> Option<f64> {
        if memory.len() < self.minibatch {
            return None;
        }
        let idx = memory.sample_indices(self.minibatch, rng);
        let mut gc = vec![0.0; self.critic.len()];
        let mut ga = vec![0.0; self.actor.len()];
        let mut sq = 0.0;
        for &k in &idx {
            let t = memory.get(k).unwrap();
            let a_next = actor_forward(&self.actor_target, &t.next_state, &self.bounds).unwrap();
            let q_next = self
                .critic_target
                .forward(&self.encode(&t.next_state, &a_next))
                .unwrap()
                .0[0];
            let y = t.rewards[0] + self.gamma * q_next;
            let (q, tape) = self
                .critic
                .forward(&self.encode(&t.state, &t.actions.0[0]))
                .unwrap();
            let delta = y - q[0];
            sq += delta * delta;
            let (g, _) = self.critic.backward(&tape, &[delta]).unwrap();
            for (s, v) in gc.iter_mut().zip(&g) {
                *s += v;
            }

            let (u, actor_tape) = self.actor.forward(&t.state).unwrap();
            let a: Vec<f64> = u
                .iter()
                .zip(self.bounds.as_slice())
                .map(|(&t, &(lo, hi))| lo + (t + 1.0) * (hi - lo) / 2.0)
                .collect();
            let (_, tape) = self.critic.forward(&self.encode(&t.state, &a)).unwrap();
            let (_, dq_dx) = self.critic.backward(&tape, &[1.0]).unwrap();
            let dq_du = &dq_dx[t.state.len()..];
            let (g, _) = self.actor.backward(&actor_tape, dq_du).unwrap();
            for (s, v) in ga.iter_mut().zip(&g) {
                *s += v;
            }
        }
        let m = self.minibatch as f64;
        let (sa, sb) = (alpha(n) / m, beta(n) / m);
        let mut c = self.critic.values().to_vec();
        for (v, g) in c.iter_mut().zip(&gc) {
            *v += sa * g;
        }
        self.critic.set_values(&c).unwrap();
        let mut p = self.actor.values().to_vec();
        for (v, g) in p.iter_mut().zip(&ga) {
            *v += sb * g;
        }
        self.actor.set_values(&p).unwrap();
        let track = |target: &mut MlpParams, online: &MlpParams, tau: f64| {
            let v: Vec<f64> = target
                .values()
                .iter()
                .zip(online.values())
                .map(|(t, o)| (1.0 - tau) * t + tau * o)
                .collect();
            target.set_values(&v).unwrap();
        };
        track(&mut self.critic_target, &self.critic, self.tau);
        track(&mut self.actor_target, &self.actor, self.tau);
        Some(sq / m)
    }
}

/// Per-epoch values the harness writes for a one-agent centralized run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub mean_reward: f64,
    pub actor_norm: f64,
    pub critic_norm: f64,
    pub mean_sq_td: Option<f64>,
}

fn norm(p: &MlpParams) -> f64 {
    p.values().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A plain DDPG training loop on a one-agent environment, seeded the way the
/// harness documents its streams.
pub fn reference_run(
    env_config: EnvConfig,
    seed: u64,
    epochs: usize,
    actor_hidden: &[usize],
    critic_hidden: &[usize],
    capacity: usize,
) -> Vec<ReferenceRow> {
    let env = ParticleEnv::new(env_config).unwrap();
    assert_eq!(env.num_agents(), 1);
    let bounds = env.action_bounds().clone();
    let mut init = stream(seed, 1);
    let actor_shape = MlpShape::from_widths(
        env.obs_dim(),
        actor_hidden,
        Activation::Gelu,
        env.action_dim(),
        Activation::Tanh,
    )
    .unwrap();
    let critic_shape = MlpShape::from_widths(
        env.obs_dim() + env.action_dim(),
        critic_hidden,
        Activation::Gelu,
        1,
        Activation::Identity,
    )
    .unwrap();
    let actor = MlpParams::init_uniform(actor_shape, &mut init);
    let critic = MlpParams::init_uniform(critic_shape, &mut init);
    let mut agent = Ddpg::new(actor, critic, bounds.clone());
    let mut memory = ReplayBuffer::new(capacity).unwrap();
    let mut env_rng = stream(seed, 0);
    let mut noise_rng = stream(seed, 16);
    let mut train_rng = stream(seed, 1024);
    let ou = OuConfig::default();
    let mut noise = OuNoise::from_config(env.action_dim(), &ou);
    let mut n = 0u64;
    let mut rows = Vec::new();
    for epoch in 0..epochs {
        noise.reset();
        noise.sigma = ou.sigma * ou.sigma_decay.powi(epoch as i32);
        let mut state = env.reset(env_rng.random());
        let (mut reward, mut td, mut td_count) = (0.0, 0.0, 0u64);
        for _ in 0..env.config().horizon {
            let obs = env.observe(&state, 0).unwrap();
            let mut a = actor_forward(&agent.actor, &obs, &bounds).unwrap();
            let x = noise.sample(&mut noise_rng);
            for (k, v) in a.iter_mut().enumerate() {
                *v += x[k] * bounds.half_width(k);
            }
            bounds.clip(&mut a);
            let joint = JointAction(vec![a]);
            let (next, r) = env.step(&state, &joint).unwrap();
            reward += r[0];
            memory.push(GlobalTransition {
                state: env.encode(&state),
                actions: joint,
                rewards: r,
                next_state: env.encode(&next),
                origin_step: n,
                raw: None,
            });
            if let Some(sq) = agent.step(&memory, n, &mut train_rng) {
                td += sq;
                td_count += 1;
            }
            state = next;
            n += 1;
        }
        rows.push(ReferenceRow {
            mean_reward: reward / env.config().horizon as f64,
            actor_norm: norm(&agent.actor),
            critic_norm: norm(&agent.critic),
            mean_sq_td: (td_count > 0).then(|| td / td_count as f64),
        });
    }
    rows
}
