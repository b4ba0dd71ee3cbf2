use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{OuNoise, ReplayBuffer, StepSizeSchedule};
use crate::env::{GlobalTransition, JointAction};
use crate::net::PolicyCache;
use crate::nn::{actor_forward_into, ActionBounds, Activation, EvalTape, MlpParams, MlpShape};
use crate::{Error, Result};

/// Which actor gradient an agent follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algo {
    /// Peer action slots filled by (aged) peer policies.
    #[serde(rename = "3dpg")]
    ThreeDpg,
    /// Peer action slots filled by the actions stored in the transition.
    #[serde(rename = "maddpg")]
    Maddpg,
}

/// How observations and actions of all agents are laid out in critic inputs.
///
/// Critic input is `[s^1, ..., s^D, u^1, ..., u^D]` where `u^j` is action
/// `a^j` normalized to `[-1, 1]` per component; the global state encoding
/// `[s^1, ..., s^D]` doubles as the concatenation of local observations, so
/// agent `i`'s actor reads slice `i` of it.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentLayout {
    pub num_agents: usize,
    pub obs_dim: usize,
    pub bounds: ActionBounds,
}

impl AgentLayout {
    pub fn action_dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn state_dim(&self) -> usize {
        self.num_agents * self.obs_dim
    }

    pub fn critic_input_dim(&self) -> usize {
        self.state_dim() + self.num_agents * self.action_dim()
    }

    pub fn action_offset(&self, agent: usize) -> usize {
        self.state_dim() + agent * self.action_dim()
    }

    /// Write the normalized encoding of `action` into a critic action slot.
    pub fn encode_action(&self, action: &[f64], slot: &mut [f64]) {
        for (k, (u, &a)) in slot.iter_mut().zip(action).enumerate() {
            *u = self.bounds.normalize(k, a);
        }
    }

    /// Full critic input for a state encoding and env-unit joint actions.
    pub fn critic_input(&self, state: &[f64], actions: &[Vec<f64>]) -> Vec<f64> {
        let mut x = state.to_vec();
        for a in actions {
            x.extend(
                a.iter()
                    .enumerate()
                    .map(|(k, &v)| self.bounds.normalize(k, v)),
            );
        }
        x
    }

    pub fn local_obs<'a>(&self, state: &'a [f64], agent: usize) -> &'a [f64] {
        &state[agent * self.obs_dim..(agent + 1) * self.obs_dim]
    }
}

/// Where the non-own action slots of the critic input come from.
#[derive(Clone, Copy)]
enum PeerSource<'a> {
    Policies(&'a PolicyCache),
    Stored(&'a JointAction),
}

/// Reusable buffers for per-sample gradient evaluation.
#[derive(Debug, Clone, Default)]
pub(crate) struct GradScratch {
    critic_in: Vec<f64>,
    critic_tape: EvalTape,
    own_tape: EvalTape,
    peer_tape: EvalTape,
    dq_din: Vec<f64>,
    actor_out_grad: Vec<f64>,
}

/// Local actor, local critic and their target copies for one agent.
#[derive(Debug, Clone)]
pub struct AgentLearner {
    pub id: usize,
    pub algo: Algo,
    pub layout: AgentLayout,
    pub actor: MlpParams,
    pub critic: MlpParams,
    pub actor_target: MlpParams,
    pub critic_target: MlpParams,
    scratch: GradScratch,
}

impl AgentLearner {
    /// Randomly initialized GELU networks with a tanh actor head and a linear critic head.
    pub fn new<R: Rng + ?Sized>(
        id: usize,
        algo: Algo,
        layout: AgentLayout,
        actor_hidden: &[usize],
        critic_hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let actor_shape = MlpShape::from_widths(
            layout.obs_dim,
            actor_hidden,
            Activation::Gelu,
            layout.action_dim(),
            Activation::Tanh,
        )?;
        let critic_shape = MlpShape::from_widths(
            layout.critic_input_dim(),
            critic_hidden,
            Activation::Gelu,
            1,
            Activation::Identity,
        )?;
        let actor = MlpParams::init_uniform(actor_shape, rng);
        let critic = MlpParams::init_uniform(critic_shape, rng);
        Self::from_params(id, algo, layout, actor, critic)
    }

    /// Build from explicit networks; targets start as copies.
    pub fn from_params(
        id: usize,
        algo: Algo,
        layout: AgentLayout,
        actor: MlpParams,
        critic: MlpParams,
    ) -> Result<Self> {
        if id >= layout.num_agents {
            return Err(Error::Config(format!(
                "agent id {id} out of range for {} agents",
                layout.num_agents
            )));
        }
        if actor.shape().input_dim() != layout.obs_dim {
            return Err(Error::Dimension {
                what: "actor input",
                expected: layout.obs_dim,
                got: actor.shape().input_dim(),
            });
        }
        if actor.shape().output_dim() != layout.action_dim()
            || actor.shape().output_activation() != Activation::Tanh
        {
            return Err(Error::Config(
                "actor must map to the action dimension through a tanh layer".into(),
            ));
        }
        if critic.shape().input_dim() != layout.critic_input_dim() {
            return Err(Error::Dimension {
                what: "critic input",
                expected: layout.critic_input_dim(),
                got: critic.shape().input_dim(),
            });
        }
        if critic.shape().output_dim() != 1 {
            return Err(Error::Dimension {
                what: "critic output",
                expected: 1,
                got: critic.shape().output_dim(),
            });
        }
        Ok(Self {
            id,
            algo,
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            layout,
            scratch: GradScratch::default(),
        })
    }

    /// Write policy actions for every agent into the action slots of
    /// `scratch.critic_in`. The own slot uses the target or online actor
    /// and leaves its tape in `scratch.own_tape`.
    fn fill_policy_actions(
        &self,
        scratch: &mut GradScratch,
        state: &[f64],
        own_target: bool,
        peers: PeerSource<'_>,
    ) -> Result<()> {
        let layout = &self.layout;
        let act_dim = layout.action_dim();
        for j in 0..layout.num_agents {
            let off = layout.action_offset(j);
            let slot = &mut scratch.critic_in[off..off + act_dim];
            let obs = layout.local_obs(state, j);
            if j == self.id {
                let params = if own_target {
                    &self.actor_target
                } else {
                    &self.actor
                };
                actor_forward_into(params, obs, &layout.bounds, &mut scratch.own_tape, slot)?;
                normalize_in_place(&layout.bounds, slot);
                continue;
            }
            match peers {
                PeerSource::Policies(cache) => {
                    let peer = cache.get(j)?;
                    actor_forward_into(
                        &peer.params,
                        obs,
                        &layout.bounds,
                        &mut scratch.peer_tape,
                        slot,
                    )?;
                    normalize_in_place(&layout.bounds, slot);
                }
                PeerSource::Stored(actions) => {
                    let a = actions.0.get(j).ok_or_else(|| {
                        Error::DataCorruption(format!("stored joint action lacks agent {j}"))
                    })?;
                    if a.len() != act_dim {
                        return Err(Error::DataCorruption(format!(
                            "stored action of agent {j} has {} components, expected {act_dim}",
                            a.len()
                        )));
                    }
                    layout.encode_action(a, slot);
                }
            }
        }
        Ok(())
    }

    fn prepare(&self, scratch: &mut GradScratch, state: &[f64]) -> Result<()> {
        let layout = &self.layout;
        if state.len() != layout.state_dim() {
            return Err(Error::Dimension {
                what: "global state encoding",
                expected: layout.state_dim(),
                got: state.len(),
            });
        }
        scratch.critic_in.resize(layout.critic_input_dim(), 0.0);
        scratch.critic_in[..layout.state_dim()].copy_from_slice(state);
        Ok(())
    }

    /// Adds `grad_theta Q(s_m, a_m) * delta` to `acc` and returns `delta`.
    pub(crate) fn accumulate_critic_gradient(
        &self,
        scratch: &mut GradScratch,
        aged: &PolicyCache,
        t: &GlobalTransition,
        gamma: f64,
        acc: &mut [f64],
    ) -> Result<f64> {
        let layout = &self.layout;
        if t.actions.num_agents() != layout.num_agents {
            return Err(Error::DataCorruption(format!(
                "transition holds {} actions for {} agents",
                t.actions.num_agents(),
                layout.num_agents
            )));
        }
        let reward = *t.rewards.get(self.id).ok_or_else(|| {
            Error::DataCorruption(format!("transition lacks a reward for agent {}", self.id))
        })?;

        // bootstrap target with the aged product policy
        self.prepare(scratch, &t.next_state)?;
        self.fill_policy_actions(scratch, &t.next_state, true, PeerSource::Policies(aged))?;
        self.critic_target
            .forward_into(&scratch.critic_in, &mut scratch.critic_tape)?;
        let target = reward + gamma * scratch.critic_tape.output()[0];

        self.prepare(scratch, &t.state)?;
        self.fill_policy_actions_stored(scratch, &t.actions)?;
        self.critic
            .forward_into(&scratch.critic_in, &mut scratch.critic_tape)?;
        let delta = target - scratch.critic_tape.output()[0];
        self.critic
            .backward_into(&mut scratch.critic_tape, &[delta], Some(acc), None)?;
        Ok(delta)
    }

    fn fill_policy_actions_stored(
        &self,
        scratch: &mut GradScratch,
        actions: &JointAction,
    ) -> Result<()> {
        let act_dim = self.layout.action_dim();
        for (j, a) in actions.0.iter().enumerate() {
            if a.len() != act_dim {
                return Err(Error::DataCorruption(format!(
                    "stored action of agent {j} has {} components, expected {act_dim}",
                    a.len()
                )));
            }
            let off = self.layout.action_offset(j);
            self.layout
                .encode_action(a, &mut scratch.critic_in[off..off + act_dim]);
        }
        Ok(())
    }

    /// Adds `grad_phi pi^i(s^i) * grad_{a^i} Q^i(s, a)` to `acc`, with the own
    /// action slot filled by the current actor and peers per `peers`.
    fn accumulate_actor_gradient(
        &self,
        scratch: &mut GradScratch,
        state: &[f64],
        peers: PeerSource<'_>,
        acc: &mut [f64],
    ) -> Result<()> {
        let layout = &self.layout;
        self.prepare(scratch, state)?;
        self.fill_policy_actions(scratch, state, false, peers)?;
        self.critic
            .forward_into(&scratch.critic_in, &mut scratch.critic_tape)?;
        scratch.dq_din.resize(layout.critic_input_dim(), 0.0);
        self.critic.backward_into(
            &mut scratch.critic_tape,
            &[1.0],
            None,
            Some(&mut scratch.dq_din),
        )?;
        let off = layout.action_offset(self.id);
        scratch.actor_out_grad.clear();
        scratch.actor_out_grad.extend(
            // the slot holds normalize(rescale(t)) = t, so dQ/dt is read off directly
            (0..layout.action_dim()).map(|k| scratch.dq_din[off + k]),
        );
        self.actor.backward_into(
            &mut scratch.own_tape,
            &scratch.actor_out_grad,
            Some(acc),
            None,
        )
    }

    /// Semi-gradient of the local squared Bellman error for one transition,
    /// oriented for ascent: `grad_theta Q(s_m, a_m) * delta` where
    /// `delta = r + gamma * Q_target(s_{m+1}, pi_aged(s_{m+1})) - Q(s_m, a_m)`.
    pub fn critic_sample_gradient(
        &self,
        aged: &PolicyCache,
        t: &GlobalTransition,
        gamma: f64,
    ) -> Result<Vec<f64>> {
        check_gamma(gamma)?;
        let mut scratch = GradScratch::default();
        let mut acc = vec![0.0; self.critic.len()];
        self.accumulate_critic_gradient(&mut scratch, aged, t, gamma, &mut acc)?;
        Ok(acc)
    }

    /// Actor gradient with every peer slot filled by its aged cached policy.
    pub fn actor_sample_gradient_3dpg(
        &self,
        aged: &PolicyCache,
        state: &[f64],
    ) -> Result<Vec<f64>> {
        let mut scratch = GradScratch::default();
        let mut acc = vec![0.0; self.actor.len()];
        self.accumulate_actor_gradient(&mut scratch, state, PeerSource::Policies(aged), &mut acc)?;
        Ok(acc)
    }

    /// Actor gradient with peer slots filled by the stored actions `a^j_m`.
    /// Only the peer entries of `peer_actions` are read.
    pub fn actor_sample_gradient_maddpg(
        &self,
        state: &[f64],
        peer_actions: &JointAction,
    ) -> Result<Vec<f64>> {
        if peer_actions.num_agents() != self.layout.num_agents {
            return Err(Error::DataCorruption(format!(
                "joint action holds {} agents, expected {}",
                peer_actions.num_agents(),
                self.layout.num_agents
            )));
        }
        let mut scratch = GradScratch::default();
        let mut acc = vec![0.0; self.actor.len()];
        self.accumulate_actor_gradient(
            &mut scratch,
            state,
            PeerSource::Stored(peer_actions),
            &mut acc,
        )?;
        Ok(acc)
    }

    /// Q-value of the critic at an explicit critic input.
    pub fn q_value(&self, state: &[f64], actions: &JointAction) -> Result<f64> {
        let mut scratch = GradScratch::default();
        self.prepare(&mut scratch, state)?;
        self.fill_policy_actions_stored(&mut scratch, actions)?;
        let (out, _) = self.critic.forward(&scratch.critic_in)?;
        Ok(out[0])
    }

    /// Exploratory action: policy output plus the next OU sample scaled to the
    /// half-width of each action interval, clipped to the bounds.
    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        noise: &mut OuNoise,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let bounds = &self.layout.bounds;
        let mut tape = EvalTape::default();
        let mut action = vec![0.0; bounds.dim()];
        actor_forward_into(&self.actor, obs, bounds, &mut tape, &mut action)?;
        let x = noise.sample(rng);
        for (k, a) in action.iter_mut().enumerate() {
            *a += x[k] * bounds.half_width(k);
        }
        bounds.clip(&mut action);
        Ok(action)
    }

    /// One minibatch update of critic and actor followed by target tracking.
    ///
    /// Both gradient sums are evaluated at the pre-update critic; samples are
    /// summed in draw order so the result is bitwise reproducible.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        aged: &PolicyCache,
        n: u64,
        config: &TrainConfig,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        check_gamma(config.gamma)?;
        if config.minibatch == 0 {
            return Err(Error::Config("minibatch size must be positive".into()));
        }
        if buffer.len() < config.minibatch {
            return Ok(StepOutcome::Skipped {
                have: buffer.len(),
                need: config.minibatch,
            });
        }
        let indices = buffer.sample_indices(config.minibatch, rng);
        let mut scratch = std::mem::take(&mut self.scratch);
        let mut critic_sum = vec![0.0; self.critic.len()];
        let mut actor_sum = vec![0.0; self.actor.len()];
        let mut delta_sq = 0.0;
        for &idx in &indices {
            let t = buffer.get(idx).expect("sampled index in range");
            let delta = self.accumulate_critic_gradient(
                &mut scratch,
                aged,
                t,
                config.gamma,
                &mut critic_sum,
            )?;
            delta_sq += delta * delta;
            let peers = match self.algo {
                Algo::ThreeDpg => PeerSource::Policies(aged),
                Algo::Maddpg => PeerSource::Stored(&t.actions),
            };
            self.accumulate_actor_gradient(&mut scratch, &t.state, peers, &mut actor_sum)?;
        }
        self.scratch = scratch;

        let m = config.minibatch as f64;
        self.critic
            .add_scaled(config.critic_steps.alpha(n) / m, &critic_sum)?;
        self.actor
            .add_scaled(config.actor_steps.beta(n) / m, &actor_sum)?;
        self.critic_target
            .soft_update_from(&self.critic, config.tau_soft)?;
        self.actor_target
            .soft_update_from(&self.actor, config.tau_soft)?;
        Ok(StepOutcome::Updated {
            mean_sq_td: delta_sq / m,
        })
    }
}

fn normalize_in_place(bounds: &ActionBounds, slot: &mut [f64]) {
    for (k, u) in slot.iter_mut().enumerate() {
        *u = bounds.normalize(k, *u);
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "discount must lie in (0, 1), got {gamma}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub minibatch: usize,
    pub tau_soft: f64,
    /// Critic steps use `alpha(n)` of this schedule.
    pub critic_steps: StepSizeSchedule,
    /// Actor steps use `beta(n)` of this schedule.
    pub actor_steps: StepSizeSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            minibatch: 128,
            tau_soft: 0.01,
            critic_steps: StepSizeSchedule::default(),
            actor_steps: StepSizeSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Updated {
        mean_sq_td: f64,
    },
    /// Replay memory holds fewer than a minibatch of transitions.
    Skipped {
        have: usize,
        need: usize,
    },
}
