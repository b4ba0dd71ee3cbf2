use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::reward::{displacement_norm, weight_from_directions};
use super::{
    reward_coord, reward_spread, AgentState, EnvConfig, GlobalState, JointAction,
    OrientationControl, Variant,
};
use crate::nn::ActionBounds;
use crate::{Error, Result};

const MAX_DISPLACEMENT: f64 = 0.1;
const MAX_TURN: f64 = 0.25;

fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Deterministic point-mass particle world on `[-1, 1]^2`.
#[derive(Debug, Clone)]
pub struct ParticleEnv {
    config: EnvConfig,
    bounds: ActionBounds,
}

impl ParticleEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        if config.num_agents == 0 || config.num_landmarks == 0 {
            return Err(Error::Config(
                "environment needs at least one agent and one landmark".into(),
            ));
        }
        if config.horizon == 0 {
            return Err(Error::Config("episode horizon must be positive".into()));
        }
        let mut bounds = vec![(-MAX_DISPLACEMENT, MAX_DISPLACEMENT); 2];
        if config.variant == Variant::Coord && config.orientation == OrientationControl::Steer {
            bounds.push((-MAX_TURN, MAX_TURN));
        }
        Ok(Self {
            bounds: ActionBounds::new(bounds)?,
            config,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn num_agents(&self) -> usize {
        self.config.num_agents
    }

    /// Per-agent action bounds (identical for all agents).
    pub fn action_bounds(&self) -> &ActionBounds {
        &self.bounds
    }

    pub fn action_dim(&self) -> usize {
        self.bounds.dim()
    }

    /// `2L + 2(D-1) + 2`.
    pub fn obs_dim(&self) -> usize {
        2 * self.config.num_landmarks + 2 * (self.config.num_agents - 1) + 2
    }

    /// Length of the concatenated-observation global state encoding.
    pub fn state_dim(&self) -> usize {
        self.config.num_agents * self.obs_dim()
    }

    /// Uniformly random agents, orientations and landmarks.
    pub fn reset(&self, seed: u64) -> GlobalState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point =
            |rng: &mut ChaCha8Rng| [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        let agents = (0..self.config.num_agents)
            .map(|_| {
                let pos = point(&mut rng);
                let theta = rng.random_range(0.0..TAU);
                AgentState { pos, theta }
            })
            .collect();
        let landmarks = (0..self.config.num_landmarks)
            .map(|_| point(&mut rng))
            .collect();
        GlobalState { agents, landmarks }
    }

    /// Apply a joint action. Actions must already lie inside the bounds.
    pub fn step(
        &self,
        state: &GlobalState,
        action: &JointAction,
    ) -> Result<(GlobalState, Vec<f64>)> {
        if action.num_agents() != state.num_agents() {
            return Err(Error::Dimension {
                what: "joint action",
                expected: state.num_agents(),
                got: action.num_agents(),
            });
        }
        for (i, a) in action.0.iter().enumerate() {
            if !self.bounds.contains(a) {
                return Err(Error::Contract(format!(
                    "action {a:?} of agent {i} is outside {:?}",
                    self.bounds.as_slice()
                )));
            }
        }

        let mut next = state.clone();
        for (agent, a) in next.agents.iter_mut().zip(&action.0) {
            agent.pos[0] = (agent.pos[0] + a[0]).clamp(-1.0, 1.0);
            agent.pos[1] = (agent.pos[1] + a[1]).clamp(-1.0, 1.0);
            if self.config.variant == Variant::Coord {
                match self.config.orientation {
                    OrientationControl::Steer => agent.theta = wrap_angle(agent.theta + a[2]),
                    OrientationControl::Heading => {
                        if a[0] != 0.0 || a[1] != 0.0 {
                            agent.theta = wrap_angle(a[1].atan2(a[0]));
                        }
                    }
                }
            }
        }
        let r = self.reward(&next);
        Ok((next, vec![r; state.num_agents()]))
    }

    /// Shared cooperative reward of a state.
    pub fn reward(&self, state: &GlobalState) -> f64 {
        match self.config.variant {
            Variant::Spread => reward_spread(state),
            Variant::Coord => reward_coord(state),
        }
    }

    pub fn observe(&self, state: &GlobalState, agent: usize) -> Result<Vec<f64>> {
        let mut obs = Vec::with_capacity(self.obs_dim());
        self.observe_into(state, agent, &mut obs)?;
        Ok(obs)
    }

    fn observe_into(&self, state: &GlobalState, agent: usize, obs: &mut Vec<f64>) -> Result<()> {
        let me = state.agents.get(agent).ok_or(Error::Dimension {
            what: "agent id",
            expected: state.num_agents(),
            got: agent,
        })?;
        for lm in &state.landmarks {
            obs.push(lm[0] - me.pos[0]);
            obs.push(lm[1] - me.pos[1]);
        }
        for (j, other) in state.agents.iter().enumerate() {
            if j != agent {
                obs.push(other.pos[0] - me.pos[0]);
                obs.push(other.pos[1] - me.pos[1]);
            }
        }
        obs.push(me.theta.cos());
        obs.push(me.theta.sin());
        Ok(())
    }

    /// Concatenation of every agent's observation.
    pub fn encode(&self, state: &GlobalState) -> Vec<f64> {
        let mut enc = Vec::with_capacity(self.state_dim());
        for i in 0..state.num_agents() {
            self.observe_into(state, i, &mut enc)
                .expect("agent index in range by construction");
        }
        enc
    }

    /// Slice of agent `i`'s observation inside a global state encoding.
    pub fn local<'a>(&self, encoding: &'a [f64], agent: usize) -> &'a [f64] {
        let d = self.obs_dim();
        &encoding[agent * d..(agent + 1) * d]
    }

    /// Recompute the shared reward from a global state encoding alone.
    ///
    /// Agrees exactly with [`ParticleEnv::reward`] on the state that was encoded.
    pub fn reward_from_encoding(&self, encoding: &[f64]) -> Result<f64> {
        if encoding.len() != self.state_dim() {
            return Err(Error::Dimension {
                what: "global state encoding",
                expected: self.state_dim(),
                got: encoding.len(),
            });
        }
        let d = self.obs_dim();
        let n_agents = self.config.num_agents;
        let n_lm = self.config.num_landmarks;
        let total: f64 = (0..n_lm)
            .map(|l| {
                (0..n_agents)
                    .map(|i| {
                        let o = &encoding[i * d..];
                        displacement_norm(o[2 * l], o[2 * l + 1])
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        let spread = (-(total / n_lm as f64)).exp();
        Ok(match self.config.variant {
            Variant::Spread => spread,
            Variant::Coord => {
                let dirs: Vec<(f64, f64)> = (0..n_agents)
                    .map(|i| (encoding[i * d + d - 2], encoding[i * d + d - 1]))
                    .collect();
                spread * weight_from_directions(&dirs)
            }
        })
    }
}
