use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Spread,
    Coord,
}

/// How an agent's orientation evolves in the coordination variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationControl {
    /// A third action component `d_theta` in `[-0.25, 0.25]` rad turns the agent.
    #[default]
    Steer,
    /// Orientation follows the direction of the last nonzero displacement.
    Heading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub variant: Variant,
    pub num_agents: usize,
    pub num_landmarks: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub orientation: OrientationControl,
}

fn default_horizon() -> usize {
    25
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Coord,
            num_agents: 2,
            num_landmarks: 3,
            horizon: default_horizon(),
            seed: 0,
            orientation: OrientationControl::Steer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub pos: [f64; 2],
    /// Wrapped to `[0, 2*pi)`.
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalState {
    pub agents: Vec<AgentState>,
    pub landmarks: Vec<[f64; 2]>,
}

impl GlobalState {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }
}

/// One action vector per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAction(pub Vec<Vec<f64>>);

impl JointAction {
    pub fn agent(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn num_agents(&self) -> usize {
        self.0.len()
    }
}

/// Global data tuple `(s_m, a_m, r_m, s_{m+1})` as held in replay memory.
///
/// `state`/`next_state` are the concatenated local observations; `raw`
/// keeps the underlying global states when they are known (centralized
/// collection) for reward recomputation and debugging.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTransition {
    pub state: Vec<f64>,
    pub actions: JointAction,
    pub rewards: Vec<f64>,
    pub next_state: Vec<f64>,
    pub origin_step: u64,
    pub raw: Option<Box<(GlobalState, GlobalState)>>,
}
