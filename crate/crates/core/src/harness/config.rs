use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algos::{Algo, OuConfig, StepSizeSchedule, TrainConfig};
use crate::env::EnvConfig;
use crate::net::NetworkConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Global tuples and current peer policies are available to every agent.
    Centralized,
    /// Everything an agent knows about its peers arrives over the simulated network.
    Networked,
}

/// Staleness gradient error diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Diagnostics {
    #[default]
    Off,
    /// Compare against the true current peer actors, which the simulation
    /// can see even when the agents cannot.
    Shadow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_minibatch")]
    pub minibatch: usize,
    #[serde(default = "default_replay")]
    pub replay_capacity: usize,
    #[serde(default = "default_tau_soft")]
    pub tau_soft: f64,
    #[serde(default = "default_actor_hidden")]
    pub actor_hidden: Vec<usize>,
    #[serde(default = "default_critic_hidden")]
    pub critic_hidden: Vec<usize>,
    #[serde(default)]
    pub critic_steps: StepSizeSchedule,
    #[serde(default)]
    pub actor_steps: StepSizeSchedule,
    #[serde(default)]
    pub ou: OuConfig,
    /// Abort when any parameter vector's Euclidean norm exceeds this.
    #[serde(default = "default_ceiling")]
    pub param_ceiling: f64,
    /// `false` acts and collects without ever updating the networks.
    #[serde(default = "default_true")]
    pub learn: bool,
    /// Start every actor at all-zero parameters.
    #[serde(default)]
    pub zero_actor: bool,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    /// Transitions per epoch fed to the staleness diagnostic.
    #[serde(default = "default_diag_samples")]
    pub diagnostic_samples: usize,
}

fn default_gamma() -> f64 {
    0.9
}
fn default_minibatch() -> usize {
    128
}
fn default_replay() -> usize {
    20_000
}
fn default_tau_soft() -> f64 {
    0.01
}
fn default_actor_hidden() -> Vec<usize> {
    vec![64, 8]
}
fn default_critic_hidden() -> Vec<usize> {
    vec![128, 32]
}
fn default_ceiling() -> f64 {
    1e6
}
fn default_true() -> bool {
    true
}
fn default_diag_samples() -> usize {
    16
}

impl Default for HyperConfig {
    fn default() -> Self {
        Self {
            gamma: default_gamma(),
            minibatch: default_minibatch(),
            replay_capacity: default_replay(),
            tau_soft: default_tau_soft(),
            actor_hidden: default_actor_hidden(),
            critic_hidden: default_critic_hidden(),
            critic_steps: StepSizeSchedule::default(),
            actor_steps: StepSizeSchedule::default(),
            ou: OuConfig::default(),
            param_ceiling: default_ceiling(),
            learn: true,
            zero_actor: false,
            diagnostics: Diagnostics::Off,
            diagnostic_samples: default_diag_samples(),
        }
    }
}

impl HyperConfig {
    /// The full-scale critic `(1024, 64)`.
    pub fn paper() -> Self {
        Self {
            critic_hidden: vec![1024, 64],
            ..Self::default()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            gamma: self.gamma,
            minibatch: self.minibatch,
            tau_soft: self.tau_soft,
            critic_steps: self.critic_steps,
            actor_steps: self.actor_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub mode: Mode,
    pub algo: Algo,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub hyper: HyperConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkConfig>,
}

impl RunConfig {
    /// Desk-scale profile: 300 epochs, 5 seeds, critic `(128, 32)`.
    pub fn desk(name: &str, mode: Mode, algo: Algo) -> Self {
        Self {
            name: name.to_string(),
            epochs: 300,
            seeds: (0..5).collect(),
            mode,
            algo,
            env: EnvConfig::default(),
            hyper: HyperConfig::default(),
            network: None,
        }
    }

    /// Full-scale profile: 1500 epochs, 10 seeds, critic `(1024, 64)`.
    pub fn paper(name: &str, mode: Mode, algo: Algo) -> Self {
        Self {
            epochs: 1500,
            seeds: (0..10).collect(),
            hyper: HyperConfig::paper(),
            ..Self::desk(name, mode, algo)
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        match (self.mode, &self.network) {
            (Mode::Networked, None) => {
                return Err(Error::Config(
                    "networked mode needs a [network] block".into(),
                ))
            }
            (Mode::Centralized, Some(_)) => {
                return Err(Error::Config(
                    "a [network] block is only meaningful in networked mode".into(),
                ))
            }
            (Mode::Networked, Some(net)) => {
                if self.algo == Algo::Maddpg {
                    return Err(Error::Config(
                        "MADDPG is only supported with centralized training".into(),
                    ));
                }
                net.validate(self.env.num_agents)?;
            }
            (Mode::Centralized, None) => {}
        }
        if self.env.num_agents == 0 {
            return Err(Error::Config("env.num_agents must be positive".into()));
        }
        if self.env.horizon == 0 {
            return Err(Error::Config("env.horizon must be positive".into()));
        }
        let h = &self.hyper;
        if !(h.gamma > 0.0 && h.gamma < 1.0) {
            return Err(Error::Config(format!(
                "hyper.gamma must lie in (0, 1), got {}",
                h.gamma
            )));
        }
        if h.minibatch == 0 || h.replay_capacity == 0 {
            return Err(Error::Config(
                "hyper.minibatch and hyper.replay_capacity must be positive".into(),
            ));
        }
        if !(h.tau_soft > 0.0 && h.tau_soft <= 1.0) {
            return Err(Error::Config(format!(
                "hyper.tau_soft must lie in (0, 1], got {}",
                h.tau_soft
            )));
        }
        if h.actor_hidden.contains(&0) || h.critic_hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        if !(h.param_ceiling > 0.0) {
            return Err(Error::Config("hyper.param_ceiling must be positive".into()));
        }
        if h.ou.sigma < 0.0 || h.ou.theta < 0.0 || h.ou.dt <= 0.0 || h.ou.sigma_decay <= 0.0 {
            return Err(Error::Config("hyper.ou parameters out of range".into()));
        }
        Ok(())
    }
}
