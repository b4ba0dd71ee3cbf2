use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuConfig {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Multiplicative per-epoch decay of sigma; 1.0 keeps exploration constant.
    #[serde(default = "default_decay")]
    pub sigma_decay: f64,
}

fn default_theta() -> f64 {
    0.15
}
fn default_sigma() -> f64 {
    0.2
}
fn default_dt() -> f64 {
    1.0
}
fn default_decay() -> f64 {
    1.0
}

impl Default for OuConfig {
    fn default() -> Self {
        Self {
            theta: default_theta(),
            sigma: default_sigma(),
            dt: default_dt(),
            sigma_decay: default_decay(),
        }
    }
}

/// Mean-zero Ornstein-Uhlenbeck exploration process.
///
/// `x <- x - theta * x * dt + sigma * sqrt(dt) * N(0, I)`
#[derive(Debug, Clone, PartialEq)]
pub struct OuNoise {
    state: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
    pub dt: f64,
}

impl OuNoise {
    pub fn new(dim: usize, theta: f64, sigma: f64, dt: f64) -> Self {
        Self {
            state: vec![0.0; dim],
            theta,
            sigma,
            dt,
        }
    }

    pub fn from_config(dim: usize, config: &OuConfig) -> Self {
        Self::new(dim, config.theta, config.sigma, config.dt)
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn set_state(&mut self, x: &[f64]) {
        self.state.copy_from_slice(x);
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Advance one step and return the new state.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        let diffusion = self.sigma * self.dt.sqrt();
        for x in &mut self.state {
            let z: f64 = rng.sample(StandardNormal);
            *x += -self.theta * *x * self.dt + diffusion * z;
        }
        &self.state
    }
}
