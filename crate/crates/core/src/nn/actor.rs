use serde::{Deserialize, Serialize};

use super::{Activation, EvalTape, MlpParams};
use crate::{Error, Result};

/// Per-dimension closed interval `[lo, hi]` of admissible actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct ActionBounds {
    bounds: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for ActionBounds {
    type Error = Error;

    fn try_from(bounds: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(bounds)
    }
}

impl From<ActionBounds> for Vec<(f64, f64)> {
    fn from(b: ActionBounds) -> Self {
        b.bounds
    }
}

impl ActionBounds {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config(
                "action bounds must have at least one dimension".into(),
            ));
        }
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::Config(format!(
                    "action bound {k} is [{lo}, {hi}]; need finite lo < hi"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Map a tanh output `t` in `[-1, 1]` of dimension `k` onto `[lo, hi]`.
    #[inline]
    pub fn rescale(&self, k: usize, t: f64) -> f64 {
        let (lo, hi) = self.bounds[k];
        lo + (t + 1.0) * (hi - lo) / 2.0
    }

    /// `d rescale / d t` for dimension `k`.
    #[inline]
    pub fn half_width(&self, k: usize) -> f64 {
        let (lo, hi) = self.bounds[k];
        (hi - lo) / 2.0
    }

    /// Inverse of [`rescale`](Self::rescale): position of `a` in `[lo, hi]` as a value in `[-1, 1]`.
    #[inline]
    pub fn normalize(&self, k: usize, a: f64) -> f64 {
        let (lo, hi) = self.bounds[k];
        (2.0 * a - lo - hi) / (hi - lo)
    }

    pub fn contains(&self, action: &[f64]) -> bool {
        action.len() == self.bounds.len()
            && action
                .iter()
                .zip(&self.bounds)
                .all(|(&a, &(lo, hi))| a >= lo && a <= hi)
    }

    pub fn clip(&self, action: &mut [f64]) {
        for (a, &(lo, hi)) in action.iter_mut().zip(&self.bounds) {
            *a = a.clamp(lo, hi);
        }
    }
}

fn check_actor(params: &MlpParams, bounds: &ActionBounds) -> Result<()> {
    if params.shape().output_activation() != Activation::Tanh {
        return Err(Error::Config(
            "actor networks must end in a tanh layer".into(),
        ));
    }
    if params.shape().output_dim() != bounds.dim() {
        return Err(Error::Dimension {
            what: "actor output vs action bounds",
            expected: bounds.dim(),
            got: params.shape().output_dim(),
        });
    }
    Ok(())
}

/// Deterministic policy: tanh network output rescaled onto `bounds`.
pub fn actor_forward(params: &MlpParams, obs: &[f64], bounds: &ActionBounds) -> Result<Vec<f64>> {
    let mut tape = EvalTape::for_shape(params.shape());
    let mut action = vec![0.0; bounds.dim()];
    actor_forward_into(params, obs, bounds, &mut tape, &mut action)?;
    Ok(action)
}

/// [`actor_forward`] writing into caller buffers; the tape can be used for backward.
pub fn actor_forward_into(
    params: &MlpParams,
    obs: &[f64],
    bounds: &ActionBounds,
    tape: &mut EvalTape,
    action: &mut [f64],
) -> Result<()> {
    check_actor(params, bounds)?;
    params.forward_into(obs, tape)?;
    for (k, (a, &t)) in action.iter_mut().zip(tape.output()).enumerate() {
        *a = bounds.rescale(k, t);
    }
    Ok(())
}
