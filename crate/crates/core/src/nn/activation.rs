use serde::{Deserialize, Serialize};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian error linear unit, `x * Phi(x)`.
///
/// Uses the exact erf form (erf from `libm`, a port of the musl/FreeBSD
/// implementation) rather than the tanh approximation, so that
/// [`gelu_prime`] is the true derivative.
pub fn gelu(x: f64) -> f64 {
    x * std_normal_cdf(x)
}

/// Exact derivative of [`gelu`]: `Phi(x) + x * phi(x)`.
pub fn gelu_prime(x: f64) -> f64 {
    std_normal_cdf(x) + x * std_normal_pdf(x)
}

pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

pub(crate) fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Element-wise activation. All variants are twice continuously differentiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Gelu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Gelu => gelu(z),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z`, given the already computed output `y`.
    #[inline]
    pub fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Gelu => gelu_prime(z),
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}
