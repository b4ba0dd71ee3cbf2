use crate::{Error, Result};

pub const MIN_DOMINANCE_SAMPLES: usize = 1000;

/// Outcome of comparing an empirical AoI tail with a candidate tail.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub dominated: bool,
    /// `min_m candidate(m) + epsilon - empirical(m)`; negative when violated.
    pub worst_margin: f64,
    /// Where the worst margin occurs.
    pub worst_at: u64,
    /// DKW band half-width.
    pub epsilon: f64,
    pub samples: usize,
}

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band for `n` samples at the
/// given confidence level.
pub fn dkw_epsilon(n: usize, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt()
}

/// Check `P(tau > m) <= tail(m)` pointwise, with the empirical CCDF of the
/// pooled samples allowed to exceed the candidate by the DKW band.
pub fn dominance_check(
    samples: &[u64],
    tail: impl Fn(u64) -> f64,
    confidence: f64,
) -> Result<DominanceReport> {
    if samples.len() < MIN_DOMINANCE_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_DOMINANCE_SAMPLES,
            have: samples.len(),
        });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Config(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let epsilon = dkw_epsilon(n, confidence);
    let max = *sorted.last().expect("nonempty");
    let mut worst_margin = f64::INFINITY;
    let mut worst_at = 0;
    let mut below_or_at = 0usize;
    for m in 0..=max {
        while below_or_at < n && sorted[below_or_at] <= m {
            below_or_at += 1;
        }
        let empirical = (n - below_or_at) as f64 / n as f64;
        let margin = tail(m) + epsilon - empirical;
        if margin < worst_margin {
            worst_margin = margin;
            worst_at = m;
        }
    }
    Ok(DominanceReport {
        dominated: worst_margin >= 0.0,
        worst_margin,
        worst_at,
        epsilon,
        samples: n,
    })
}

/// `P(shift + T > m)` where `T` counts Bernoulli(`p`) trials up to and
/// including the `successes`-th success.
///
/// For a link that gets access with probability `p`, a policy update of
/// origin `u` or later is always delivered within `shift + T` slots of `u`:
/// at most `successes` successful slots stand between slot `u` and the
/// completion of the next policy, and at most `shift` further slots can pass
/// while the link is filling up with tuples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionTimeBound {
    pub shift: u64,
    pub successes: u64,
    pub p: f64,
}

impl CompletionTimeBound {
    pub fn new(shift: u64, successes: u64, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) || successes == 0 {
            return Err(Error::Config(format!(
                "completion bound needs p in (0, 1] and at least one success, got p={p}, r={successes}"
            )));
        }
        Ok(Self {
            shift,
            successes,
            p,
        })
    }

    /// Bound for the policy/tuple cycle on one link.
    ///
    /// At slot `u` at most `budget - 1 + policy` bits are queued, the rest of
    /// the cycle adds at most `K * tuple` bits, and the next policy another
    /// `policy` bits, all moved by full-budget successes. One more success
    /// drains the link before the policy may start. Slots with less than a
    /// budget queued that enqueue a tuple number at most `K + ceil(budget / tuple)`.
    pub fn for_cycle(
        budget_bits: u64,
        policy_bits: u64,
        tuple_bits: u64,
        tuples_per_cycle: u64,
        p: f64,
    ) -> Result<Self> {
        if budget_bits == 0 || tuple_bits == 0 {
            return Err(Error::Config(
                "budget and tuple size must be positive".into(),
            ));
        }
        let bits = budget_bits - 1 + 2 * policy_bits + tuples_per_cycle * tuple_bits;
        let successes = bits.div_ceil(budget_bits) + 1;
        let shift = tuples_per_cycle + budget_bits.div_ceil(tuple_bits);
        Self::new(shift, successes, p)
    }

    /// `P(T > t)`, i.e. fewer than `successes` successes in `t` trials.
    pub fn trials_tail(&self, t: u64) -> f64 {
        let r = self.successes;
        if t < r {
            return 1.0;
        }
        if self.p >= 1.0 {
            return 0.0;
        }
        let ln_p = self.p.ln();
        let ln_q = (-self.p).ln_1p();
        let tf = t as f64;
        let ln_t_fact = libm::lgamma(tf + 1.0);
        (0..r)
            .map(|k| {
                let kf = k as f64;
                let ln_c = ln_t_fact - libm::lgamma(kf + 1.0) - libm::lgamma(tf - kf + 1.0);
                (ln_c + kf * ln_p + (tf - kf) * ln_q).exp()
            })
            .sum::<f64>()
            .min(1.0)
    }

    /// `P(shift + T > m)`.
    pub fn tail(&self, m: u64) -> f64 {
        match m.checked_sub(self.shift) {
            None => 1.0,
            Some(t) => self.trials_tail(t),
        }
    }

    pub fn mean(&self) -> f64 {
        self.shift as f64 + self.successes as f64 / self.p
    }

    /// `E[(shift + T)^q]` by summing `((m+1)^q - m^q) P(X > m)` until the
    /// tail is negligible.
    pub fn moment(&self, q: f64) -> f64 {
        let mut total = 0.0;
        let mut m = 0u64;
        loop {
            let tail = self.tail(m);
            let mf = m as f64;
            total += ((mf + 1.0).powf(q) - mf.powf(q)) * tail;
            if m > self.shift + self.successes && tail < 1e-16 {
                break;
            }
            m += 1;
        }
        total
    }
}
