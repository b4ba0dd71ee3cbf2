//! Step-size sequences for the critic (`alpha`) and actor (`beta`).
//!
//! The default family is `alpha(n) = c / (n/s + 1)` and
//! `beta(n) = alpha(n) + c / (n/s + 1)^2` with `c = e^-6`, `s = 1000`.
//! Both are positive and decreasing. `sum alpha(n)` diverges like the
//! harmonic series while `sum alpha(n)^2` converges (it is bounded by
//! `c^2 s^2 * pi^2 / 6`), and `beta(n)/alpha(n) - 1 = s / (n + s)` tends to 0.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Alpha,
    Beta,
}

/// Named choices for the schedule constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepBase {
    Named(NamedBase),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedBase {
    /// `e^-6 ~ 2.4788e-3`.
    #[serde(rename = "exp(-6)")]
    ExpMinusSix,
    /// `1e-6`.
    #[serde(rename = "1e-6")]
    OneEMinusSix,
}

impl StepBase {
    pub fn value(self) -> f64 {
        match self {
            StepBase::Named(NamedBase::ExpMinusSix) => (-6.0f64).exp(),
            StepBase::Named(NamedBase::OneEMinusSix) => 1e-6,
            StepBase::Value(v) => v,
        }
    }
}

impl Default for StepBase {
    fn default() -> Self {
        StepBase::Named(NamedBase::ExpMinusSix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSizeSchedule {
    #[serde(default)]
    pub base: StepBase,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1000.0
}

impl Default for StepSizeSchedule {
    fn default() -> Self {
        Self {
            base: StepBase::default(),
            scale: default_scale(),
        }
    }
}

impl StepSizeSchedule {
    pub fn alpha(&self, n: u64) -> f64 {
        self.base.value() / (n as f64 / self.scale + 1.0)
    }

    pub fn beta(&self, n: u64) -> f64 {
        let d = n as f64 / self.scale + 1.0;
        let c = self.base.value();
        c / d + c / (d * d)
    }

    pub fn eval(&self, kind: ScheduleKind, n: u64) -> f64 {
        match kind {
            ScheduleKind::Alpha => self.alpha(n),
            ScheduleKind::Beta => self.beta(n),
        }
    }
}

/// Default schedules evaluated at step `n`.
pub fn schedule_eval(kind: ScheduleKind, n: u64) -> f64 {
    StepSizeSchedule::default().eval(kind, n)
}
