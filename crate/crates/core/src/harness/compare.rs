use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::metrics::RewardSeries;
use super::runner::{CONFIG_FILE, METRICS_FILE};
use super::RunConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStat {
    pub epoch: usize,
    pub mean_a: f64,
    pub sd_a: f64,
    pub mean_b: f64,
    pub sd_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFinal {
    pub seed: u64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub epochs: usize,
    pub per_epoch: Vec<EpochStat>,
    /// Number of trailing epochs averaged for the final-window statistics.
    pub final_window: usize,
    pub final_mean_a: f64,
    pub final_mean_b: f64,
    /// Seeds present in both runs.
    pub paired: Vec<SeedFinal>,
    /// Share of paired seeds where A beats B, ties counting one half.
    pub win_fraction: Option<f64>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Number of trailing epochs in a final window covering `fraction` of a run.
pub fn final_window_len(epochs: usize, fraction: f64) -> usize {
    ((epochs as f64 * fraction).ceil() as usize).clamp(1, epochs.max(1))
}

/// Mean reward over the last `window` epochs.
pub fn final_window_mean(rewards: &[f64], window: usize) -> f64 {
    let tail = &rewards[rewards.len().saturating_sub(window)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut BTreeMap<String, String>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                flatten(&format!("{prefix}{k}."), v, out);
            }
        }
        other => {
            out.insert(prefix.trim_end_matches('.').to_string(), other.to_string());
        }
    }
}

/// Lines describing how the parts of two configs that must agree differ.
pub fn comparability_diff(a: &RunConfig, b: &RunConfig) -> Result<Vec<String>> {
    let mut fa = BTreeMap::new();
    let mut fb = BTreeMap::new();
    flatten(
        "env.",
        &toml::Value::try_from(&a.env).map_err(toml_err)?,
        &mut fa,
    );
    flatten(
        "env.",
        &toml::Value::try_from(&b.env).map_err(toml_err)?,
        &mut fb,
    );
    fa.insert("epochs".into(), a.epochs.to_string());
    fb.insert("epochs".into(), b.epochs.to_string());
    let keys: std::collections::BTreeSet<&String> = fa.keys().chain(fb.keys()).collect();
    let missing = "<unset>".to_string();
    Ok(keys
        .into_iter()
        .filter_map(|k| {
            let (va, vb) = (fa.get(k).unwrap_or(&missing), fb.get(k).unwrap_or(&missing));
            (va != vb).then(|| format!("{k}: {va} != {vb}"))
        })
        .collect())
}

fn toml_err(e: toml::ser::Error) -> Error {
    Error::Config(e.to_string())
}

/// Align two run directories epoch by epoch.
pub fn compare(dir_a: &Path, dir_b: &Path, final_fraction: f64) -> Result<CompareReport> {
    let ca = RunConfig::load(&dir_a.join(CONFIG_FILE))?;
    let cb = RunConfig::load(&dir_b.join(CONFIG_FILE))?;
    let diff = comparability_diff(&ca, &cb)?;
    if !diff.is_empty() {
        return Err(Error::Incomparable(diff.join("\n")));
    }
    let a = RewardSeries::read(&dir_a.join(METRICS_FILE))?;
    let b = RewardSeries::read(&dir_b.join(METRICS_FILE))?;
    compare_series(&a, &b, final_fraction)
}

pub fn compare_series(
    a: &RewardSeries,
    b: &RewardSeries,
    final_fraction: f64,
) -> Result<CompareReport> {
    let epochs = a.epochs().min(b.epochs());
    if epochs == 0 {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    let column = |s: &RewardSeries, e: usize| s.rewards.iter().map(|r| r[e]).collect::<Vec<_>>();
    let per_epoch = (0..epochs)
        .map(|e| {
            let (mean_a, sd_a) = mean_sd(&column(a, e));
            let (mean_b, sd_b) = mean_sd(&column(b, e));
            EpochStat {
                epoch: e,
                mean_a,
                sd_a,
                mean_b,
                sd_b,
            }
        })
        .collect();
    let window = final_window_len(epochs, final_fraction);
    let finals = |s: &RewardSeries| {
        s.rewards
            .iter()
            .map(|r| final_window_mean(&r[..epochs], window))
            .collect::<Vec<_>>()
    };
    let (fa, fb) = (finals(a), finals(b));
    let paired: Vec<SeedFinal> = a
        .seeds
        .iter()
        .enumerate()
        .filter_map(|(ka, seed)| {
            let kb = b.seeds.iter().position(|s| s == seed)?;
            Some(SeedFinal {
                seed: *seed,
                a: fa[ka],
                b: fb[kb],
            })
        })
        .collect();
    let win_fraction = (!paired.is_empty()).then(|| {
        paired
            .iter()
            .map(|p| match p.a.partial_cmp(&p.b) {
                Some(std::cmp::Ordering::Greater) => 1.0,
                Some(std::cmp::Ordering::Equal) => 0.5,
                _ => 0.0,
            })
            .sum::<f64>()
            / paired.len() as f64
    });
    Ok(CompareReport {
        epochs,
        per_epoch,
        final_window: window,
        final_mean_a: mean_sd(&fa).0,
        final_mean_b: mean_sd(&fb).0,
        paired,
        win_fraction,
    })
}

impl CompareReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "epoch,mean_a,sd_a,mean_b,sd_b,diff");
        for e in &self.per_epoch {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                e.epoch,
                e.mean_a,
                e.sd_a,
                e.mean_b,
                e.sd_b,
                e.mean_a - e.mean_b
            );
        }
        let _ = writeln!(s, "\nfinal window: last {} epochs", self.final_window);
        let _ = writeln!(
            s,
            "final mean A {:.6}  B {:.6}  diff {:.6}",
            self.final_mean_a,
            self.final_mean_b,
            self.final_mean_a - self.final_mean_b
        );
        for p in &self.paired {
            let _ = writeln!(s, "seed {}: A {:.6}  B {:.6}", p.seed, p.a, p.b);
        }
        match self.win_fraction {
            Some(w) => {
                let _ = writeln!(s, "A wins in {:.1}% of paired seeds", 100.0 * w);
            }
            None => {
                let _ = writeln!(s, "no seeds in common");
            }
        }
        s
    }
}
