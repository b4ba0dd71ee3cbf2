use std::path::Path;

use super::metrics::CsvTable;
use super::runner::{AOI_FILE, CONFIG_FILE};
use super::{Mode, RunConfig};
use crate::env::ParticleEnv;
use crate::net::{dominance_check, CompletionTimeBound, DominanceReport, BITS_PER_VALUE};
use crate::nn::{Activation, MlpShape};
use crate::{Error, Result};

pub const DOMINANCE_CONFIDENCE: f64 = 0.99;

/// Dominance result for the ages of one peer's policy at one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCheck {
    pub column: String,
    pub holder: usize,
    pub peer: usize,
    pub report: DominanceReport,
    /// `E[tau^q]` of the pooled samples.
    pub empirical_moment: f64,
    /// `E[bound^q]`, `None` for centralized runs where the bound is zero.
    pub bound_moment: Option<f64>,
}

/// Candidate dominating tail for policies sent by `agent` in this run.
pub fn run_bound(config: &RunConfig, agent: usize) -> Result<Option<CompletionTimeBound>> {
    let Some(net) = &config.network else {
        return Ok(None);
    };
    let env = ParticleEnv::new(config.env.clone())?;
    let sizing = net.sizing();
    let actor = MlpShape::from_widths(
        env.obs_dim(),
        &config.hyper.actor_hidden,
        Activation::Gelu,
        env.action_dim(),
        Activation::Tanh,
    )?;
    let policy_bits = sizing
        .policy_bits
        .unwrap_or(BITS_PER_VALUE * actor.param_count() as u64);
    let tuple_bits = sizing
        .tuple_bits
        .unwrap_or(BITS_PER_VALUE * (2 * env.obs_dim() + env.action_dim()) as u64);
    CompletionTimeBound::for_cycle(
        net.budget_bits,
        policy_bits,
        tuple_bits,
        net.tuples_per_cycle as u64,
        net.lambda.for_agent(agent),
    )
    .map(Some)
}

/// Check every `tau_i_j` column of a run's AoI file against the cycle bound.
pub fn check_aoi(dir: &Path, q: f64) -> Result<Vec<PairCheck>> {
    let config = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let table = CsvTable::read(&dir.join(AOI_FILE))?;
    let mut out = Vec::new();
    for (column, col) in table.columns_with_prefix("tau_") {
        let ids: Vec<usize> = column
            .trim_start_matches("tau_")
            .split('_')
            .map(|s| s.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Schema {
                path: table.path.clone(),
                msg: format!("bad AoI column name `{column}`"),
            })?;
        let [holder, peer] = ids[..] else {
            return Err(Error::Schema {
                path: table.path.clone(),
                msg: format!("bad AoI column name `{column}`"),
            });
        };
        let mut samples = Vec::with_capacity(table.rows.len());
        for k in 0..table.rows.len() {
            if let Some(v) = table.parse::<u64>(k, col)? {
                samples.push(v);
            }
        }
        let bound = match config.mode {
            Mode::Centralized => None,
            Mode::Networked => run_bound(&config, peer)?,
        };
        let report = match bound {
            Some(b) => dominance_check(&samples, |m| b.tail(m), DOMINANCE_CONFIDENCE)?,
            None => dominance_check(&samples, |_| 0.0, DOMINANCE_CONFIDENCE)?,
        };
        let empirical_moment =
            samples.iter().map(|&t| (t as f64).powf(q)).sum::<f64>() / samples.len() as f64;
        out.push(PairCheck {
            column,
            holder,
            peer,
            report,
            empirical_moment,
            bound_moment: bound.map(|b| b.moment(q)),
        });
    }
    Ok(out)
}
