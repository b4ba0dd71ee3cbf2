//! CSV artifacts of a run.
//!
//! Every file starts with a `schema_version,<v>` row followed by the header.
//! `metrics.csv` columns (one row per seed and epoch):
//!
//! | column | unit |
//! |---|---|
//! | `seed`, `epoch` | |
//! | `mean_reward` | mean over the epoch's steps of the shared reward |
//! | `reward_<i>` | the same for agent `i`'s own reward |
//! | `aoi_max`, `aoi_mean` | slots; peer-policy ages over the epoch, empty without peers |
//! | `delta_<i>` | slots; age of agent `i`'s oldest replay sample at epoch end, empty while empty |
//! | `grad_err_critic`, `grad_err_actor` | staleness gradient error norms, empty when off |
//! | `actor_norm_<i>`, `critic_norm_<i>` | Euclidean parameter norms at epoch end |
//! | `mean_sq_td` | mean squared TD error of the epoch's updates, empty before training |
//!
//! `aoi.csv` has one row per seed and slot: `seed, slot, tau_<i>_<j>, delta_<i>`.
//! Wall-clock time lives in `timing.csv` so the other files are reproducible.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::net::AoiSnapshot;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
const SCHEMA_KEY: &str = "schema_version";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub seed: u64,
    pub epoch: usize,
    pub mean_reward: f64,
    pub agent_rewards: Vec<f64>,
    pub aoi_max: Option<u64>,
    pub aoi_mean: Option<f64>,
    pub delta: Vec<Option<u64>>,
    pub grad_err_critic: Option<f64>,
    pub grad_err_actor: Option<f64>,
    pub actor_norms: Vec<f64>,
    pub critic_norms: Vec<f64>,
    pub mean_sq_td: Option<f64>,
}

pub fn metrics_header(num_agents: usize) -> Vec<String> {
    let per = |p: &'static str| (0..num_agents).map(move |i| format!("{p}_{i}"));
    let mut h: Vec<String> = vec!["seed".into(), "epoch".into(), "mean_reward".into()];
    h.extend(per("reward"));
    h.extend(["aoi_max".into(), "aoi_mean".into()]);
    h.extend(per("delta"));
    h.extend(["grad_err_critic".into(), "grad_err_actor".into()]);
    h.extend(per("actor_norm"));
    h.extend(per("critic_norm"));
    h.push("mean_sq_td".into());
    h
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsRow {
    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.seed.to_string(),
            self.epoch.to_string(),
            self.mean_reward.to_string(),
        ];
        r.extend(self.agent_rewards.iter().map(f64::to_string));
        r.push(opt(self.aoi_max));
        r.push(opt(self.aoi_mean));
        r.extend(self.delta.iter().map(|d| opt(*d)));
        r.push(opt(self.grad_err_critic));
        r.push(opt(self.grad_err_actor));
        r.extend(self.actor_norms.iter().map(f64::to_string));
        r.extend(self.critic_norms.iter().map(f64::to_string));
        r.push(opt(self.mean_sq_td));
        r
    }
}

fn versioned_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    write!(file, "{SCHEMA_KEY},{SCHEMA_VERSION}\r\n")?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(file))
}

pub fn write_metrics(path: &Path, num_agents: usize, rows: &[MetricsRow]) -> Result<()> {
    let mut w = versioned_writer(path)?;
    w.write_record(metrics_header(num_agents))?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn aoi_header(num_agents: usize) -> Vec<String> {
    let mut h: Vec<String> = vec!["seed".into(), "slot".into()];
    for i in 0..num_agents {
        for j in (0..num_agents).filter(|&j| j != i) {
            h.push(format!("tau_{i}_{j}"));
        }
    }
    h.extend((0..num_agents).map(|i| format!("delta_{i}")));
    h
}

pub fn write_aoi<'a>(
    path: &Path,
    num_agents: usize,
    traces: impl IntoIterator<Item = (u64, &'a [AoiSnapshot])>,
) -> Result<()> {
    let mut w = versioned_writer(path)?;
    w.write_record(aoi_header(num_agents))?;
    for (seed, rows) in traces {
        for snap in rows {
            let mut r = vec![seed.to_string(), snap.slot.to_string()];
            for i in 0..num_agents {
                for j in (0..num_agents).filter(|&j| j != i) {
                    r.push(opt(snap.tau[i][j]));
                }
            }
            r.extend(snap.delta.iter().map(|d| opt(*d)));
            w.write_record(&r)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing(path: &Path, rows: &[(u64, usize, u64)]) -> Result<()> {
    let mut w = versioned_writer(path)?;
    w.write_record(["seed", "epoch", "wall_ms"])?;
    for (seed, epoch, ms) in rows {
        w.write_record([seed.to_string(), epoch.to_string(), ms.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// A versioned CSV file read back as strings.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    /// Read a file written by this module, rejecting unknown schema versions.
    pub fn read(path: &Path) -> Result<Self> {
        let schema = |msg: String| Error::Schema {
            path: path.to_path_buf(),
            msg,
        };
        let file = File::open(path)?;
        let mut reader = BufReader::new(file);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let first = first.trim_end();
        let version = first
            .strip_prefix(SCHEMA_KEY)
            .and_then(|rest| rest.strip_prefix(','))
            .ok_or_else(|| schema(format!("missing `{SCHEMA_KEY}` row, found {first:?}")))?;
        if version != SCHEMA_VERSION.to_string() {
            return Err(schema(format!(
                "unsupported schema version {version}, expected {SCHEMA_VERSION}"
            )));
        }
        let mut csv = csv::ReaderBuilder::new().from_reader(reader);
        let header = csv.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in csv.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema {
                path: self.path.clone(),
                msg: format!("missing column `{name}`"),
            })
    }

    pub fn columns_with_prefix(&self, prefix: &str) -> Vec<(String, usize)> {
        self.header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(prefix))
            .map(|(k, h)| (h.clone(), k))
            .collect()
    }

    /// Parse a cell; empty cells are `None`.
    pub fn parse<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<Option<T>> {
        let cell = self.rows[row].get(col).ok_or_else(|| Error::Schema {
            path: self.path.clone(),
            msg: format!("row {row} is too short"),
        })?;
        if cell.is_empty() {
            return Ok(None);
        }
        cell.parse().map(Some).map_err(|_| Error::Schema {
            path: self.path.clone(),
            msg: format!("cannot parse {cell:?} in column `{}`", self.header[col]),
        })
    }

    pub fn require<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T> {
        self.parse(row, col)?.ok_or_else(|| Error::Schema {
            path: self.path.clone(),
            msg: format!("empty cell in column `{}` at row {row}", self.header[col]),
        })
    }
}

/// Mean reward per (seed, epoch) from a metrics file.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSeries {
    pub seeds: Vec<u64>,
    /// `rewards[k][e]` for seed `seeds[k]`.
    pub rewards: Vec<Vec<f64>>,
}

impl RewardSeries {
    pub fn read(path: &Path) -> Result<Self> {
        let t = CsvTable::read(path)?;
        let (cs, ce, cr) = (
            t.column("seed")?,
            t.column("epoch")?,
            t.column("mean_reward")?,
        );
        let mut seeds: Vec<u64> = Vec::new();
        let mut rewards: Vec<Vec<f64>> = Vec::new();
        for k in 0..t.rows.len() {
            let seed: u64 = t.require(k, cs)?;
            let epoch: usize = t.require(k, ce)?;
            let r: f64 = t.require(k, cr)?;
            let idx = match seeds.iter().position(|&s| s == seed) {
                Some(i) => i,
                None => {
                    seeds.push(seed);
                    rewards.push(Vec::new());
                    seeds.len() - 1
                }
            };
            if epoch != rewards[idx].len() {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    msg: format!("seed {seed}: epoch {epoch} out of sequence"),
                });
            }
            rewards[idx].push(r);
        }
        Ok(Self { seeds, rewards })
    }

    pub fn epochs(&self) -> usize {
        self.rewards.iter().map(Vec::len).min().unwrap_or(0)
    }
}
