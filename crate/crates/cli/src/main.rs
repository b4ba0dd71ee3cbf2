use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use dpg_core::harness::{self, gradcheck, RunConfig};

#[derive(Parser)]
#[command(
    name = "dpg",
    version,
    about = "3DPG / MADDPG training over a simulated lossy network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a TOML run config.
    Run {
        config: PathBuf,
        /// Output directory; defaults to runs/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Override the seed list, e.g. --seeds 0,1,2.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Per-epoch and final-window statistics of two runs.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Fraction of trailing epochs in the final window.
        #[arg(long, default_value_t = 0.1)]
        final_fraction: f64,
    },
    /// Reward curves and AoI traces as SVG.
    Plot {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
        /// First slot of the AoI snapshot.
        #[arg(long, default_value_t = 0)]
        aoi_start: u64,
        /// Number of slots in the AoI snapshot.
        #[arg(long, default_value_t = 400)]
        aoi_len: u64,
    },
    /// Test the recorded AoI against the channel's dominating tail.
    CheckAoi {
        dir: PathBuf,
        /// Moment order reported for the samples and the bound.
        #[arg(long, default_value_t = 1.0)]
        q: f64,
    },
    /// Finite-difference check of the critic and actor gradients.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Run {
            config,
            out,
            epochs,
            seeds,
        } => {
            let mut cfg = RunConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            let dir = out.unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
            let report = harness::run(&cfg, &dir)?;
            let window = harness::final_window_len(cfg.epochs, 0.1);
            for o in &report.outcomes {
                let rewards: Vec<f64> = o.rows.iter().map(|r| r.mean_reward).collect();
                if !rewards.is_empty() {
                    println!(
                        "seed {}: final-window mean reward {:.4}",
                        o.seed,
                        harness::final_window_mean(&rewards, window)
                    );
                }
            }
            println!("wrote {}", dir.display());
            Ok(true)
        }
        Command::Compare {
            dir_a,
            dir_b,
            final_fraction,
        } => {
            let report = harness::compare(&dir_a, &dir_b, final_fraction)?;
            print!("{}", report.render());
            Ok(true)
        }
        Command::Plot {
            dirs,
            out,
            aoi_start,
            aoi_len,
        } => {
            for p in harness::plot(&dirs, &out, aoi_start, aoi_len)? {
                println!("wrote {}", p.display());
            }
            Ok(true)
        }
        Command::CheckAoi { dir, q } => {
            if q <= 0.0 {
                bail!("--q must be positive");
            }
            let checks = harness::check_aoi(&dir, q)?;
            let mut ok = true;
            for c in &checks {
                let r = &c.report;
                println!(
                    "{}: {} (worst margin {:.4} at {}, DKW eps {:.4}, {} samples), E[tau^{q}] = {:.3}, bound {}",
                    c.column,
                    if r.dominated { "dominated" } else { "NOT dominated" },
                    r.worst_margin,
                    r.worst_at,
                    r.epsilon,
                    r.samples,
                    c.empirical_moment,
                    c.bound_moment.map_or("0".to_string(), |m| format!("{m:.3}")),
                );
                ok &= r.dominated;
            }
            Ok(ok)
        }
        Command::Gradcheck {
            cases,
            seed,
            tolerance,
        } => {
            let r = gradcheck::gradcheck(cases, seed)?;
            println!(
                "{} cases (largest net {} params): max relative error critic {:.2e}, actor 3DPG {:.2e}, actor MADDPG {:.2e}",
                r.cases, r.max_params, r.critic, r.actor_3dpg, r.actor_maddpg
            );
            let ok = r.worst() <= tolerance;
            println!("{}", if ok { "PASS" } else { "FAIL" });
            Ok(ok)
        }
    }
}
