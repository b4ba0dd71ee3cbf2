//! Experiment orchestration: configs, the seeded training loop, CSV
//! artifacts, run comparison, plots and the gradient oracle suite.

mod aoi_check;
mod compare;
mod config;
pub mod gradcheck;
pub mod metrics;
mod plot;
mod runner;

pub use aoi_check::{check_aoi, run_bound, PairCheck, DOMINANCE_CONFIDENCE};
pub use compare::{
    comparability_diff, compare, compare_series, final_window_len, final_window_mean, mean_sd,
    CompareReport, EpochStat, SeedFinal,
};
pub use config::{Diagnostics, HyperConfig, Mode, RunConfig};
pub use plot::{plot, plot_aoi, plot_rewards, reward_band};
pub use runner::{
    run, run_seed, seed_stream, RunReport, SeedOutcome, SeedStreams, AOI_FILE, CONFIG_FILE,
    METRICS_FILE, PARAMS_FILE, TIMING_FILE,
};
