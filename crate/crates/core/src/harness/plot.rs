//! SVG figures rendered from the CSV artifacts only.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::compare::mean_sd;
use super::metrics::{CsvTable, RewardSeries};
use super::runner::{AOI_FILE, METRICS_FILE};
use crate::{Error, Result};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

/// Per-epoch mean and across-seed standard deviation of `mean_reward`.
pub fn reward_band(series: &RewardSeries) -> Vec<(f64, f64)> {
    (0..series.epochs())
        .map(|e| {
            let xs: Vec<f64> = series.rewards.iter().map(|r| r[e]).collect();
            mean_sd(&xs)
        })
        .collect()
}

fn run_label(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

/// Reward curves of several runs with mean +- sd bands across seeds.
pub fn plot_rewards(dirs: &[PathBuf], out: &Path) -> Result<()> {
    let mut runs = Vec::new();
    for dir in dirs {
        let s = RewardSeries::read(&dir.join(METRICS_FILE))?;
        runs.push((run_label(dir), reward_band(&s)));
    }
    let epochs = runs.iter().map(|(_, b)| b.len()).max().unwrap_or(0).max(1);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (m, sd) in runs.iter().flat_map(|(_, b)| b.iter()) {
        lo = lo.min(m - sd);
        hi = hi.max(m + sd);
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);

    let root = SVGBackend::new(out, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("average reward per epoch", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..epochs as f64, (lo - pad)..(hi + pad))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("epoch")
        .y_desc("mean reward")
        .draw()
        .map_err(plot_err)?;
    for (k, (label, band)) in runs.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut outline: Vec<(f64, f64)> = band
            .iter()
            .enumerate()
            .map(|(e, (m, sd))| (e as f64, m + sd))
            .collect();
        outline.extend(
            band.iter()
                .enumerate()
                .rev()
                .map(|(e, (m, sd))| (e as f64, m - sd)),
        );
        chart
            .draw_series(std::iter::once(Polygon::new(
                outline,
                color.mix(0.2).filled(),
            )))
            .map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new(
                band.iter().enumerate().map(|(e, (m, _))| (e as f64, *m)),
                color.stroke_width(2),
            ))
            .map_err(plot_err)?
            .label(label.as_str())
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// AoI traces `tau_i_j` of one seed over `[start, start + len)` slots.
pub fn plot_aoi(dir: &Path, out: &Path, seed: Option<u64>, start: u64, len: u64) -> Result<()> {
    let t = CsvTable::read(&dir.join(AOI_FILE))?;
    let (cs, cslot) = (t.column("seed")?, t.column("slot")?);
    let taus = t.columns_with_prefix("tau_");
    let seed = match seed {
        Some(s) => s,
        None if t.rows.is_empty() => 0,
        None => t.require(0, cs)?,
    };
    let mut traces: Vec<Vec<(f64, f64)>> = vec![Vec::new(); taus.len()];
    for k in 0..t.rows.len() {
        if t.require::<u64>(k, cs)? != seed {
            continue;
        }
        let slot: u64 = t.require(k, cslot)?;
        if slot < start || slot >= start + len {
            continue;
        }
        for (trace, (_, col)) in traces.iter_mut().zip(&taus) {
            if let Some(v) = t.parse::<u64>(k, *col)? {
                trace.push((slot as f64, v as f64));
            }
        }
    }
    let ymax = traces.iter().flatten().map(|p| p.1).fold(1.0f64, f64::max);

    let root = SVGBackend::new(out, (900, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("experienced AoI, seed {seed}"), ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(start as f64..(start + len) as f64, 0f64..ymax * 1.05)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("slot")
        .y_desc("age (slots)")
        .draw()
        .map_err(plot_err)?;
    for (k, (trace, (name, _))) in traces.into_iter().zip(&taus).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(trace, color.stroke_width(1)))
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// `reward_curves.svg` for all runs and `aoi_<run>.svg` for each run that
/// has an AoI file; returns the written paths.
pub fn plot(
    dirs: &[PathBuf],
    out_dir: &Path,
    aoi_start: u64,
    aoi_len: u64,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let rewards = out_dir.join("reward_curves.svg");
    plot_rewards(dirs, &rewards)?;
    written.push(rewards);
    for dir in dirs {
        if dir.join(AOI_FILE).exists() {
            let path = out_dir.join(format!("aoi_{}.svg", run_label(dir)));
            plot_aoi(dir, &path, None, aoi_start, aoi_len)?;
            written.push(path);
        }
    }
    Ok(written)
}
