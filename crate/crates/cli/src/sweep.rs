//! Cartesian sweeps over width, depth, activation and seed.
//!
//! Cells run on a bounded worker pool and are fully independent; each gets
//! its own directory with the usual run artifacts. The summary tables are
//! written afterwards, in cell order, on the calling thread, so their bytes
//! do not depend on the number of workers.

use crate::error::{CliError, CliResult};
use crate::runner::{final_window_mean, run_to_dir};
use interactivity_core::experiment::ExperimentConfig;
use interactivity_core::models::Activation;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const MEANS_FILE: &str = "means.csv";

fn default_window() -> f64 {
    0.2
}

/// On-disk sweep description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Config keys laid over the preset before the grid is expanded.
    #[serde(default)]
    pub base: serde_json::Value,
    pub widths: Vec<usize>,
    pub depths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub seeds: Vec<u64>,
    /// Fraction of the records, from the end, averaged into the summary.
    #[serde(default = "default_window")]
    pub final_window: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        for (name, empty) in [
            ("widths", self.widths.is_empty()),
            ("depths", self.depths.is_empty()),
            ("activations", self.activations.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(format!("`{name}` must list at least one value"));
            }
        }
        if !(self.final_window > 0.0 && self.final_window <= 1.0) {
            return Err(format!("`final_window` must lie in (0, 1], got {}", self.final_window));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        let mut cells = Vec::new();
        for &width in &self.widths {
            for &depth in &self.depths {
                for &activation in &self.activations {
                    for &seed in &self.seeds {
                        cells.push(SweepCell { width, depth, activation, seed });
                    }
                }
            }
        }
        cells
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SweepCell {
    pub width: usize,
    pub depth: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl SweepCell {
    pub fn name(&self) -> String {
        format!("w{}_d{}_{}_s{}", self.width, self.depth, self.activation, self.seed)
    }

    pub fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base.clone();
        cfg.policy.width = self.width;
        cfg.policy.depth = self.depth;
        cfg.policy.activation = self.activation;
        cfg.seed = self.seed;
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CellStatus {
    Ok,
    Diverged(String),
    Failed(String),
}

impl CellStatus {
    fn label(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Diverged(_) => "diverged",
            CellStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellResult {
    pub cell: SweepCell,
    pub dir: PathBuf,
    pub status: CellStatus,
    pub final_window: Option<f64>,
    pub steps_completed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub results: Vec<CellResult>,
    pub summary: String,
    pub means: String,
}

impl SweepReport {
    /// Mean of the final-window values of every successful seed of a
    /// `(width, depth, activation)` group.
    pub fn group_mean(&self, width: usize, depth: usize, activation: Activation) -> Option<f64> {
        let vals: Vec<f64> = self
            .results
            .iter()
            .filter(|r| r.cell.width == width && r.cell.depth == depth && r.cell.activation == activation)
            .filter_map(|r| r.final_window)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn cell_value(&self, width: usize, depth: usize, activation: Activation, seed: u64) -> Option<f64> {
        self.results.iter().find(|r| r.cell == SweepCell { width, depth, activation, seed }).and_then(|r| r.final_window)
    }
}

fn run_cell(base: &ExperimentConfig, cell: SweepCell, root: &Path, window: f64) -> CellResult {
    let dir = root.join("cells").join(cell.name());
    let cfg = cell.apply(base);
    match run_to_dir(&cfg, &dir, &format!("sweep cell {}", cell.name())) {
        Ok(art) => CellResult {
            cell,
            dir,
            status: match &art.outcome.error {
                None => CellStatus::Ok,
                Some(e) => CellStatus::Diverged(e.to_string()),
            },
            final_window: if art.outcome.error.is_none() { final_window_mean(&art.outcome, window) } else { None },
            steps_completed: art.outcome.final_state.step,
        },
        Err(e) => CellResult { cell, dir, status: CellStatus::Failed(e.to_string()), final_window: None, steps_completed: 0 },
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Runs every cell with at most `workers` threads and writes the summaries.
pub fn run_sweep(base: &ExperimentConfig, spec: &SweepSpec, root: &Path, workers: usize) -> CliResult<SweepReport> {
    spec.validate().map_err(|e| CliError::usage(anyhow::anyhow!(e)))?;
    if workers == 0 {
        return Err(CliError::usage(anyhow::anyhow!("--workers must be at least 1")));
    }
    for cell in spec.cells() {
        cell.apply(base).validate().map_err(|e| {
            CliError::usage(anyhow::anyhow!("cell {}: {}", cell.name(), e.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))
        })?;
    }
    std::fs::create_dir_all(root)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::usage(anyhow::anyhow!(e)))?;
    let cells = spec.cells();
    let results: Vec<CellResult> = pool.install(|| cells.par_iter().map(|&c| run_cell(base, c, root, spec.final_window)).collect());

    let mut summary = String::from("width,depth,activation,seed,status,final_window_mean,steps_completed\n");
    for r in &results {
        let c = r.cell;
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            c.width,
            c.depth,
            c.activation,
            c.seed,
            r.status.label(),
            fmt_opt(r.final_window),
            r.steps_completed
        );
    }
    let mut means = String::from("width,depth,activation,seeds_ok,mean_final_window\n");
    let mut report = SweepReport { results, summary: String::new(), means: String::new() };
    for &width in &spec.widths {
        for &depth in &spec.depths {
            for &activation in &spec.activations {
                let ok = report
                    .results
                    .iter()
                    .filter(|r| {
                        r.cell.width == width && r.cell.depth == depth && r.cell.activation == activation && r.final_window.is_some()
                    })
                    .count();
                let _ = writeln!(means, "{width},{depth},{activation},{ok},{}", fmt_opt(report.group_mean(width, depth, activation)));
            }
        }
    }
    std::fs::write(root.join(SUMMARY_FILE), &summary)?;
    std::fs::write(root.join(MEANS_FILE), &means)?;
    report.summary = summary;
    report.means = means;
    Ok(report)
}
