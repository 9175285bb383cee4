//! Single runs: metrics CSV, final checkpoint and manifest.

use crate::error::{CliError, CliResult};
use crate::manifest::{version, Manifest, RunStatus};
use anyhow::Context;
use interactivity_core::checkpoint::Checkpoint;
use interactivity_core::experiment::{run_experiment_with, ExperimentConfig, RunError, RunOutcome, CSV_HEADER};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// What a finished run left on disk.
#[derive(Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub outcome: RunOutcome,
    pub manifest: Manifest,
}

/// Streams metrics to `dir/metrics.csv` while running, then writes the
/// checkpoint and manifest. A divergence still leaves every artifact behind;
/// the caller decides what exit status it maps to.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, command: &str) -> CliResult<RunArtifacts> {
    cfg.validate().map_err(|e| CliError::usage(RunError::InvalidConfig(e)))?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let metrics_path = dir.join(METRICS_FILE);
    let mut out = BufWriter::new(File::create(&metrics_path).with_context(|| format!("creating {}", metrics_path.display()))?);
    writeln!(out, "{CSV_HEADER}")?;

    let started = Instant::now();
    let mut io_error = None;
    let outcome = run_experiment_with(cfg, |r| {
        if io_error.is_none() {
            if let Err(e) = writeln!(out, "{}", r.csv_row()) {
                io_error = Some(e);
            }
        }
    })
    .map_err(CliError::usage)?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    out.flush()?;
    drop(out);

    let checkpoint = Checkpoint::new(cfg.clone(), outcome.final_state.clone());
    std::fs::write(dir.join(CHECKPOINT_FILE), checkpoint.to_json())?;

    let manifest = Manifest {
        tool: "interact",
        version: version(),
        command: command.to_string(),
        config: cfg.clone(),
        seed: cfg.seed,
        status: if outcome.error.is_some() { RunStatus::Diverged } else { RunStatus::Ok },
        error: outcome.error.as_ref().map(ToString::to_string),
        steps_completed: outcome.final_state.step,
        records: outcome.records.len(),
        wall_seconds: started.elapsed().as_secs_f64(),
        artifacts: vec![METRICS_FILE.into(), CHECKPOINT_FILE.into(), MANIFEST_FILE.into()],
    };
    manifest.write(&dir.join(MANIFEST_FILE))?;
    Ok(RunArtifacts { dir: dir.to_path_buf(), outcome, manifest })
}

/// Mean smoothed interactivity over the last `fraction` of the records.
pub fn final_window_mean(outcome: &RunOutcome, fraction: f64) -> Option<f64> {
    let n = outcome.records.len();
    if n == 0 {
        return None;
    }
    let start = n - ((n as f64 * fraction).ceil() as usize).clamp(1, n);
    let tail = &outcome.records[start..];
    Some(tail.iter().map(|r| r.smoothed_interactivity).sum::<f64>() / tail.len() as f64)
}
