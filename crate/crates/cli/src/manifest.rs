//! Run manifests: enough metadata to trace any artifact back to the exact
//! configuration and seed that produced it.

use interactivity_core::experiment::ExperimentConfig;
use serde::Serialize;
use std::path::Path;
use std::process::Command;

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub steps_completed: u64,
    pub records: usize,
    pub wall_seconds: f64,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged,
}

/// `v<crate version>`, extended with `git describe` output when the binary
/// runs inside a git checkout.
pub fn version() -> String {
    let base = concat!("v", env!("CARGO_PKG_VERSION"));
    let described = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    match described {
        Some(d) => format!("{base}-{d}"),
        None => base.to_string(),
    }
}

impl Manifest {
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(path, text + "\n")
    }
}
