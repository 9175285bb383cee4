//! Library side of the `interact` command: configuration loading, run and
//! sweep drivers, SVG plotting and the verifier reports.

pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod runner;
pub mod sweep;
pub mod verify;

pub use error::{CliError, ExitKind};

/// Environment variable that overrides the default output root.
pub const OUTPUT_ROOT_ENV: &str = "INTERACT_OUT";

/// `--out` if given, else `$INTERACT_OUT`, else `./runs`.
pub fn output_root(flag: Option<&std::path::Path>) -> std::path::PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUTPUT_ROOT_ENV).map(Into::into).unwrap_or_else(|| "runs".into()),
    }
}
