//! Experiment configuration: a preset, an optional JSON file laid over it,
//! then `dotted.key=value` overrides. Every key must already exist in the
//! preset, so a typo is an error rather than a silently ignored setting.

use interactivity_core::experiment::{ExperimentConfig, FieldError};
use serde_json::{Map, Value};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("override `{0}` is not of the form key=value")]
    BadOverride(String),
    #[error("config key `{key}`: {message}")]
    Type { key: String, message: String },
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// d = 64, T = 10, width 64, depth 2, 10000 steps.
    #[default]
    Desk,
    /// d = 1000.
    Full,
}

impl Preset {
    pub fn config(self) -> ExperimentConfig {
        match self {
            Preset::Desk => ExperimentConfig::default(),
            Preset::Full => ExperimentConfig::full_scale(),
        }
    }
}

/// Recursively writes `patch` into `base`, rejecting keys `base` lacks.
pub fn merge_strict(base: &mut Value, patch: &Value, prefix: &str) -> Result<(), ConfigError> {
    let (Value::Object(b), Value::Object(p)) = (&mut *base, patch) else {
        *base = patch.clone();
        return Ok(());
    };
    for (k, v) in p {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let slot = b.get_mut(k).ok_or_else(|| ConfigError::UnknownKey(key.clone()))?;
        if slot.is_object() && v.is_object() {
            merge_strict(slot, v, &key)?;
        } else {
            *slot = v.clone();
        }
    }
    Ok(())
}

/// Applies one `a.b.c=value` override. The value is read as JSON when it
/// parses, otherwise as a bare string, so `seed=3` and `policy.activation=relu`
/// both work.
pub fn apply_override(base: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| ConfigError::BadOverride(assignment.into()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::BadOverride(assignment.into()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = base;
    for part in key.split('.') {
        node = node
            .as_object_mut()
            .and_then(|m: &mut Map<String, Value>| m.get_mut(part))
            .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
    }
    *node = value;
    Ok(())
}

fn read_json(path: &Path) -> Result<Value, ConfigError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: name.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: name, source })
}

/// Turns a merged JSON tree back into a validated config.
pub fn finish(tree: Value) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig =
        serde_json::from_value(tree).map_err(|e| ConfigError::Type { key: "<config>".into(), message: e.to_string() })?;
    cfg.validate().map_err(ConfigError::Invalid)?;
    Ok(cfg)
}

pub fn config_tree(preset: Preset) -> Value {
    serde_json::to_value(preset.config()).expect("config serialises")
}

/// Preset, then file, then overrides, then validation. Nothing is written
/// before this succeeds.
pub fn load_config(preset: Preset, file: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut tree = config_tree(preset);
    if let Some(path) = file {
        merge_strict(&mut tree, &read_json(path)?, "")?;
    }
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    finish(tree)
}

pub fn load_json_file(path: &Path) -> Result<Value, ConfigError> {
    read_json(path)
}
