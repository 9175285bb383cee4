//! Versioned JSON snapshots of a run.

use crate::experiment::{ExperimentConfig, RunState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint format version {found}, this build reads version {CHECKPOINT_VERSION}")]
    Version { found: u32 },
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint state does not match its config: {0}")]
    Mismatch(String),
}

/// Everything needed to continue a run bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ExperimentConfig,
    pub state: RunState,
}

impl Checkpoint {
    pub fn new(config: ExperimentConfig, state: RunState) -> Self {
        Self { version: CHECKPOINT_VERSION, config, state }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint is always serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version { found: header.version });
        }
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.state.behaviour.dim() != ckpt.config.dim || ckpt.state.policy.spec != ckpt.config.policy_spec() {
            return Err(CheckpointError::Mismatch("dimension or policy architecture differs".into()));
        }
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{init_run, run_step};

    fn config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig { dim: 6, horizon: 3, steps: 10, ..ExperimentConfig::default() };
        cfg.policy.width = 5;
        cfg
    }

    #[test]
    fn round_trip_is_exact_and_resumes_identically() {
        let cfg = config();
        let mut state = init_run(&cfg).unwrap();
        for _ in 0..4 {
            run_step(&mut state, &cfg).unwrap();
        }
        let restored = Checkpoint::from_json(&Checkpoint::new(cfg.clone(), state.clone()).to_json()).unwrap();
        assert_eq!(restored.state, state);
        let mut resumed = restored.state;
        for _ in 0..3 {
            assert_eq!(run_step(&mut state, &cfg).unwrap(), run_step(&mut resumed, &cfg).unwrap());
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let cfg = config();
        let mut ckpt = Checkpoint::new(cfg.clone(), init_run(&cfg).unwrap());
        ckpt.version = 99;
        assert!(matches!(Checkpoint::from_json(&ckpt.to_json()), Err(CheckpointError::Version { found: 99 })));
    }

    #[test]
    fn mismatched_config_is_rejected() {
        let cfg = config();
        let mut ckpt = Checkpoint::new(cfg.clone(), init_run(&cfg).unwrap());
        ckpt.config.dim = 7;
        assert!(matches!(Checkpoint::from_json(&ckpt.to_json()), Err(CheckpointError::Mismatch(_))));
    }
}
