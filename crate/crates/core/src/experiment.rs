//! The online self-prediction loop.
//!
//! Every timestep `t`:
//! 1. imagine `T` actions with the current policy from `b_t`;
//! 2. measure static TD errors under a frozen copy of the value weights;
//! 3. measure dynamic TD errors under a copy updated along the rollout;
//! 4. take one optimiser step on the policy, ascending `J(θ)`;
//! 5. act with the *updated* policy, `b_{t+1} = π(b_t; θ_{t+1})`;
//! 6. take one committed TD(0) step on the real transition `b_t → b_{t+1}`.
//!
//! Metrics are computed from the rollout of step 1, before any update.

use crate::interactivity::{policy_objective, policy_step, InteractivityError, RolloutConfig};
use crate::models::{Activation, Behaviour, ModelError, OptimizerConfig, OptimizerState, PolicyParams, PolicySpec, ValueParams};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

/// Number of leading behaviour coordinates logged per record.
pub const LOGGED_COMPONENTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyArch {
    pub width: usize,
    pub depth: usize,
    pub activation: Activation,
    #[serde(default = "yes")]
    pub bias: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Behaviour dimension `d`.
    pub dim: usize,
    /// Rollout horizon `T`.
    pub horizon: usize,
    pub steps: u64,
    pub gamma: f64,
    /// Step size of the inner, differentiable value updates.
    pub eta_inner: f64,
    pub policy: PolicyArch,
    pub policy_optimizer: OptimizerConfig,
    pub value_optimizer: OptimizerConfig,
    pub seed: u64,
    /// Policy updates stop from this timestep on.
    #[serde(default)]
    pub freeze_policy_at: Option<u64>,
    /// Value updates, committed and inner, stop from this timestep on.
    #[serde(default)]
    pub freeze_value_at: Option<u64>,
    pub log_every: u64,
    /// Half-life, in steps, of the exponential moving average of interactivity.
    pub smoothing_half_life: f64,
    #[serde(default)]
    pub detach_bootstrap: bool,
    /// Fill the `wall_ms` column with measured time. Off by default so that
    /// metrics streams are byte-reproducible.
    #[serde(default)]
    pub record_wall_clock: bool,
}

impl Default for ExperimentConfig {
    /// Desk-scale defaults.
    fn default() -> Self {
        Self {
            dim: 64,
            horizon: 10,
            steps: 10_000,
            gamma: 0.9,
            eta_inner: 0.01,
            policy: PolicyArch { width: 64, depth: 2, activation: Activation::Linear, bias: true },
            policy_optimizer: OptimizerConfig::rmsprop(1e-3),
            value_optimizer: OptimizerConfig::rmsprop(1e-3),
            seed: 0,
            freeze_policy_at: None,
            freeze_value_at: None,
            log_every: 1,
            smoothing_half_life: 200.0,
            detach_bootstrap: false,
            record_wall_clock: false,
        }
    }
}

/// One rejected configuration field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ExperimentConfig {
    /// Full-size behaviour dimension.
    pub fn full_scale() -> Self {
        // The inner chain contracts only while η‖b‖² = η·d stays below 2.
        Self { dim: 1000, eta_inner: 5e-4, ..Self::default() }
    }

    pub fn policy_spec(&self) -> PolicySpec {
        PolicySpec {
            dim: self.dim,
            width: self.policy.width,
            depth: self.policy.depth,
            activation: self.policy.activation,
            bias: self.policy.bias,
        }
    }

    pub fn rollout_config(&self, learning: bool) -> RolloutConfig {
        RolloutConfig {
            horizon: self.horizon,
            gamma: self.gamma,
            eta: if learning { self.eta_inner } else { 0.0 },
            detach_bootstrap: self.detach_bootstrap,
        }
    }

    /// Every violated constraint, not just the first.
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errs = Vec::new();
        let mut bad = |field: &str, message: String| errs.push(FieldError { field: field.into(), message });
        if self.dim == 0 {
            bad("dim", "must be positive".into());
        }
        if self.horizon == 0 {
            bad("horizon", "must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            bad("gamma", format!("must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.eta_inner >= 0.0 && self.eta_inner.is_finite()) {
            bad("eta_inner", format!("must be finite and >= 0, got {}", self.eta_inner));
        }
        if self.policy.depth == 0 {
            bad("policy.depth", "must be positive".into());
        }
        if self.policy.depth > 1 && self.policy.width == 0 {
            bad("policy.width", "must be positive".into());
        }
        for (name, opt) in [("policy_optimizer", &self.policy_optimizer), ("value_optimizer", &self.value_optimizer)] {
            if let Err(ModelError::InvalidConfig { reason, .. }) = opt.validate("optimizer") {
                bad(name, reason);
            }
        }
        if self.log_every == 0 {
            bad("log_every", "must be positive".into());
        }
        if !(self.smoothing_half_life > 0.0 && self.smoothing_half_life.is_finite()) {
            bad("smoothing_half_life", format!("must be > 0, got {}", self.smoothing_half_life));
        }
        for (name, at) in [("freeze_policy_at", self.freeze_policy_at), ("freeze_value_at", self.freeze_value_at)] {
            if let Some(at) = at {
                if at > self.steps {
                    bad(name, format!("{at} exceeds steps = {}", self.steps));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("invalid config: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidConfig(Vec<FieldError>),
    #[error("diverged at step {step}: {reason}")]
    Diverged { step: u64, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: u64,
    pub interactivity: f64,
    pub static_complexity: f64,
    pub dynamic_complexity: f64,
    pub smoothed_interactivity: f64,
    /// `‖δ_t‖` of the committed value update on the real transition.
    pub delta_norm: f64,
    /// First coordinates of the action taken, `b_{t+1}`.
    pub components: [f64; LOGGED_COMPONENTS],
    pub behaviour_norm: f64,
    pub wall_ms: f64,
}

pub const CSV_HEADER: &str = "step,interactivity,static,dynamic,smoothed,delta_norm,b0,b1,b2,b3,b4,b5,b6,b7,bnorm,wall_ms";

impl MetricsRecord {
    /// One CSV line without the trailing newline. Floats use the shortest
    /// representation that round-trips.
    pub fn csv_row(&self) -> String {
        let mut fields = vec![
            self.step.to_string(),
            self.interactivity.to_string(),
            self.static_complexity.to_string(),
            self.dynamic_complexity.to_string(),
            self.smoothed_interactivity.to_string(),
            self.delta_norm.to_string(),
        ];
        fields.extend(self.components.iter().map(f64::to_string));
        fields.push(self.behaviour_norm.to_string());
        fields.push(self.wall_ms.to_string());
        fields.join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    /// Current behaviour `b_t`.
    pub behaviour: Behaviour,
    pub policy: PolicyParams,
    pub policy_optimizer: OptimizerState,
    pub value: ValueParams,
    /// Number of completed timesteps.
    pub step: u64,
    pub seed: u64,
    pub smoothed_interactivity: Option<f64>,
    pub policy_updates: u64,
    pub value_updates: u64,
}

impl RunState {
    pub fn is_finite(&self) -> bool {
        self.behaviour.is_finite() && self.policy.is_finite() && self.value.w.is_finite()
    }
}

/// Seeds the run: policy and value weights, then `b_0 ~ N(0, 1/d)`, all from
/// one ChaCha stream.
pub fn init_run(cfg: &ExperimentConfig) -> Result<RunState, RunError> {
    cfg.validate().map_err(RunError::InvalidConfig)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let policy = PolicyParams::init(cfg.policy_spec(), &mut rng)
        .map_err(|e| RunError::InvalidConfig(vec![FieldError { field: "policy".into(), message: e.to_string() }]))?;
    let value = ValueParams::init(cfg.dim, &cfg.value_optimizer, &mut rng);
    let normal = Normal::new(0.0, 1.0 / (cfg.dim as f64).sqrt()).expect("valid std");
    let behaviour = Behaviour::new((0..cfg.dim).map(|_| normal.sample(&mut rng)).collect());
    let policy_optimizer = OptimizerState::new(cfg.policy_optimizer.kind, policy.tensors());
    Ok(RunState {
        behaviour,
        policy,
        policy_optimizer,
        value,
        step: 0,
        seed: cfg.seed,
        smoothed_interactivity: None,
        policy_updates: 0,
        value_updates: 0,
    })
}

fn diverged(step: u64, reason: impl std::fmt::Display) -> RunError {
    RunError::Diverged { step, reason: reason.to_string() }
}

/// Advances the run by one timestep. On error the state may be partially
/// updated and must not be stepped again.
pub fn run_step(state: &mut RunState, cfg: &ExperimentConfig) -> Result<MetricsRecord, RunError> {
    let started = cfg.record_wall_clock.then(Instant::now);
    let t = state.step;
    let policy_learning = cfg.freeze_policy_at.is_none_or(|at| t < at);
    let value_learning = cfg.freeze_value_at.is_none_or(|at| t < at);

    let objective = policy_objective(&state.policy, &state.behaviour, &state.value.w, &cfg.rollout_config(value_learning))
        .map_err(|e| diverged(t, e))?;
    let estimate = objective.estimate();
    if !(estimate.static_complexity.is_finite() && estimate.dynamic_complexity.is_finite()) {
        return Err(diverged(t, "non-finite complexity"));
    }

    if policy_learning {
        let grad = objective.gradient().map_err(|e| diverged(t, e))?;
        policy_step(&mut state.policy, &mut state.policy_optimizer, &grad, &cfg.policy_optimizer).map_err(|e| diverged(t, e))?;
        state.policy_updates += 1;
    }
    drop(objective);

    let next = state.policy.forward(&state.behaviour).map_err(|e| diverged(t, e))?;
    if !next.is_finite() {
        return Err(diverged(t, InteractivityError::NonFiniteBehaviour { step: 0 }));
    }

    let delta = if value_learning {
        let d = state.value.update_committed(&state.behaviour, &next, cfg.gamma, &cfg.value_optimizer).map_err(|e| diverged(t, e))?;
        state.value_updates += 1;
        d
    } else {
        crate::models::td_error(&state.value.w, &state.behaviour, &next, cfg.gamma).map_err(|e| diverged(t, e))?
    };

    let decay = 0.5f64.powf(1.0 / cfg.smoothing_half_life);
    let smoothed = match state.smoothed_interactivity {
        None => estimate.interactivity,
        Some(prev) => decay * prev + (1.0 - decay) * estimate.interactivity,
    };
    state.smoothed_interactivity = Some(smoothed);

    let mut components = [0.0; LOGGED_COMPONENTS];
    for (c, &v) in components.iter_mut().zip(next.as_slice()) {
        *c = v;
    }
    let record = MetricsRecord {
        step: t,
        interactivity: estimate.interactivity,
        static_complexity: estimate.static_complexity,
        dynamic_complexity: estimate.dynamic_complexity,
        smoothed_interactivity: smoothed,
        delta_norm: delta.norm(),
        components,
        behaviour_norm: next.tensor().norm(),
        wall_ms: started.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3),
    };
    state.behaviour = next;
    state.step += 1;
    Ok(record)
}

/// Result of a whole run. `error` is set when the run stopped early; the
/// records emitted up to that point are kept.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<MetricsRecord>,
    pub final_state: RunState,
    pub error: Option<RunError>,
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        matches!(self.error, Some(RunError::Diverged { .. }))
    }
}

/// Runs `cfg.steps` timesteps, passing every `log_every`-th record to `sink`
/// as soon as it is produced and collecting it.
pub fn run_experiment_with(cfg: &ExperimentConfig, mut sink: impl FnMut(&MetricsRecord)) -> Result<RunOutcome, RunError> {
    let mut state = init_run(cfg)?;
    let mut records = Vec::new();
    let mut error = None;
    while state.step < cfg.steps {
        match run_step(&mut state, cfg) {
            Ok(record) => {
                if record.step % cfg.log_every == 0 {
                    sink(&record);
                    records.push(record);
                }
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    Ok(RunOutcome { records, final_state: state, error })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    run_experiment_with(cfg, |_| {})
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    FreezePolicy,
    FreezeValue,
    FreezeBoth,
}

impl std::str::FromStr for ControlMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "freeze_policy" | "freeze-policy" => Ok(Self::FreezePolicy),
            "freeze_value" | "freeze-value" => Ok(Self::FreezeValue),
            "freeze_both" | "freeze-both" => Ok(Self::FreezeBoth),
            other => Err(format!("unknown control mode `{other}`")),
        }
    }
}

/// The same loop with learning of the designated component(s) disabled from
/// timestep `freeze_at` on.
pub fn run_control(cfg: &ExperimentConfig, mode: ControlMode, freeze_at: u64) -> Result<RunOutcome, RunError> {
    let mut cfg = cfg.clone();
    match mode {
        ControlMode::FreezePolicy => cfg.freeze_policy_at = Some(freeze_at),
        ControlMode::FreezeValue => cfg.freeze_value_at = Some(freeze_at),
        ControlMode::FreezeBoth => {
            cfg.freeze_policy_at = Some(freeze_at);
            cfg.freeze_value_at = Some(freeze_at);
        }
    }
    run_experiment(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            dim: 8,
            horizon: 3,
            steps: 20,
            policy: PolicyArch { width: 8, depth: 2, activation: Activation::Linear, bias: true },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn full_scale_dimension() {
        assert_eq!(ExperimentConfig::full_scale().dim, 1000);
        assert_eq!(ExperimentConfig::full_scale().horizon, 10);
        assert!(ExperimentConfig::full_scale().validate().is_ok());
    }

    #[test]
    fn init_is_seeded() {
        let cfg = small();
        assert_eq!(init_run(&cfg).unwrap(), init_run(&cfg).unwrap());
        let other = ExperimentConfig { seed: 1, ..small() };
        assert_ne!(init_run(&cfg).unwrap().behaviour, init_run(&other).unwrap().behaviour);
    }

    #[test]
    fn initial_behaviour_has_unit_expected_norm() {
        let mut total = 0.0;
        for seed in 0..1000 {
            let cfg = ExperimentConfig { seed, dim: 16, policy: PolicyArch { width: 4, ..small().policy }, ..small() };
            total += init_run(&cfg).unwrap().behaviour.tensor().norm_sq();
        }
        let mean = total / 1000.0;
        assert!((mean - 1.0).abs() < 0.1, "E‖b0‖² = {mean}");
    }

    #[test]
    fn validation_lists_every_problem() {
        let cfg =
            ExperimentConfig { dim: 0, gamma: 1.5, log_every: 0, freeze_policy_at: Some(50), steps: 10, ..ExperimentConfig::default() };
        let errs = cfg.validate().unwrap_err();
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, vec!["dim", "gamma", "log_every", "freeze_policy_at"]);
    }

    #[test]
    fn one_policy_and_one_value_update_per_step() {
        let cfg = small();
        let out = run_experiment(&cfg).unwrap();
        assert!(out.error.is_none());
        assert_eq!(out.records.len(), 20);
        assert_eq!(out.final_state.policy_updates, 20);
        assert_eq!(out.final_state.value_updates, 20);
        for r in &out.records {
            assert_eq!(r.interactivity, r.static_complexity - r.dynamic_complexity);
        }
    }

    #[test]
    fn frozen_value_means_zero_interactivity() {
        let cfg = ExperimentConfig { freeze_value_at: Some(5), ..small() };
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.final_state.value_updates, 5);
        for r in out.records.iter().filter(|r| r.step >= 5) {
            assert!(r.interactivity.abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_steps_gives_no_records() {
        let cfg = ExperimentConfig { steps: 0, ..small() };
        let out = run_experiment(&cfg).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.final_state, init_run(&cfg).unwrap());
    }

    #[test]
    fn log_every_thins_records() {
        let cfg = ExperimentConfig { log_every: 7, ..small() };
        let steps: Vec<u64> = run_experiment(&cfg).unwrap().records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 7, 14]);
    }

    #[test]
    fn divergence_is_reported_not_clipped() {
        let cfg = ExperimentConfig { eta_inner: 1e200, ..small() };
        let out = run_experiment(&cfg).unwrap();
        assert!(out.diverged(), "{:?}", out.error);
    }

    #[test]
    fn csv_row_matches_header_width() {
        let out = run_experiment(&ExperimentConfig { steps: 1, ..small() }).unwrap();
        let row = out.records[0].csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.ends_with(",0"));
    }
}
