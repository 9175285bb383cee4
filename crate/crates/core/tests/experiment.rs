use interactivity_core::experiment::{
    init_run, run_control, run_experiment, ControlMode, ExperimentConfig, PolicyArch, RunError, CSV_HEADER,
};
use interactivity_core::models::Activation;
use proptest::prelude::*;

fn small(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        dim: 8,
        horizon: 4,
        steps: 60,
        policy: PolicyArch { width: 8, depth: 2, activation: Activation::Linear, bias: true },
        seed,
        ..ExperimentConfig::default()
    }
}

fn csv(cfg: &ExperimentConfig) -> String {
    let out = run_experiment(cfg).unwrap();
    let mut text = format!("{CSV_HEADER}\n");
    for r in &out.records {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    text
}

#[test]
fn identical_configs_give_identical_csv() {
    for seed in 0..3 {
        assert_eq!(csv(&small(seed)), csv(&small(seed)));
    }
    assert_ne!(csv(&small(0)), csv(&small(1)));
}

#[test]
fn zero_inner_step_gives_zero_interactivity() {
    for seed in 0..5 {
        let cfg = ExperimentConfig { eta_inner: 0.0, steps: 100, ..small(seed) };
        let out = run_experiment(&cfg).unwrap();
        assert!(out.error.is_none());
        for r in &out.records {
            assert!(r.interactivity.abs() <= 1e-12, "seed {seed} step {}: {}", r.step, r.interactivity);
        }
    }
}

#[test]
fn zero_steps_give_no_records() {
    let out = run_experiment(&ExperimentConfig { steps: 0, ..small(0) }).unwrap();
    assert!(out.records.is_empty());
    assert_eq!(out.final_state, init_run(&small(0)).unwrap());
}

#[test]
fn log_every_thins_records() {
    let out = run_experiment(&ExperimentConfig { log_every: 7, ..small(0) }).unwrap();
    assert_eq!(out.records.iter().map(|r| r.step).collect::<Vec<_>>(), (0..60).step_by(7).collect::<Vec<_>>());
    assert_eq!(out.final_state.step, 60);
}

#[test]
fn frozen_components_stop_counting_updates() {
    let out = run_control(&small(2), ControlMode::FreezePolicy, 20).unwrap();
    assert_eq!(out.final_state.policy_updates, 20);
    assert_eq!(out.final_state.value_updates, 60);
    let out = run_control(&small(2), ControlMode::FreezeBoth, 10).unwrap();
    assert_eq!((out.final_state.policy_updates, out.final_state.value_updates), (10, 10));
    let frozen_w = out.final_state.value.w.clone();
    assert!(out.records[10..].iter().all(|r| r.interactivity.abs() <= 1e-12));
    assert_eq!(out.final_state.value.w, frozen_w);
}

#[test]
fn invalid_config_lists_every_field() {
    let cfg = ExperimentConfig { dim: 0, gamma: 2.0, log_every: 0, ..small(0) };
    let Err(RunError::InvalidConfig(errs)) = run_experiment(&cfg) else {
        panic!("expected a config error");
    };
    let fields: Vec<_> = errs.iter().map(|e| e.field.as_str()).collect();
    assert_eq!(fields, ["dim", "gamma", "log_every"]);
}

#[test]
fn full_scale_runs_a_step() {
    let cfg = ExperimentConfig { steps: 2, ..ExperimentConfig::full_scale() };
    let out = run_experiment(&cfg).unwrap();
    assert!(out.error.is_none());
    assert_eq!(out.records.len(), 2);
    assert!((out.final_state.behaviour.tensor().rms() - 1.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn behaviours_stay_normalised_and_metrics_consistent(
        seed in 0u64..1000,
        depth in 1usize..4,
        relu in any::<bool>(),
        eta in 0.0f64..0.05,
    ) {
        let mut cfg = small(seed);
        cfg.steps = 25;
        cfg.eta_inner = eta;
        cfg.policy.depth = depth;
        cfg.policy.activation = if relu { Activation::Relu } else { Activation::Linear };
        let out = run_experiment(&cfg).unwrap();
        prop_assert!(out.error.is_none());
        for r in &out.records {
            prop_assert!((r.interactivity - (r.static_complexity - r.dynamic_complexity)).abs() <= 1e-9 * r.static_complexity.max(1.0));
            prop_assert!(r.static_complexity >= 0.0 && r.dynamic_complexity >= 0.0);
            prop_assert!(r.wall_ms == 0.0);
            // ‖b‖ ≤ √d, with equality unless the raw output is near zero.
            prop_assert!(r.behaviour_norm <= (cfg.dim as f64).sqrt() + 1e-9);
            if !relu {
                prop_assert!((r.behaviour_norm - (cfg.dim as f64).sqrt()).abs() < 1e-6);
            }
        }
    }
}
