mod common;

use common::{close, matrix, random_instance, rmsprop, rollout, td, PlainPolicy};
use interactivity_core::experiment::{init_run, run_step, ExperimentConfig, PolicyArch};
use interactivity_core::interactivity::{interactivity_estimate, policy_objective, rollout as main_rollout};
use interactivity_core::models::{Activation, OptimizerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn rollout_matches_straight_line_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..50 {
        let mut inst = random_instance(&mut rng, 4, 8, 3, 3);
        inst.cfg.horizon = 3;
        let plain =
            rollout(&PlainPolicy::from_params(&inst.policy), inst.b0.as_slice(), &matrix(&inst.w_ref), 3, inst.cfg.gamma, inst.cfg.eta);

        let trace = main_rollout(&inst.policy, &inst.b0, &inst.w_ref, &inst.cfg).unwrap();
        for (a, b) in trace.behaviours.iter().zip(&plain.behaviours) {
            for (x, y) in a.as_slice().iter().zip(b) {
                assert!(close(*x, *y, 1e-12), "case {case}: behaviour {x} vs {y}");
            }
        }
        let est = interactivity_estimate(&trace);
        assert!(close(est.static_complexity, plain.static_sum, 1e-12), "case {case}: static");
        assert!(close(est.dynamic_complexity, plain.dynamic_sum, 1e-12), "case {case}: dynamic");
        assert!(close(est.interactivity, plain.interactivity(), 1e-12), "case {case}: interactivity");

        let recorded = policy_objective(&inst.policy, &inst.b0, &inst.w_ref, &inst.cfg).unwrap().estimate();
        assert!(close(recorded.interactivity, plain.interactivity(), 1e-12), "case {case}: graph value");
    }
}

fn small_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        dim: 4,
        horizon: 2,
        steps: 3,
        gamma: 0.8,
        eta_inner: 0.05,
        policy: PolicyArch { width: 5, depth: 2, activation: Activation::Linear, bias: true },
        policy_optimizer: OptimizerConfig::rmsprop(1e-2),
        value_optimizer: OptimizerConfig::rmsprop(1e-2),
        seed,
        smoothing_half_life: 2.0,
        ..ExperimentConfig::default()
    }
}

/// Replays `run_step` by hand: plain rollout for the metrics, the main
/// meta-gradient (checked against finite differences elsewhere) for the
/// policy direction, and hand-written RMSProp for both updates.
#[test]
fn run_step_matches_straight_line_reference() {
    for seed in 0..5 {
        let cfg = small_config(seed);
        let mut state = init_run(&cfg).unwrap();

        let mut policy = state.policy.clone();
        let mut b = state.behaviour.as_slice().to_vec();
        let mut w = matrix(&state.value.w);
        let n_policy: usize = policy.num_params();
        let mut policy_second = vec![0.0; n_policy];
        let mut value_second = vec![0.0; cfg.dim * cfg.dim];
        let decay = 0.5f64.powf(1.0 / cfg.smoothing_half_life);
        let mut smoothed: Option<f64> = None;

        for t in 0..cfg.steps {
            let plain = rollout(&PlainPolicy::from_params(&policy), &b, &w, cfg.horizon, cfg.gamma, cfg.eta_inner);
            let grad: Vec<f64> = policy_objective(
                &policy,
                &interactivity_core::models::Behaviour::new(b.clone()),
                &state.value.w,
                &cfg.rollout_config(true),
            )
            .unwrap()
            .gradient()
            .unwrap()
            .iter()
            .flat_map(|g| g.as_slice().iter().map(|v| -v))
            .collect();
            let mut flat: Vec<f64> = policy.tensors().iter().flat_map(|p| p.as_slice().iter().copied()).collect();
            rmsprop(&mut flat, &mut policy_second, &grad, 1e-2, 0.99, 1e-8);
            let mut offset = 0;
            for p in policy.tensors_mut() {
                let n = p.len();
                p.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
                offset += n;
            }

            let next = PlainPolicy::from_params(&policy).forward(&b);
            let delta = td(&w, &b, &next, cfg.gamma);
            let value_grad: Vec<f64> =
                (0..cfg.dim).flat_map(|i| (0..cfg.dim).map(move |j| (i, j))).map(|(i, j)| -delta[i] * b[j]).collect();
            let mut wflat: Vec<f64> = w.concat();
            rmsprop(&mut wflat, &mut value_second, &value_grad, 1e-2, 0.99, 1e-8);
            w = wflat.chunks(cfg.dim).map(|r| r.to_vec()).collect();

            let i = plain.interactivity();
            let s = smoothed.map_or(i, |p| decay * p + (1.0 - decay) * i);
            smoothed = Some(s);

            let record = run_step(&mut state, &cfg).unwrap();
            assert_eq!(record.step, t);
            assert!(close(record.interactivity, i, 1e-12), "seed {seed} step {t}: {} vs {i}", record.interactivity);
            assert!(close(record.static_complexity, plain.static_sum, 1e-12));
            assert!(close(record.smoothed_interactivity, s, 1e-12));
            assert!(close(record.delta_norm, common::sq(&delta).sqrt(), 1e-12));
            for (x, y) in state.behaviour.as_slice().iter().zip(&next) {
                assert!(close(*x, *y, 1e-12), "seed {seed} step {t}: behaviour");
            }
            for (x, y) in state.value.w.as_slice().iter().zip(&wflat) {
                assert!(close(*x, *y, 1e-12), "seed {seed} step {t}: value weights");
            }
            for (p, q) in state.policy.tensors().iter().zip(policy.tensors()) {
                for (x, y) in p.as_slice().iter().zip(q.as_slice()) {
                    assert!(close(*x, *y, 1e-12), "seed {seed} step {t}: policy weights");
                }
            }
            b = next;
        }
    }
}
