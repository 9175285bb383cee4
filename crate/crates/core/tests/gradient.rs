mod common;

use common::{finite_difference, random_instance, random_smooth_instance, relative_error};
use interactivity_core::interactivity::{policy_objective, RolloutConfig};
use interactivity_core::models::{Activation, Behaviour, PolicyParams, PolicySpec};
use interactivity_core::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn flat(grads: &[Tensor]) -> Vec<f64> {
    grads.iter().flat_map(|g| g.as_slice().iter().copied()).collect()
}

#[test]
fn meta_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..25 {
        let (inst, _) = random_smooth_instance(&mut rng, 6, 10, 3, 4, 1e-3);
        let obj = policy_objective(&inst.policy, &inst.b0, &inst.w_ref, &inst.cfg).unwrap();
        let analytic = flat(&obj.gradient().unwrap());
        let numeric = finite_difference(&inst, 1e-5);
        let err = relative_error(&analytic, &numeric);
        assert!(err <= 1e-4, "case {case}: relative error {err:e} ({:?})", inst.policy.spec);
    }
}

#[test]
fn three_step_two_layer_linear_objective() {
    let spec = PolicySpec { dim: 4, width: 8, depth: 2, activation: Activation::Linear, bias: true };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let policy = PolicyParams::init(spec, &mut rng).unwrap();
    let b0 = Behaviour::new(vec![0.3, -1.2, 0.8, 0.1]);
    let w_ref = Tensor::from_vec(4, 4, (0..16).map(|i| 0.05 * ((i * 7 % 11) as f64 - 5.0)).collect());
    let cfg = RolloutConfig::new(3, 0.9, 0.05);
    let inst = common::Instance { policy, b0, w_ref, cfg };
    let obj = policy_objective(&inst.policy, &inst.b0, &inst.w_ref, &inst.cfg).unwrap();
    let err = relative_error(&flat(&obj.gradient().unwrap()), &finite_difference(&inst, 1e-5));
    assert!(err < 1e-4, "relative error {err:e}");
}

#[test]
fn detached_bootstrap_leaves_the_objective_value_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut inst = random_instance(&mut rng, 5, 6, 2, 3);
    inst.cfg = RolloutConfig::new(3, 0.9, 0.1);
    let mut detached = inst.cfg;
    detached.detach_bootstrap = true;
    let a = policy_objective(&inst.policy, &inst.b0, &inst.w_ref, &inst.cfg).unwrap();
    let b = policy_objective(&inst.policy, &inst.b0, &inst.w_ref, &detached).unwrap();
    assert_eq!(a.value(), b.value());
    let (ga, gb) = (flat(&a.gradient().unwrap()), flat(&b.gradient().unwrap()));
    assert!(relative_error(&ga, &gb) > 1e-6, "stopping the bootstrap gradient should change the direction");
}
