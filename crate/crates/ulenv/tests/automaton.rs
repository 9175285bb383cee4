use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ulenv::automaton::{
    find_cycle, joint_state_count, joint_trace, run_embedded, verify_pomdp_equivalence, EmbeddedAutomatonSpec, EquivalenceVerdict,
    FiniteEnvironment, SecretReader,
};

#[test]
fn random_automata_match_the_interaction_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let a = EmbeddedAutomatonSpec::random(&mut rng, 3, 3, 3);
        a.validate().unwrap();
        let env = FiniteEnvironment::random(&mut rng, 4, 3, 3);
        assert_eq!(verify_pomdp_equivalence(&a, &env, 100).unwrap(), EquivalenceVerdict::Pass { steps: 100 });
    }
}

#[test]
fn secret_reader_is_detected() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut detected = 0;
    for _ in 0..20 {
        let a = SecretReader(EmbeddedAutomatonSpec::random(&mut rng, 3, 3, 3));
        let env = FiniteEnvironment::random(&mut rng, 4, 3, 3);
        match verify_pomdp_equivalence(&a, &env, 100).unwrap() {
            EquivalenceVerdict::Diverged { markov, pomdp, .. } => {
                assert_ne!(markov, pomdp);
                detected += 1;
            }
            EquivalenceVerdict::Pass { .. } => {}
        }
    }
    assert!(detected >= 15, "only {detected}/20 violations detected");
}

#[test]
fn two_state_automaton_is_eventually_periodic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let a = EmbeddedAutomatonSpec::random(&mut rng, 3, 2, 3);
        let env = FiniteEnvironment::random(&mut rng, 4, 3, 3);
        let bound = joint_state_count(&a, &env);
        let trace = joint_trace(&a, &env, bound).unwrap();
        let (start, period) = find_cycle(&trace).expect("pigeonhole forces a repeat");
        assert!(start + period <= bound);
        let behaviour = run_embedded(&a, &env, start + 3 * period).unwrap();
        for t in start..start + 2 * period {
            assert_eq!(behaviour[t], behaviour[t + period]);
        }
    }
}
