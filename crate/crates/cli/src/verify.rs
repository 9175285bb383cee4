//! Pass/fail reports for the gradient audit and the environment verifiers.
//! Every failing report carries the payload needed to reproduce it.

use interactivity_core::gradcheck::{check_random, CaseLimits};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeSet;
use ulenv::automaton::{verify_pomdp_equivalence, EmbeddedAutomatonSpec, EquivalenceVerdict, FiniteEnvironment, SecretReader};
use ulenv::life::{self, Cell};
use ulenv::locality::{verify_life_locality, LocalityVerdict};
use ulenv::pattern::parse_coordinates;
use ulenv::turing::{changed_indices, tm_to_markov, TuringMachineSpec};
use ulenv::{life_step, LifeState};

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub check: String,
    pub passed: bool,
    pub summary: String,
    /// Counterexample or diagnostic data; `null` on a clean pass.
    pub payload: Value,
}

impl Report {
    fn new(check: impl Into<String>, passed: bool, summary: impl Into<String>, payload: Value) -> Self {
        Self { check: check.into(), passed, summary: summary.into(), payload }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.check, self.summary)
    }
}

pub fn grad_check(cases: usize, seed: u64, tolerance: f64, h: f64) -> Report {
    let audit = check_random(cases, seed, CaseLimits::default(), h);
    let results = audit.reports;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(rep) => {
                worst = worst.max(rep.relative_error);
                if rep.relative_error.is_nan() || rep.relative_error > tolerance {
                    failures.push(json!({"case": i, "report": rep}));
                }
            }
            Err(e) => failures.push(json!({"case": i, "error": e.to_string()})),
        }
    }
    Report::new(
        "grad-check",
        failures.is_empty(),
        format!(
            "{cases} cases, worst relative error {worst:.3e} (tolerance {tolerance:e}), {} failures, {} draws at a ReLU kink skipped",
            failures.len(),
            audit.redrawn
        ),
        if failures.is_empty() { Value::Null } else { json!({"seed": seed, "failures": failures}) },
    )
}

pub const REFERENCE_FRAMES: [&str; 3] =
    [include_str!("../patterns/glider_t0.cells"), include_str!("../patterns/glider_t1.cells"), include_str!("../patterns/glider_t2.cells")];

pub fn reference_frames() -> [LifeState; 3] {
    REFERENCE_FRAMES.map(|text| parse_coordinates(text).expect("bundled pattern parses"))
}

fn cells_json(cells: &BTreeSet<Cell>) -> Value {
    json!(cells.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>())
}

/// Steps the stored frame at `t` and compares each generation with the
/// stored frame at `t + 1` and `t + 2`. Also checks each transition on its
/// own, starting from the stored frame rather than the simulated one.
pub fn life_replay() -> Report {
    let frames = reference_frames();
    let mut passed = true;
    let mut notes = Vec::new();
    let mut transitions = Vec::new();
    let mut current = frames[0].clone();
    for (t, expected) in frames.iter().enumerate().skip(1) {
        current = life_step(&current);
        let (got, want) = (life::cells(&current), life::cells(expected));
        let ok = got == want;
        passed &= ok;
        notes.push(format!("t+{t} {}", if ok { "matches" } else { "differs" }));
        transitions.push(json!({
            "from": "t",
            "generation": t,
            "simulated": cells_json(&got),
            "expected": cells_json(&want),
            "missing": cells_json(&want.difference(&got).copied().collect()),
            "extra": cells_json(&got.difference(&want).copied().collect()),
        }));
    }
    for t in 0..2 {
        let ok = life::cells(&life_step(&frames[t])) == life::cells(&frames[t + 1]);
        notes.push(format!("stored t+{t} -> t+{} {}", t + 1, if ok { "is a Life step" } else { "is not a Life step" }));
    }
    Report::new("glider replay", passed, notes.join("; "), if passed { Value::Null } else { json!({"transitions": transitions}) })
}

/// The Markov encoding against the plain simulator, configuration by
/// configuration, with the at-most-two-changes check on every step.
pub fn tm_equivalence(spec: TuringMachineSpec, input: &[&str], steps: usize) -> Report {
    let (mut state, machine) = match tm_to_markov(spec, input) {
        Ok(v) => v,
        Err(e) => return Report::new("tm", false, e.to_string(), Value::Null),
    };
    let mut config = match machine.initial(input) {
        Ok(c) => c,
        Err(e) => return Report::new("tm", false, e.to_string(), Value::Null),
    };
    let mut max_changed = 0;
    for t in 0..steps {
        let next_state = match machine.markov_step(&state) {
            Ok(s) => s,
            Err(e) => return Report::new("tm", false, format!("Markov step {t}: {e}"), json!({"step": t})),
        };
        let next_config = match machine.step(&config) {
            Ok(c) => c,
            Err(e) => return Report::new("tm", false, format!("direct step {t}: {e}"), json!({"step": t})),
        };
        let changed = changed_indices(&state, &next_state);
        max_changed = max_changed.max(changed.len());
        let decoded = machine.decode(&next_state);
        if changed.len() > 2 || decoded.as_ref() != Ok(&next_config) {
            return Report::new(
                "tm",
                false,
                format!("configurations diverge after step {}", t + 1),
                json!({"step": t + 1, "changed": changed, "markov": format!("{decoded:?}"), "direct": next_config}),
            );
        }
        state = next_state;
        config = next_config;
    }
    let tape: String = match (config.tape.keys().next(), config.tape.keys().last()) {
        (Some(&lo), Some(&hi)) => {
            (lo..=hi).map(|i| config.tape.get(&i).map_or(machine.spec().blank.clone(), |&a| machine.symbol_name(a).to_string())).collect()
        }
        _ => String::new(),
    };
    Report::new(
        "tm",
        true,
        format!(
            "{steps} steps agree, at most {max_changed} indices changed per step, final state {} head {} tape {tape}",
            machine.state_name(config.state),
            config.head
        ),
        Value::Null,
    )
}

fn locality_payload(v: &LocalityVerdict<Cell, life::Live>) -> Value {
    match v.counterexample() {
        None => Value::Null,
        Some(c) => json!({
            "trial": c.trial,
            "first": cells_json(&c.first.support()),
            "second": cells_json(&c.second.support()),
            "first_after": c.first_after.iter().map(|(&(x, y), s)| json!([x, y, s.is_some()])).collect::<Vec<_>>(),
            "second_after": c.second_after.iter().map(|(&(x, y), s)| json!([x, y, s.is_some()])).collect::<Vec<_>>(),
        }),
    }
}

/// Locality of Life around the reference centre cell at horizon `k`. With
/// `shrink`, one corner cell is withheld from the claimed boundary, which
/// must be caught.
pub fn locality(k: usize, trials: usize, seed: u64, shrink: bool) -> Report {
    let region = BTreeSet::from([life::REFERENCE_CENTRE]);
    let mut claimed = life::boundary(&region, k);
    if shrink {
        let (cx, cy) = life::REFERENCE_CENTRE;
        claimed.remove(&(cx + k as i64, cy + k as i64));
    }
    let verdict = verify_life_locality(&region, &claimed, k, trials, seed);
    let label = format!("locality k={k}{}", if shrink { " (shrunken boundary)" } else { "" });
    let summary = match &verdict {
        LocalityVerdict::Pass { trials } => format!("{trials} trials, |boundary| = {}, no violations", claimed.len()),
        LocalityVerdict::Fail(c) => format!("violation at trial {}, |boundary| = {}", c.trial, claimed.len()),
    };
    Report::new(label, verdict.passed(), summary, locality_payload(&verdict))
}

/// Dual-path check on random automata and environments. With
/// `secret_reader`, every automaton also reads the environment cell.
pub fn pomdp(automata: usize, steps: usize, seed: u64, secret_reader: bool) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first_failure = Value::Null;
    let mut failures = 0;
    for i in 0..automata {
        let spec = EmbeddedAutomatonSpec::random(&mut rng, 3, 3, 3);
        let env = FiniteEnvironment::random(&mut rng, 4, 3, 3);
        let verdict = if secret_reader {
            verify_pomdp_equivalence(&SecretReader(spec.clone()), &env, steps)
        } else {
            verify_pomdp_equivalence(&spec, &env, steps)
        };
        match verdict {
            Ok(EquivalenceVerdict::Pass { .. }) => {}
            Ok(EquivalenceVerdict::Diverged { step, markov, pomdp }) => {
                failures += 1;
                if first_failure.is_null() {
                    first_failure = json!({"automaton": i, "step": step, "markov": markov, "pomdp": pomdp, "spec": spec, "env": env});
                }
            }
            Err(e) => {
                failures += 1;
                if first_failure.is_null() {
                    first_failure = json!({"automaton": i, "error": e.to_string()});
                }
            }
        }
    }
    Report::new(
        format!("pomdp equivalence{}", if secret_reader { " (secret reader)" } else { "" }),
        failures == 0,
        format!("{automata} automata x {steps} steps, {failures} diverged"),
        first_failure,
    )
}
