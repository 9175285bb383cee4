//! Embedded automata and their equivalence with stateful policies.
//!
//! The world has four sites: the automaton's input `X`, internal state `Θ`
//! and output `Y`, plus one environment cell `E`. Every site updates at once:
//!
//! ```text
//! θ' = u(x, θ)    y' = π(x, θ)    e' = f(e, y)    x' = g(f(e, y))
//! ```
//!
//! The same dynamics can be run two ways. As a Markov process on the joint
//! state, `u` and `π` are handed a view of the whole world. As an explicit
//! observe/act loop, the agent only ever receives `x` and its own `θ`. When
//! the automaton respects its boundary the two traces agree exactly.

use crate::markov::{MarkovProcess, MarkovState};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("invalid automaton: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    X,
    Theta,
    Y,
    Env,
}

pub const SITES: [Site; 4] = [Site::X, Site::Theta, Site::Y, Site::Env];

/// Joint world state. Symbol `0` is the blank on every site.
pub type World = MarkovState<Site, usize>;

pub fn world(x: usize, theta: usize, y: usize, e: usize) -> World {
    [(Site::X, x), (Site::Theta, theta), (Site::Y, y), (Site::Env, e)].into_iter().filter(|&(_, v)| v != 0).collect()
}

pub fn read(world: &World, site: Site) -> usize {
    world.get(&site).copied().unwrap_or(0)
}

/// `(x, θ, y, e)`.
pub fn unpack(world: &World) -> (usize, usize, usize, usize) {
    (read(world, Site::X), read(world, Site::Theta), read(world, Site::Y), read(world, Site::Env))
}

/// An automaton evaluates `u` and `π` through a reader; the caller decides
/// which sites the reader can actually see.
pub trait Automaton {
    /// `(|X|, |Θ|, |Y|)`.
    fn sizes(&self) -> (usize, usize, usize);
    fn initial_state(&self) -> usize;
    fn initial_output(&self) -> usize;
    fn update(&self, read: &dyn Fn(Site) -> usize) -> usize;
    fn output(&self, read: &dyn Fn(Site) -> usize) -> usize;
}

/// `𝒜 = (Ω|_X, Ω|_Y, Ω|_Θ, u, π)` as explicit tables indexed `[x][θ]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddedAutomatonSpec {
    pub inputs: usize,
    pub states: usize,
    pub outputs: usize,
    pub update: Vec<Vec<usize>>,
    pub output: Vec<Vec<usize>>,
    #[serde(default)]
    pub initial_state: usize,
    #[serde(default)]
    pub initial_output: usize,
}

impl EmbeddedAutomatonSpec {
    pub fn validate(&self) -> Result<(), AutomatonError> {
        let bad = |m: String| Err(AutomatonError::Invalid(m));
        if self.inputs == 0 || self.states == 0 || self.outputs == 0 {
            return bad("every space needs at least one element".into());
        }
        for (name, table, range) in [("update", &self.update, self.states), ("output", &self.output, self.outputs)] {
            if table.len() != self.inputs || table.iter().any(|r| r.len() != self.states) {
                return bad(format!("{name} table must be {}x{}", self.inputs, self.states));
            }
            if table.iter().flatten().any(|&v| v >= range) {
                return bad(format!("{name} table has an entry outside 0..{range}"));
            }
        }
        if self.initial_state >= self.states || self.initial_output >= self.outputs {
            return bad("initial state or output out of range".into());
        }
        Ok(())
    }

    pub fn random<R: Rng>(rng: &mut R, inputs: usize, states: usize, outputs: usize) -> Self {
        let table = |rng: &mut R, range: usize| -> Vec<Vec<usize>> {
            (0..inputs).map(|_| (0..states).map(|_| rng.gen_range(0..range)).collect()).collect()
        };
        let update = table(rng, states);
        let output = table(rng, outputs);
        Self { inputs, states, outputs, update, output, initial_state: rng.gen_range(0..states), initial_output: rng.gen_range(0..outputs) }
    }

    /// Ignores its input and always emits `y`.
    pub fn constant(inputs: usize, outputs: usize, y: usize) -> Self {
        Self {
            inputs,
            states: 1,
            outputs,
            update: vec![vec![0]; inputs],
            output: vec![vec![y]; inputs],
            initial_state: 0,
            initial_output: y,
        }
    }
}

impl Automaton for EmbeddedAutomatonSpec {
    fn sizes(&self) -> (usize, usize, usize) {
        (self.inputs, self.states, self.outputs)
    }
    fn initial_state(&self) -> usize {
        self.initial_state
    }
    fn initial_output(&self) -> usize {
        self.initial_output
    }
    fn update(&self, read: &dyn Fn(Site) -> usize) -> usize {
        self.update[read(Site::X)][read(Site::Theta)]
    }
    fn output(&self, read: &dyn Fn(Site) -> usize) -> usize {
        self.output[read(Site::X)][read(Site::Theta)]
    }
}

/// Breaks `b^k(Θ) = X`: its state update also reads the environment cell.
#[derive(Clone, Debug)]
pub struct SecretReader(pub EmbeddedAutomatonSpec);

impl Automaton for SecretReader {
    fn sizes(&self) -> (usize, usize, usize) {
        self.0.sizes()
    }
    fn initial_state(&self) -> usize {
        self.0.initial_state
    }
    fn initial_output(&self) -> usize {
        self.0.initial_output
    }
    fn update(&self, read: &dyn Fn(Site) -> usize) -> usize {
        (self.0.update(read) + read(Site::Env)) % self.0.states
    }
    fn output(&self, read: &dyn Fn(Site) -> usize) -> usize {
        self.0.output(read)
    }
}

/// `e' = f(e, y)` and `x = g(e)` over a finite environment cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteEnvironment {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    /// Indexed `[e][y]`.
    pub transition: Vec<Vec<usize>>,
    /// Indexed `[e]`.
    pub observe: Vec<usize>,
    pub initial: usize,
}

impl FiniteEnvironment {
    pub fn random<R: Rng>(rng: &mut R, states: usize, actions: usize, observations: usize) -> Self {
        Self {
            states,
            actions,
            observations,
            transition: (0..states).map(|_| (0..actions).map(|_| rng.gen_range(0..states)).collect()).collect(),
            observe: (0..states).map(|_| rng.gen_range(0..observations)).collect(),
            initial: rng.gen_range(0..states),
        }
    }

    /// Feeds the last output straight back as the next input.
    pub fn echo(symbols: usize) -> Self {
        Self {
            states: symbols,
            actions: symbols,
            observations: symbols,
            transition: (0..symbols).map(|_| (0..symbols).collect()).collect(),
            observe: (0..symbols).collect(),
            initial: 0,
        }
    }

    fn check(&self) -> Result<(), AutomatonError> {
        let shaped = self.transition.len() == self.states
            && self.transition.iter().all(|r| r.len() == self.actions && r.iter().all(|&e| e < self.states))
            && self.observe.len() == self.states
            && self.observe.iter().all(|&x| x < self.observations)
            && self.initial < self.states;
        if shaped {
            Ok(())
        } else {
            Err(AutomatonError::Invalid("environment tables do not match their declared sizes".into()))
        }
    }

    pub fn next(&self, e: usize, y: usize) -> usize {
        self.transition[e][y]
    }
}

fn check_spaces<A: Automaton + ?Sized>(automaton: &A, env: &FiniteEnvironment) -> Result<(), AutomatonError> {
    env.check()?;
    let (nx, _, ny) = automaton.sizes();
    if nx != env.observations {
        return Err(AutomatonError::SpaceMismatch(format!("automaton reads {nx} inputs but the environment emits {}", env.observations)));
    }
    if ny != env.actions {
        return Err(AutomatonError::SpaceMismatch(format!("automaton emits {ny} outputs but the environment accepts {}", env.actions)));
    }
    Ok(())
}

/// The coupled system as a single Markov process on [`World`].
pub struct JointProcess<'a, A: ?Sized> {
    pub automaton: &'a A,
    pub env: &'a FiniteEnvironment,
}

impl<A: Automaton + ?Sized> MarkovProcess for JointProcess<'_, A> {
    type Index = Site;
    type Symbol = usize;

    fn step(&self, w: &World) -> World {
        let view = |s: Site| read(w, s);
        let (_, _, y, e) = unpack(w);
        let e2 = self.env.next(e, y);
        world(self.env.observe[e2], self.automaton.update(&view), self.automaton.output(&view), e2)
    }
}

/// `b_t = (x_t, y_t)`.
pub type Behaviour = (usize, usize);

pub fn initial_world<A: Automaton + ?Sized>(automaton: &A, env: &FiniteEnvironment) -> World {
    world(env.observe[env.initial], automaton.initial_state(), automaton.initial_output(), env.initial)
}

/// Runs the joint Markov process and returns `b_0 ..= b_steps`.
pub fn run_embedded<A: Automaton + ?Sized>(automaton: &A, env: &FiniteEnvironment, steps: usize) -> Result<Vec<Behaviour>, AutomatonError> {
    Ok(joint_trace(automaton, env, steps)?
        .iter()
        .map(|w| {
            let (x, _, y, _) = unpack(w);
            (x, y)
        })
        .collect())
}

/// Every joint state `ω_0 ..= ω_steps`.
pub fn joint_trace<A: Automaton + ?Sized>(automaton: &A, env: &FiniteEnvironment, steps: usize) -> Result<Vec<World>, AutomatonError> {
    check_spaces(automaton, env)?;
    let process = JointProcess { automaton, env };
    let mut w = initial_world(automaton, env);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(w.clone());
    for _ in 0..steps {
        w = process.step(&w);
        out.push(w.clone());
    }
    Ok(out)
}

/// The explicit interaction loop: the environment owns `e`, the agent owns
/// `θ`, and the agent is shown only its observation and its own state.
pub fn run_pomdp<A: Automaton + ?Sized>(automaton: &A, env: &FiniteEnvironment, steps: usize) -> Result<Vec<Behaviour>, AutomatonError> {
    check_spaces(automaton, env)?;
    let mut e = env.initial;
    let mut x = env.observe[e];
    let mut theta = automaton.initial_state();
    let mut y = automaton.initial_output();
    let mut out = vec![(x, y)];
    for _ in 0..steps {
        let view = |s: Site| match s {
            Site::X => x,
            Site::Theta => theta,
            Site::Y | Site::Env => 0,
        };
        let action = automaton.output(&view);
        let next_theta = automaton.update(&view);
        e = env.next(e, y);
        x = env.observe[e];
        theta = next_theta;
        y = action;
        out.push((x, y));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum EquivalenceVerdict {
    Pass { steps: usize },
    Diverged { step: usize, markov: Behaviour, pomdp: Behaviour },
}

impl EquivalenceVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, EquivalenceVerdict::Pass { .. })
    }
}

/// Runs both paths and reports the first step at which they disagree.
pub fn verify_pomdp_equivalence<A: Automaton + ?Sized>(
    automaton: &A,
    env: &FiniteEnvironment,
    steps: usize,
) -> Result<EquivalenceVerdict, AutomatonError> {
    let a = run_embedded(automaton, env, steps)?;
    let b = run_pomdp(automaton, env, steps)?;
    Ok(match a.iter().zip(&b).position(|(p, q)| p != q) {
        None => EquivalenceVerdict::Pass { steps },
        Some(step) => EquivalenceVerdict::Diverged { step, markov: a[step], pomdp: b[step] },
    })
}

/// `(μ, λ)`: the first state that repeats and the cycle length, or `None`
/// if no state repeats within the trace.
pub fn find_cycle<T: std::hash::Hash + Eq>(trace: &[T]) -> Option<(usize, usize)> {
    let mut seen = HashMap::new();
    for (t, s) in trace.iter().enumerate() {
        if let Some(&first) = seen.get(s) {
            return Some((first, t - first));
        }
        seen.insert(s, t);
    }
    None
}

/// Number of distinct joint states, `|X|·|Θ|·|Y|·|E|`; the trace must
/// revisit a state within this many steps.
pub fn joint_state_count<A: Automaton + ?Sized>(automaton: &A, env: &FiniteEnvironment) -> usize {
    let (nx, nt, ny) = automaton.sizes();
    nx * nt * ny * env.states
}
