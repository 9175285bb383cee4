//! Turing machines, simulated directly and as an algorithmic Markov process
//! on the integer line.
//!
//! The Markov alphabet is `((Q ∪ {□''}) × Γ) ∪ {□}`: the head cell holds
//! `(q, a)`, every other non-blank tape cell holds `(□'', a)`, and all
//! remaining cells are the Markov blank (absent from the support).

use crate::markov::MarkovState;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TuringError {
    #[error("invalid machine: {0}")]
    Invalid(String),
    #[error("unknown tape symbol {0:?}")]
    UnknownSymbol(String),
    #[error("machine halted in non-final state {state:?} reading {symbol:?}: no transition defined")]
    Undefined { state: String, symbol: String },
    #[error("Markov state has {0} head cells, expected exactly one")]
    HeadCount(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    L,
    R,
}

impl Move {
    pub fn offset(self) -> i64 {
        match self {
            Move::L => -1,
            Move::R => 1,
        }
    }
}

/// `δ(state, read) = (next, write, move)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRow {
    pub state: String,
    pub read: String,
    pub next: String,
    pub write: String,
    #[serde(rename = "move")]
    pub movement: Move,
}

/// `M = (Q, Σ', Γ, δ, q0, □', F)` in its on-disk JSON form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuringMachineSpec {
    pub states: Vec<String>,
    pub input_alphabet: Vec<String>,
    pub tape_alphabet: Vec<String>,
    pub blank: String,
    pub start: String,
    #[serde(default)]
    pub finals: Vec<String>,
    pub transitions: Vec<TransitionRow>,
}

/// A validated machine with symbols and states replaced by indices.
#[derive(Clone, Debug)]
pub struct TuringMachine {
    spec: TuringMachineSpec,
    blank: usize,
    start: usize,
    is_final: Vec<bool>,
    delta: HashMap<(usize, usize), (usize, usize, Move)>,
}

fn position(list: &[String], name: &str, what: &str) -> Result<usize, TuringError> {
    list.iter().position(|s| s == name).ok_or_else(|| TuringError::Invalid(format!("{what} {name:?} is not declared")))
}

impl TuringMachine {
    pub fn new(spec: TuringMachineSpec) -> Result<Self, TuringError> {
        let invalid = |m: String| Err(TuringError::Invalid(m));
        for (list, what) in [(&spec.states, "state"), (&spec.tape_alphabet, "tape symbol")] {
            if list.is_empty() {
                return invalid(format!("no {what}s declared"));
            }
            for (i, s) in list.iter().enumerate() {
                if list[..i].contains(s) {
                    return invalid(format!("duplicate {what} {s:?}"));
                }
            }
        }
        let blank = position(&spec.tape_alphabet, &spec.blank, "blank")?;
        let start = position(&spec.states, &spec.start, "start state")?;
        for a in &spec.input_alphabet {
            if position(&spec.tape_alphabet, a, "input symbol")? == blank {
                return invalid("the blank may not be an input symbol".into());
            }
        }
        let mut is_final = vec![false; spec.states.len()];
        for f in &spec.finals {
            is_final[position(&spec.states, f, "final state")?] = true;
        }
        let mut delta = HashMap::new();
        for row in &spec.transitions {
            let q = position(&spec.states, &row.state, "state")?;
            let a = position(&spec.tape_alphabet, &row.read, "tape symbol")?;
            let q2 = position(&spec.states, &row.next, "state")?;
            let a2 = position(&spec.tape_alphabet, &row.write, "tape symbol")?;
            if is_final[q] {
                return invalid(format!("final state {:?} has an outgoing transition", row.state));
            }
            if delta.insert((q, a), (q2, a2, row.movement)).is_some() {
                return invalid(format!("duplicate transition for ({:?}, {:?})", row.state, row.read));
            }
        }
        Ok(Self { spec, blank, start, is_final, delta })
    }

    pub fn spec(&self) -> &TuringMachineSpec {
        &self.spec
    }

    /// Whether `δ` is defined on all of `(Q \ F) × Γ`.
    pub fn is_total(&self) -> bool {
        let (nq, na) = (self.spec.states.len(), self.spec.tape_alphabet.len());
        (0..nq).filter(|&q| !self.is_final[q]).all(|q| (0..na).all(|a| self.delta.contains_key(&(q, a))))
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.spec.states[q]
    }

    pub fn symbol_name(&self, a: usize) -> &str {
        &self.spec.tape_alphabet[a]
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.is_final[q]
    }

    pub fn blank(&self) -> usize {
        self.blank
    }

    fn transition(&self, q: usize, a: usize) -> Result<(usize, usize, Move), TuringError> {
        self.delta
            .get(&(q, a))
            .copied()
            .ok_or_else(|| TuringError::Undefined { state: self.state_name(q).to_string(), symbol: self.symbol_name(a).to_string() })
    }

    /// Start configuration with `input` written from position 0 and the head on it.
    pub fn initial(&self, input: &[&str]) -> Result<Configuration, TuringError> {
        let mut tape = BTreeMap::new();
        for (i, name) in input.iter().enumerate() {
            let a = self.spec.tape_alphabet.iter().position(|s| s == name).ok_or_else(|| TuringError::UnknownSymbol(name.to_string()))?;
            if a != self.blank {
                tape.insert(i as i64, a);
            }
        }
        Ok(Configuration { state: self.start, head: 0, tape })
    }

    /// One step of the plain simulator. Final states are absorbing.
    pub fn step(&self, config: &Configuration) -> Result<Configuration, TuringError> {
        if self.is_final[config.state] {
            return Ok(config.clone());
        }
        let read = config.tape.get(&config.head).copied().unwrap_or(self.blank);
        let (next, write, movement) = self.transition(config.state, read)?;
        let mut out = config.clone();
        if write == self.blank {
            out.tape.remove(&config.head);
        } else {
            out.tape.insert(config.head, write);
        }
        out.state = next;
        out.head += movement.offset();
        Ok(out)
    }

    /// The three-case encoding of a configuration.
    pub fn encode(&self, config: &Configuration) -> TmState {
        let mut state: TmState = config.tape.iter().map(|(&i, &a)| (i, TmSymbol::Tape(a))).collect();
        let under = config.tape.get(&config.head).copied().unwrap_or(self.blank);
        state.insert(config.head, TmSymbol::Head { state: config.state, symbol: under });
        state
    }

    /// Inverse of [`TuringMachine::encode`]. A written blank `(□'', □')`
    /// reads back as an empty tape cell.
    pub fn decode(&self, state: &TmState) -> Result<Configuration, TuringError> {
        let heads: Vec<_> = state.iter().filter_map(|(&i, s)| matches!(s, TmSymbol::Head { .. }).then_some(i)).collect();
        let [head] = heads[..] else {
            return Err(TuringError::HeadCount(heads.len()));
        };
        let mut tape = BTreeMap::new();
        let mut q = self.start;
        for (&i, s) in state.iter() {
            let a = match *s {
                TmSymbol::Head { state, symbol } => {
                    q = state;
                    symbol
                }
                TmSymbol::Tape(a) => a,
            };
            if a != self.blank {
                tape.insert(i, a);
            }
        }
        Ok(Configuration { state: q, head, tape })
    }

    /// One step of the Markov transition `𝕋`: write `(□'', a')` at the head,
    /// place `(q', b)` at `h + offset(d)` and leave every other index alone.
    pub fn markov_step(&self, state: &TmState) -> Result<TmState, TuringError> {
        let heads: Vec<_> = state
            .iter()
            .filter_map(|(&i, s)| match *s {
                TmSymbol::Head { state, symbol } => Some((i, state, symbol)),
                TmSymbol::Tape(_) => None,
            })
            .collect();
        let [(h, q, a)] = heads[..] else {
            return Err(TuringError::HeadCount(heads.len()));
        };
        if self.is_final[q] {
            return Ok(state.clone());
        }
        let (q2, a2, d) = self.transition(q, a)?;
        let target = h + d.offset();
        let b = match state.get(&target) {
            Some(TmSymbol::Tape(c)) => *c,
            Some(TmSymbol::Head { .. }) => unreachable!("exactly one head cell"),
            None => self.blank,
        };
        let mut next = state.clone();
        next.insert(h, TmSymbol::Tape(a2));
        next.insert(target, TmSymbol::Head { state: q2, symbol: b });
        Ok(next)
    }
}

/// State, head position and non-blank tape contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub state: usize,
    pub head: i64,
    pub tape: BTreeMap<i64, usize>,
}

/// A non-blank Markov symbol: `(q, a)` under the head, `(□'', a)` elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TmSymbol {
    Head { state: usize, symbol: usize },
    Tape(usize),
}

pub type TmState = MarkovState<i64, TmSymbol>;

/// Encodes the start configuration and returns it with the machine whose
/// [`TuringMachine::markov_step`] is the transition function.
pub fn tm_to_markov(spec: TuringMachineSpec, input: &[&str]) -> Result<(TmState, TuringMachine), TuringError> {
    let machine = TuringMachine::new(spec)?;
    let state = machine.encode(&machine.initial(input)?);
    Ok((state, machine))
}

/// Indices at which two Markov states differ.
pub fn changed_indices(before: &TmState, after: &TmState) -> Vec<i64> {
    let mut idx: Vec<i64> = before.indices().chain(after.indices()).copied().collect();
    idx.sort_unstable();
    idx.dedup();
    idx.into_iter().filter(|i| before.get(i) != after.get(i)).collect()
}

fn row(state: &str, read: &str, next: &str, write: &str, movement: Move) -> TransitionRow {
    TransitionRow { state: state.into(), read: read.into(), next: next.into(), write: write.into(), movement }
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// A binary counter that never stops: scan right to the end of the number,
/// add one with carry while moving left, then scan right again.
/// The number is written most significant bit first.
pub fn binary_counter() -> TuringMachineSpec {
    use Move::*;
    TuringMachineSpec {
        states: names(&["right", "carry"]),
        input_alphabet: names(&["0", "1"]),
        tape_alphabet: names(&["_", "0", "1"]),
        blank: "_".into(),
        start: "right".into(),
        finals: vec![],
        transitions: vec![
            row("right", "0", "right", "0", R),
            row("right", "1", "right", "1", R),
            row("right", "_", "carry", "_", L),
            row("carry", "1", "carry", "0", L),
            row("carry", "0", "right", "1", R),
            row("carry", "_", "right", "1", R),
        ],
    }
}

/// Adds one and stops in the final state `done`.
pub fn binary_increment() -> TuringMachineSpec {
    let mut spec = binary_counter();
    spec.states.push("done".into());
    spec.finals = vec!["done".into()];
    for r in spec.transitions.iter_mut().filter(|r| r.state == "carry" && r.read != "1") {
        r.next = "done".into();
    }
    spec
}
