//! Universal-local environments.
//!
//! Finitely supported Markov states, uniformly local rules and their
//! boundaries, Conway's Life, Turing machines encoded as Markov processes,
//! and embedded automata coupled to a finite environment.

pub mod automaton;
pub mod life;
pub mod local;
pub mod locality;
pub mod markov;
pub mod pattern;
pub mod turing;

pub use life::{life_step, Cell, LifeRule, LifeState, Live};
pub use local::{LocalRule, UniformLocal};
pub use markov::{MarkovProcess, MarkovState, Substate};
