//! Finitely supported states of an algorithmic Markov process.
//!
//! A state maps a countable index set to a finite alphabet with a
//! distinguished blank. Only non-blank entries are stored, so `|ω|` is the
//! number of stored entries and is always finite.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};

/// `ω : Ξ → Σ` with finite support. `None` stands for the blank symbol.
///
/// Serialised as a list of `[index, symbol]` pairs so that composite indices
/// survive formats with string-only map keys.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MarkovState<I: Ord, S> {
    support: BTreeMap<I, S>,
}

impl<I: Ord, S> Default for MarkovState<I, S> {
    fn default() -> Self {
        Self { support: BTreeMap::new() }
    }
}

/// `ω|_F`: the value, possibly blank, at every index of a finite set.
pub type Substate<I, S> = BTreeMap<I, Option<S>>;

impl<I: Ord + Clone, S: Clone> MarkovState<I, S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// `|ω|`, the number of non-blank indices.
    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn is_blank(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, index: &I) -> Option<&S> {
        self.support.get(index)
    }

    /// Writes `symbol` at `index`; `None` erases it back to blank.
    pub fn set(&mut self, index: I, symbol: Option<S>) {
        match symbol {
            Some(s) => {
                self.support.insert(index, s);
            }
            None => {
                self.support.remove(&index);
            }
        }
    }

    pub fn insert(&mut self, index: I, symbol: S) {
        self.support.insert(index, symbol);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&I, &S)> {
        self.support.iter()
    }

    pub fn indices(&self) -> impl Iterator<Item = &I> {
        self.support.keys()
    }

    pub fn support(&self) -> BTreeSet<I> {
        self.support.keys().cloned().collect()
    }

    /// `ω|_F`, blanks included.
    pub fn restrict<'a>(&self, indices: impl IntoIterator<Item = &'a I>) -> Substate<I, S>
    where
        I: 'a,
    {
        indices.into_iter().map(|i| (i.clone(), self.support.get(i).cloned())).collect()
    }

    /// The non-blank part of the state outside `F`.
    pub fn outside(&self, indices: &BTreeSet<I>) -> MarkovState<I, S> {
        let support = self.support.iter().filter(|(i, _)| !indices.contains(i)).map(|(i, s)| (i.clone(), s.clone())).collect();
        MarkovState { support }
    }

    /// Overwrites every index of `sub` with its (possibly blank) value.
    pub fn overlay(&mut self, sub: &Substate<I, S>) {
        for (i, s) in sub {
            self.set(i.clone(), s.clone());
        }
    }
}

impl<I: Ord + Serialize, S: Serialize> Serialize for MarkovState<I, S> {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> Result<Z::Ok, Z::Error> {
        serializer.collect_seq(self.support.iter())
    }
}

impl<'de, I: Ord + Deserialize<'de>, S: Deserialize<'de>> Deserialize<'de> for MarkovState<I, S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Vec::<(I, S)>::deserialize(deserializer)?.into_iter().collect())
    }
}

impl<I: Ord, S> FromIterator<(I, S)> for MarkovState<I, S> {
    fn from_iter<T: IntoIterator<Item = (I, S)>>(iter: T) -> Self {
        Self { support: iter.into_iter().collect() }
    }
}

/// A deterministic transition on finitely supported states.
pub trait MarkovProcess {
    type Index: Ord + Clone;
    type Symbol: Clone + Eq;

    fn step(&self, state: &MarkovState<Self::Index, Self::Symbol>) -> MarkovState<Self::Index, Self::Symbol>;

    /// `𝕋^(k)`.
    fn step_n(&self, state: &MarkovState<Self::Index, Self::Symbol>, k: usize) -> MarkovState<Self::Index, Self::Symbol> {
        let mut s = state.clone();
        for _ in 0..k {
            s = self.step(&s);
        }
        s
    }
}
