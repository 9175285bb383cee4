//! Uniformly local processes and the boundaries of finite index sets.

use crate::markov::{MarkovProcess, MarkovState};
use std::collections::BTreeSet;

/// One local transition applied identically at every index.
///
/// The neighbourhood of an index is its boundary-space `b({ξ})`. Rules must
/// be quiescent (a blank cell with an all-blank neighbourhood stays blank)
/// and their neighbourhoods symmetric (`η ∈ b({ξ})` iff `ξ ∈ b({η})`); both
/// are needed for the sparse global step to visit every cell that can change.
pub trait LocalRule {
    type Index: Ord + Clone;
    type Symbol: Clone + Eq;

    fn neighbourhood(&self, index: &Self::Index) -> Vec<Self::Index>;

    /// Next value of a cell from its own value and its neighbourhood values,
    /// in [`LocalRule::neighbourhood`] order.
    fn apply(&self, own: Option<&Self::Symbol>, boundary: &[Option<&Self::Symbol>]) -> Option<Self::Symbol>;

    /// Collective boundary `b(F) = ⋃_{ξ∈F} b({ξ}) \ F`.
    fn collective_boundary(&self, region: &BTreeSet<Self::Index>) -> BTreeSet<Self::Index> {
        region.iter().flat_map(|i| self.neighbourhood(i)).filter(|i| !region.contains(i)).collect()
    }

    /// `b^k(F)`: the indices outside `F` whose values, together with `ω|_F`,
    /// determine `𝕋^(k)(ω)|_F`. Grows by one neighbourhood per step of
    /// horizon; `k = 0` gives the empty set.
    fn boundary(&self, region: &BTreeSet<Self::Index>, k: usize) -> BTreeSet<Self::Index> {
        let mut reach = region.clone();
        for _ in 0..k {
            let grown = self.collective_boundary(&reach);
            reach.extend(grown);
        }
        reach.into_iter().filter(|i| !region.contains(i)).collect()
    }
}

/// The global process induced by a [`LocalRule`].
#[derive(Clone, Debug, Default)]
pub struct UniformLocal<R>(pub R);

impl<R: LocalRule> MarkovProcess for UniformLocal<R> {
    type Index = R::Index;
    type Symbol = R::Symbol;

    fn step(&self, state: &MarkovState<R::Index, R::Symbol>) -> MarkovState<R::Index, R::Symbol> {
        let rule = &self.0;
        let live = state.support();
        let mut candidates = live.clone();
        candidates.extend(rule.collective_boundary(&live));
        let mut next = MarkovState::new();
        for index in candidates {
            let boundary: Vec<Option<&R::Symbol>> = rule.neighbourhood(&index).iter().map(|n| state.get(n)).collect();
            if let Some(symbol) = rule.apply(state.get(&index), &boundary) {
                next.insert(index, symbol);
            }
        }
        next
    }
}
