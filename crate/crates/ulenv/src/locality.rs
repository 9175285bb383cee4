//! Randomised check that a claimed boundary really determines a region.
//!
//! Each trial draws a pair of states that agree on `F ∪ B` and differ
//! arbitrarily elsewhere, runs both for `k` steps and compares the results on
//! `F`. A single disagreement refutes the claim that `B` is a `k`-horizon
//! boundary of `F`.

use crate::life::{self, Cell, LifeState, Live};
use crate::local::LocalRule;
use crate::markov::{MarkovProcess, MarkovState, Substate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample<I: Ord, S> {
    pub trial: usize,
    pub first: MarkovState<I, S>,
    pub second: MarkovState<I, S>,
    pub first_after: Substate<I, S>,
    pub second_after: Substate<I, S>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LocalityVerdict<I: Ord, S> {
    Pass { trials: usize },
    Fail(Box<Counterexample<I, S>>),
}

impl<I: Ord, S> LocalityVerdict<I, S> {
    pub fn passed(&self) -> bool {
        matches!(self, LocalityVerdict::Pass { .. })
    }

    pub fn counterexample(&self) -> Option<&Counterexample<I, S>> {
        match self {
            LocalityVerdict::Pass { .. } => None,
            LocalityVerdict::Fail(c) => Some(c),
        }
    }
}

/// Generic driver. `sample` draws a fresh random state; the second state of
/// each pair keeps the first one's values on `F ∪ B` and takes everything
/// else from a second independent draw.
pub fn verify_locality_with<P, R>(
    process: &P,
    region: &BTreeSet<P::Index>,
    claimed: &BTreeSet<P::Index>,
    k: usize,
    trials: usize,
    rng: &mut R,
    mut sample: impl FnMut(&mut R) -> MarkovState<P::Index, P::Symbol>,
) -> LocalityVerdict<P::Index, P::Symbol>
where
    P: MarkovProcess,
    R: Rng,
{
    let pinned: BTreeSet<P::Index> = region.union(claimed).cloned().collect();
    for trial in 0..trials {
        let first = sample(rng);
        let mut second = sample(rng).outside(&pinned);
        second.overlay(&first.restrict(&pinned));

        let first_after = process.step_n(&first, k).restrict(region);
        let second_after = process.step_n(&second, k).restrict(region);
        if first_after != second_after {
            return LocalityVerdict::Fail(Box::new(Counterexample { trial, first, second, first_after, second_after }));
        }
    }
    LocalityVerdict::Pass { trials }
}

/// Life driver: random soups inside a window that covers `F ∪ B` with a
/// margin of `k + 2` cells, so there is always live material outside the
/// claimed boundary that could leak in. Soup density is itself random.
pub fn verify_life_locality(
    region: &BTreeSet<Cell>,
    claimed: &BTreeSet<Cell>,
    k: usize,
    trials: usize,
    seed: u64,
) -> LocalityVerdict<Cell, Live> {
    let margin = k as i64 + 2;
    let (x0, y0, x1, y1) = life::bounding_box(region.iter().chain(claimed).copied()).unwrap_or((0, 0, 0, 0));
    let window = (x0 - margin, y0 - margin, x1 + margin, y1 + margin);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    verify_locality_with(&life::life(), region, claimed, k, trials, &mut rng, |rng| random_soup(rng, window))
}

/// Life with the true boundary `b^k(F)`.
pub fn verify_life_rule(region: &BTreeSet<Cell>, k: usize, trials: usize, seed: u64) -> LocalityVerdict<Cell, Live> {
    verify_life_locality(region, &life::LifeRule.boundary(region, k), k, trials, seed)
}

pub fn random_soup<R: Rng>(rng: &mut R, (x0, y0, x1, y1): (i64, i64, i64, i64)) -> LifeState {
    let density: f64 = rng.gen_range(0.1..0.9);
    let mut state = LifeState::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            if rng.gen_bool(density) {
                state.insert((x, y), Live);
            }
        }
    }
    state
}
