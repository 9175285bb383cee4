//! Conway's Game of Life (B3/S23) on the infinite grid `ℤ²`.
//!
//! Live cells are the only stored entries, so a pattern is literally a
//! finitely supported state and `|ω|` is its population.

use crate::local::{LocalRule, UniformLocal};
use crate::markov::{MarkovProcess, MarkovState};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// `(x, y)`.
pub type Cell = (i64, i64);

/// The single non-blank symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Live;

pub type LifeState = MarkovState<Cell, Live>;

pub const MOORE: [Cell; 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// B3/S23 over the 8-cell Moore neighbourhood.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LifeRule;

impl LocalRule for LifeRule {
    type Index = Cell;
    type Symbol = Live;

    fn neighbourhood(&self, &(x, y): &Cell) -> Vec<Cell> {
        MOORE.iter().map(|&(dx, dy)| (x + dx, y + dy)).collect()
    }

    fn apply(&self, own: Option<&Live>, boundary: &[Option<&Live>]) -> Option<Live> {
        let n = boundary.iter().filter(|c| c.is_some()).count();
        match (own.is_some(), n) {
            (_, 3) | (true, 2) => Some(Live),
            _ => None,
        }
    }
}

pub type Life = UniformLocal<LifeRule>;

pub fn life() -> Life {
    UniformLocal(LifeRule)
}

pub fn from_cells(cells: impl IntoIterator<Item = Cell>) -> LifeState {
    cells.into_iter().map(|c| (c, Live)).collect()
}

pub fn cells(state: &LifeState) -> BTreeSet<Cell> {
    state.support()
}

/// One generation.
pub fn life_step(state: &LifeState) -> LifeState {
    life().step(state)
}

/// `(min_x, min_y, max_x, max_y)`, or `None` for the empty grid.
pub fn bounding_box(cells: impl IntoIterator<Item = Cell>) -> Option<(i64, i64, i64, i64)> {
    cells.into_iter().fold(None, |acc, (x, y)| match acc {
        None => Some((x, y, x, y)),
        Some((x0, y0, x1, y1)) => Some((x0.min(x), y0.min(y), x1.max(x), y1.max(y))),
    })
}

/// `(2k+1)`-square around every cell of `region`, minus the region.
pub fn boundary(region: &BTreeSet<Cell>, k: usize) -> BTreeSet<Cell> {
    LifeRule.boundary(region, k)
}

/// Reference glider frames at `t`, `t+1`, `t+2`, as `(x, y)` with `y`
/// pointing up. Stored as published; only the second transition is a Life
/// step.
/// The highlighted centre cell is `(2, 2)`.
pub const REFERENCE_GLIDER_FRAMES: [[Cell; 5]; 3] =
    [[(1, 3), (2, 2), (3, 2), (1, 1), (2, 1)], [(2, 3), (1, 2), (1, 1), (2, 1), (3, 1)], [(3, 2), (1, 2), (1, 1), (2, 1), (2, 0)]];

/// Centre cell of the reference frames, whose 1- and 2-horizon boundaries
/// are the standard locality example.
pub const REFERENCE_CENTRE: Cell = (2, 2);

/// Renders the cells inside a box as rows of `O` / `.`, top row first.
pub fn render(state: &LifeState, (x0, y0, x1, y1): (i64, i64, i64, i64)) -> String {
    let mut out = String::new();
    for y in (y0..=y1).rev() {
        for x in x0..=x1 {
            out.push(if state.get(&(x, y)).is_some() { 'O' } else { '.' });
        }
        out.push('\n');
    }
    out
}
