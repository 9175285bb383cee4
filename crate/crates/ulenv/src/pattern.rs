//! Life pattern files.
//!
//! Two formats are accepted:
//! - a coordinate list, one `x y` pair per line, `#` starting a comment;
//! - run-length encoding (`x = .., y = ..` header, `b`/`o`/`$` runs, `!`).
//!
//! RLE rows run top to bottom, so row `r` maps to `y = -r`.

use crate::life::{bounding_box, Cell, LifeState, Live};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("RLE pattern is missing the terminating '!'")]
    Unterminated,
}

fn syntax(line: usize, reason: impl Into<String>) -> PatternError {
    PatternError::Syntax { line, reason: reason.into() }
}

/// Picks the format from the content: anything with an RLE header or
/// run characters is RLE, otherwise a coordinate list.
pub fn parse_pattern(text: &str) -> Result<LifeState, PatternError> {
    let rle = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.starts_with("x") || l.contains('$') || l.contains('!') || l.contains('o'));
    if rle {
        parse_rle(text)
    } else {
        parse_coordinates(text)
    }
}

pub fn parse_coordinates(text: &str) -> Result<LifeState, PatternError> {
    let mut state = LifeState::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        let [x, y] = fields[..] else {
            return Err(syntax(n + 1, format!("expected 'x y', got {line:?}")));
        };
        let parse = |s: &str| s.parse::<i64>().map_err(|e| syntax(n + 1, format!("{s:?}: {e}")));
        state.insert((parse(x)?, parse(y)?), Live);
    }
    Ok(state)
}

pub fn parse_rle(text: &str) -> Result<LifeState, PatternError> {
    let mut state = LifeState::new();
    let (mut x, mut row) = (0i64, 0i64);
    let mut count = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        for c in line.chars() {
            match c {
                '0'..='9' => count.push(c),
                'b' | 'o' | '$' | '!' => {
                    let run: i64 = if count.is_empty() { 1 } else { count.parse().map_err(|_| syntax(n + 1, "run length overflow"))? };
                    count.clear();
                    match c {
                        'b' => x += run,
                        'o' => {
                            for _ in 0..run {
                                state.insert((x, -row), Live);
                                x += 1;
                            }
                        }
                        '$' => {
                            row += run;
                            x = 0;
                        }
                        _ => return Ok(state),
                    }
                }
                c if c.is_whitespace() => {}
                other => return Err(syntax(n + 1, format!("unexpected character {other:?}"))),
            }
        }
    }
    Err(PatternError::Unterminated)
}

pub fn write_coordinates(state: &LifeState) -> String {
    let mut out = String::new();
    for &(x, y) in state.indices() {
        let _ = writeln!(out, "{x} {y}");
    }
    out
}

/// RLE relative to the bounding box. The top-left live corner becomes the
/// origin on the way back in, so only the shape round-trips.
pub fn write_rle(state: &LifeState) -> String {
    let Some((x0, y0, x1, y1)) = bounding_box(state.indices().copied()) else {
        return "x = 0, y = 0, rule = B3/S23\n!\n".into();
    };
    let mut body = String::new();
    let push = |body: &mut String, run: i64, c: char| {
        if run > 1 {
            let _ = write!(body, "{run}");
        }
        if run > 0 {
            body.push(c);
        }
    };
    let mut pending_rows = 0i64;
    for y in (y0..=y1).rev() {
        let cells: Vec<bool> = (x0..=x1).map(|x| state.get(&(x, y)).is_some()).collect();
        if !cells.iter().any(|&c| c) {
            pending_rows += 1;
            continue;
        }
        if y != y1 {
            push(&mut body, pending_rows + 1, '$');
        }
        pending_rows = 0;
        let last = cells.iter().rposition(|&c| c).unwrap_or(0);
        let mut i = 0;
        while i <= last {
            let v = cells[i];
            let j = (i..=last).find(|&j| cells[j] != v).unwrap_or(last + 1);
            push(&mut body, (j - i) as i64, if v { 'o' } else { 'b' });
            i = j;
        }
    }
    format!("x = {}, y = {}, rule = B3/S23\n{body}!\n", x1 - x0 + 1, y1 - y0 + 1)
}

/// Translates a pattern so its bounding box starts at `(0, 0)` at the top-left.
pub fn normalise(state: &LifeState) -> LifeState {
    match bounding_box(state.indices().copied()) {
        None => LifeState::new(),
        Some((x0, _, _, y1)) => state.indices().map(|&(x, y): &Cell| ((x - x0, y - y1), Live)).collect(),
    }
}
