//! Cell classification and traversability.
//!
//! An `m`-cell is strongly good when it is internally spanned within
//! `floor(B m / p)` steps, and good when its interior is covered by the
//! evolution of its own seeds within the same budget. Semi-good, bad and
//! weakly bad are the derived combinations.

use crate::droplet::{extract, Droplet};
use crate::error::{Error, Result};
use crate::grid::{GridConfig, SiteSet, StepLimit, NEVER};
use crate::scales::{budget, ScaleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CellClass {
    pub strongly_good: bool,
    pub good: bool,
    /// Set when `m < 3`: the interior is empty, so goodness held vacuously.
    pub vacuous_interior: bool,
}

impl CellClass {
    pub fn semi_good(&self) -> bool {
        self.good && !self.strongly_good
    }

    pub fn bad(&self) -> bool {
        !self.good
    }

    pub fn weakly_bad(&self) -> bool {
        !self.strongly_good
    }
}

/// Classifies a square cell under the `floor(B m / p)` budget.
pub fn classify_cell(d: &Droplet, a: &SiteSet, params: &ScaleParams, p: f64) -> Result<CellClass> {
    if !d.is_square() {
        return Err(Error::Precondition(format!("{d} is not a cell")));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidProbability(p));
    }
    let m = d.width();
    let t = params.cell_time_budget(m, p);
    let sub = extract(a, d)?;
    let (_, field) = sub.evolve_with_times(StepLimit::Unbounded);
    let mut strongly_good = true;
    let mut good = true;
    let vacuous_interior = m < 3;
    for y in 0..m as usize {
        for x in 0..m as usize {
            let infected = field.time(x, y) <= t; // NEVER compares greater
            if !infected {
                strongly_good = false;
                let on_edge = x == 0 || y == 0 || x as u64 == m - 1 || y as u64 == m - 1;
                if !on_edge {
                    good = false;
                }
            }
        }
    }
    if vacuous_interior {
        good = true;
    }
    debug_assert!(!strongly_good || good, "strongly good must imply good");
    Ok(CellClass { strongly_good, good, vacuous_interior })
}

/// Band orientation used by [`is_traversable`]: a droplet at least as tall
/// as it is wide is scanned by overlapping double rows, otherwise by
/// overlapping double columns.
fn scans_by_rows(d: &Droplet) -> bool {
    d.height() >= d.width()
}

/// No empty double band: every pair of consecutive rows (tall droplets) or
/// columns (wide droplets) holds at least one seed. Single-line droplets
/// have no double band and are traversable vacuously.
pub fn is_traversable(d: &Droplet, a: &SiteSet) -> Result<bool> {
    let sub = extract(a, d)?;
    let w = sub.width();
    let h = sub.height();
    if scans_by_rows(d) {
        for y in 0..h.saturating_sub(1) {
            if (0..w).all(|x| !sub.get(x, y) && !sub.get(x, y + 1)) {
                return Ok(false);
            }
        }
    } else {
        for x in 0..w.saturating_sub(1) {
            if (0..h).all(|y| !sub.get(x, y) && !sub.get(x + 1, y)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Simulates growth through the droplet with the boundary line on its near
/// side forced full: the row below a tall droplet, the column left of a wide
/// one. Quickly traversable means everything except the far line is infected
/// within `floor(quick_b * m / p)`, where `m = lg(d) - 1` matches the
/// canonical `(m-2) x (m+1)` shape.
pub fn is_quickly_traversable(d: &Droplet, a: &SiteSet, p: f64, quick_b: f64) -> Result<bool> {
    if !(p > 0.0) {
        return Err(Error::InvalidProbability(p));
    }
    let sub = extract(a, d)?;
    let w = sub.width();
    let h = sub.height();
    let m = d.lg().saturating_sub(1).max(1);
    let t = budget(quick_b, m, p);
    if scans_by_rows(d) {
        // Forced row below; far side is the top row.
        let padded_config = GridConfig::new(w, h + 1);
        let mut padded = SiteSet::empty(padded_config);
        for x in 0..w {
            padded.insert(x, 0);
        }
        padded.blit(&sub, 0, 1);
        let reached = padded.evolve_to(t);
        for y in 1..h {
            for x in 0..w {
                if !reached.get(x, y) {
                    return Ok(false);
                }
            }
        }
    } else {
        // Forced column to the left; far side is the rightmost column.
        let padded_config = GridConfig::new(w + 1, h);
        let mut padded = SiteSet::empty(padded_config);
        for y in 0..h {
            padded.insert(0, y);
        }
        padded.blit(&sub, 1, 0);
        let reached = padded.evolve_to(t);
        for y in 0..h {
            for x in 1..w {
                if !reached.get(x, y) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Every single row and every single column of the cell holds a seed.
pub fn is_row_traversable(d: &Droplet, a: &SiteSet) -> Result<bool> {
    if !d.is_square() {
        return Err(Error::Precondition(format!("{d} is not a cell")));
    }
    let sub = extract(a, d)?;
    let n = sub.width();
    for y in 0..n {
        if (0..n).all(|x| !sub.get(x, y)) {
            return Ok(false);
        }
    }
    for x in 0..n {
        if (0..n).all(|y| !sub.get(x, y)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lattice path moving `+1` in x or `+1` in y per step, through sites that
/// are NOT in `state`, starting at `origin`, visiting `length` sites.
///
/// Returns the witness whose site sequence is lexicographically least under
/// the usual `(x, y)` tuple order (so vertical moves are preferred), or
/// `None`. Reachability is established by dynamic programming before the
/// greedy walk, so a returned path always has the requested length.
pub fn find_upright_uninfected_path(
    state: &SiteSet,
    origin: (usize, usize),
    length: usize,
) -> Option<Vec<(usize, usize)>> {
    let w = state.width();
    let h = state.height();
    let (ox, oy) = origin;
    assert!(ox < w && oy < h, "origin outside grid");
    if length == 0 {
        return Some(Vec::new());
    }
    // reach[i](s): an uninfected up-right path of i+1 sites starts at s.
    let mut reach: Vec<Vec<bool>> = Vec::with_capacity(length);
    let open = |x: usize, y: usize| !state.get(x, y);
    let mut base = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            base[y * w + x] = open(x, y);
        }
    }
    reach.push(base);
    for i in 1..length {
        let prev = &reach[i - 1];
        let mut cur = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                if !open(x, y) {
                    continue;
                }
                let right = x + 1 < w && prev[y * w + x + 1];
                let up = y + 1 < h && prev[(y + 1) * w + x];
                cur[y * w + x] = right || up;
            }
        }
        reach.push(cur);
    }
    if !reach[length - 1][oy * w + ox] {
        return None;
    }
    let mut path = Vec::with_capacity(length);
    let (mut x, mut y) = (ox, oy);
    path.push((x, y));
    for remaining in (1..length).rev() {
        let layer = &reach[remaining - 1];
        // (x, y + 1) precedes (x + 1, y) in tuple order.
        if y + 1 < h && layer[(y + 1) * w + x] {
            y += 1;
        } else {
            debug_assert!(x + 1 < w && layer[y * w + x + 1]);
            x += 1;
        }
        path.push((x, y));
    }
    Some(path)
}
