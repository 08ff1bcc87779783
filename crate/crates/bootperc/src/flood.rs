//! Flood dynamics on droplets.
//!
//! The flood of a droplet starts from the closure of its own seeds together
//! with a fully infected virtual ring just outside its boundary, and runs
//! the bootstrap rule forward. The ring guarantees the droplet fills, so
//! every site has a finite flood time; the flood time of the droplet is the
//! largest of them. The ring is never materialized as grid sites, so flood
//! times compose with full-grid evolution without index shifts.

use crate::droplet::{extract, Droplet};
use crate::error::{Error, Result};
use crate::grid::{GridConfig, SiteSet, StepLimit};

#[derive(Debug, Clone)]
pub struct FloodResult {
    pub droplet: Droplet,
    /// Row-major local times, `width x height` of the droplet.
    times: Vec<u32>,
    /// `[[D]]_0`: the closure of the droplet's own seeds, in local coords.
    initial: SiteSet,
    /// Flood time of the droplet itself.
    pub total: u32,
}

impl FloodResult {
    #[inline]
    pub fn time_local(&self, x: usize, y: usize) -> u32 {
        self.times[y * self.droplet.width() as usize + x]
    }

    pub fn time_at(&self, x: i64, y: i64) -> Result<u32> {
        if !self.droplet.contains(x, y) {
            return Err(Error::SiteOutsideDroplet(x, y));
        }
        Ok(self.time_local((x - self.droplet.a) as usize, (y - self.droplet.b) as usize))
    }

    /// The `t`-flood as a local site set.
    pub fn flood_at(&self, t: u32) -> SiteSet {
        let w = self.droplet.width() as usize;
        let h = self.droplet.height() as usize;
        let mut out = SiteSet::empty(GridConfig::new(w, h));
        for y in 0..h {
            for x in 0..w {
                if self.time_local(x, y) <= t {
                    out.insert(x, y);
                }
            }
        }
        out
    }

    pub fn initial_closure(&self) -> &SiteSet {
        &self.initial
    }

    pub(crate) fn times(&self) -> &[u32] {
        &self.times
    }
}

/// Floods `d` from its own seeds plus the virtual boundary ring.
pub fn flood(d: &Droplet, a: &SiteSet) -> Result<FloodResult> {
    let sub = extract(a, d)?;
    flood_local(*d, &sub)
}

/// As [`flood`], over a site set that is already the droplet's local grid.
pub fn flood_local(d: Droplet, sub: &SiteSet) -> Result<FloodResult> {
    let w = d.width() as usize;
    let h = d.height() as usize;
    debug_assert_eq!((sub.width(), sub.height()), (w, h));
    // Close the seeds first: the flood's time-zero set is the closure of
    // the seeds, not the raw seeds.
    let initial = sub.evolve(StepLimit::Unbounded).closure;
    let padded_config = GridConfig::new(w + 2, h + 2);
    let mut padded = SiteSet::empty(padded_config);
    for x in 0..w + 2 {
        padded.insert(x, 0);
        padded.insert(x, h + 1);
    }
    for y in 0..h + 2 {
        padded.insert(0, y);
        padded.insert(w + 1, y);
    }
    padded.blit(&initial, 1, 1);
    let (ev, field) = padded.evolve_with_times(StepLimit::Unbounded);
    assert!(
        matches!(ev.outcome, crate::grid::EvolveOutcome::Percolated(_)),
        "the boundary ring must flood the droplet"
    );
    let mut times = vec![0u32; w * h];
    let mut total = 0;
    for y in 0..h {
        for x in 0..w {
            let t = field.time(x + 1, y + 1);
            times[y * w + x] = t;
            total = total.max(t);
        }
    }
    Ok(FloodResult { droplet: d, times, initial, total })
}

/// Width, height and wake membership of a site inside a droplet.
#[derive(Debug, Clone, Copy)]
pub struct SiteGeometry {
    pub x: i64,
    pub y: i64,
    pub droplet: Droplet,
    /// `min(c - x, x - a) + 1`.
    pub w: u64,
    /// `min(d - y, y - b) + 1`.
    pub h: u64,
}

impl SiteGeometry {
    /// The 45-degree pyramid below the site, apex included.
    pub fn in_down_wake(&self, sx: i64, sy: i64) -> bool {
        self.droplet.contains(sx, sy) && (sx - self.x).abs() + sy <= self.y
    }

    pub fn in_up_wake(&self, sx: i64, sy: i64) -> bool {
        self.droplet.contains(sx, sy) && (sx - self.x).abs() + self.y <= sy
    }

    pub fn in_left_wake(&self, sx: i64, sy: i64) -> bool {
        self.droplet.contains(sx, sy) && (sy - self.y).abs() + sx <= self.x
    }

    pub fn in_right_wake(&self, sx: i64, sy: i64) -> bool {
        self.droplet.contains(sx, sy) && (sy - self.y).abs() + self.x <= sx
    }
}

pub fn site_geometry(x: i64, y: i64, d: &Droplet) -> Result<SiteGeometry> {
    if !d.contains(x, y) {
        return Err(Error::SiteOutsideDroplet(x, y));
    }
    Ok(SiteGeometry {
        x,
        y,
        droplet: *d,
        w: ((d.c - x).min(x - d.a) + 1) as u64,
        h: ((d.d - y).min(y - d.b) + 1) as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SimParams;

    #[test]
    fn full_droplet_floods_at_zero() {
        let g = GridConfig::square(6);
        let d = Droplet::new(1, 1, 4, 4).unwrap();
        let mut a = SiteSet::empty(g);
        for y in 1..=4 {
            for x in 1..=4 {
                a.insert(x, y);
            }
        }
        let f = flood(&d, &a).unwrap();
        assert_eq!(f.total, 0);
        assert!(f.initial_closure().is_full());
    }

    #[test]
    fn empty_3x3_flood_pattern() {
        let g = GridConfig::square(5);
        let d = Droplet::new(1, 1, 3, 3).unwrap();
        let f = flood(&d, &SiteSet::empty(g)).unwrap();
        // Corners 1, edge centres 2, centre 3.
        assert_eq!(f.time_at(1, 1).unwrap(), 1);
        assert_eq!(f.time_at(3, 3).unwrap(), 1);
        assert_eq!(f.time_at(2, 1).unwrap(), 2);
        assert_eq!(f.time_at(1, 2).unwrap(), 2);
        assert_eq!(f.time_at(2, 2).unwrap(), 3);
        assert_eq!(f.total, 3);
    }

    #[test]
    fn empty_cell_flood_totals() {
        // Frozen from the reference simulation: odd sides flood in m steps,
        // even sides in m - 1 (every site of a 2x2 is a corner with two
        // ring neighbours), and the 1x1 cell floods in one step.
        let expected = [1u32, 1, 3, 3, 5, 5, 7, 7, 9, 9, 11, 11];
        for (i, &want) in expected.iter().enumerate() {
            let m = i + 1;
            let g = GridConfig::square(m);
            let d = Droplet::new(0, 0, m as i64 - 1, m as i64 - 1).unwrap();
            let f = flood(&d, &SiteSet::empty(g)).unwrap();
            assert_eq!(f.total, want, "m = {m}");
        }
    }

    #[test]
    fn flood_monotone_and_zero_set() {
        let g = GridConfig::new(30, 18);
        let a = SiteSet::sample(g, SimParams::new(0.1, 5, 2).unwrap());
        let d = Droplet::new(3, 2, 27, 15).unwrap();
        let f = flood(&d, &a).unwrap();
        for t in 0..f.total {
            assert!(f.flood_at(t).is_subset_of(&f.flood_at(t + 1)));
        }
        assert_eq!(&f.flood_at(0), f.initial_closure());
    }

    #[test]
    fn flood_containment_against_grid_evolution() {
        // A_t restricted to D is always inside the t-flood of D.
        for trial in 0..10u64 {
            let g = GridConfig::new(40, 30);
            let a = SiteSet::sample(g, SimParams::new(0.15, 44, trial).unwrap());
            let d = Droplet::new(5, 4, 30, 24).unwrap();
            let f = flood(&d, &a).unwrap();
            let (_, field) = a.evolve_with_times(StepLimit::Unbounded);
            for y in d.b..=d.d {
                for x in d.a..=d.c {
                    let grid_time = field.time(x as usize, y as usize);
                    let flood_time = f.time_at(x, y).unwrap();
                    assert!(
                        flood_time <= grid_time,
                        "site ({x}, {y}): flood {flood_time} > grid {grid_time}"
                    );
                }
            }
        }
    }

    #[test]
    fn wake_geometry_of_centre() {
        let d = Droplet::new(0, 0, 4, 4).unwrap();
        let geom = site_geometry(2, 2, &d).unwrap();
        assert_eq!((geom.w, geom.h), (3, 3));
        let corner = site_geometry(0, 0, &d).unwrap();
        assert_eq!((corner.w, corner.h), (1, 1));
        let down: usize = (0..5)
            .flat_map(|y| (0..5).map(move |x| (x, y)))
            .filter(|&(x, y)| geom.in_down_wake(x, y))
            .count();
        assert_eq!(down, 9);
        assert!(site_geometry(9, 2, &d).is_err());
    }

    #[test]
    fn one_wake_fills_at_positive_flood_times() {
        // Exhaustive over all sites of sampled droplets.
        for trial in 0..12u64 {
            let g = GridConfig::new(40, 40);
            let a = SiteSet::sample(g, SimParams::new(0.08, 21, trial).unwrap());
            let d = Droplet::new(2, 3, 36, 34).unwrap();
            let f = flood(&d, &a).unwrap();
            for y in d.b..=d.d {
                for x in d.a..=d.c {
                    let t = f.time_at(x, y).unwrap();
                    if t == 0 {
                        continue;
                    }
                    let geom = site_geometry(x, y, &d).unwrap();
                    let wake_filled = |pred: &dyn Fn(i64, i64) -> bool| {
                        (d.b..=d.d).all(|sy| {
                            (d.a..=d.c).all(|sx| !pred(sx, sy) || f.time_at(sx, sy).unwrap() <= t)
                        })
                    };
                    let any = wake_filled(&|sx, sy| geom.in_down_wake(sx, sy))
                        || wake_filled(&|sx, sy| geom.in_up_wake(sx, sy))
                        || wake_filled(&|sx, sy| geom.in_left_wake(sx, sy))
                        || wake_filled(&|sx, sy| geom.in_right_wake(sx, sy));
                    assert!(any, "no wake of ({x}, {y}) inside the {t}-flood (trial {trial})");
                }
            }
        }
    }
}
