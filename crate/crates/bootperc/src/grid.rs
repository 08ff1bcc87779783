//! Bit-parallel two-neighbour bootstrap percolation on finite rectangular
//! grids.
//!
//! Sites are packed row-major, 64 per machine word. One update sweep computes,
//! for every uninfected site, whether at least two of its (up to four) grid
//! neighbours are infected, using half-adder logic on whole words:
//! `at_least_two(a, b, c, d) = (a & b) | (c & d) | ((a ^ b) & (c ^ d))`.
//!
//! Grid edges are hard boundaries (no wraparound). Coordinates are 0-based;
//! the classical `[n]^2 = {1, ..., n}^2` convention maps onto ours by
//! subtracting one from each coordinate.

use crate::error::{Error, Result};
use crate::rng;

/// Grid dimensions in sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
}

impl GridConfig {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "grid dimensions must be positive");
        GridConfig { width, height }
    }

    pub fn square(n: usize) -> Self {
        GridConfig::new(n, n)
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub(crate) fn words_per_row(&self) -> usize {
        self.width.div_ceil(64)
    }

    #[inline]
    fn tail_mask(&self) -> u64 {
        let rem = self.width % 64;
        if rem == 0 {
            u64::MAX
        } else {
            (1u64 << rem) - 1
        }
    }

    #[inline]
    pub(crate) fn site_index(&self, x: usize, y: usize) -> u64 {
        (y * self.width + x) as u64
    }
}

/// Sampling parameters for one trial: occupancy probability and the stream
/// key. `(seed, trial_index)` determines the sampled configuration
/// bit-for-bit; `q` is always derived as `1 - p` in double precision.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SimParams {
    pub p: f64,
    pub seed: u64,
    pub trial_index: u64,
}

impl SimParams {
    pub fn new(p: f64, seed: u64, trial_index: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(SimParams { p, seed, trial_index })
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }
}

/// Bit-per-site occupancy mask. Padding bits beyond each row's width are kept
/// zero by every operation.
#[derive(Clone, PartialEq, Eq)]
pub struct SiteSet {
    config: GridConfig,
    words: Vec<u64>,
}

impl std::fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SiteSet({}x{}, {} occupied)",
            self.config.width,
            self.config.height,
            self.count()
        )
    }
}

/// Per-site infection times; `NEVER` marks sites that are never infected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfectionField {
    config: GridConfig,
    times: Vec<u32>,
}

pub const NEVER: u32 = u32::MAX;

impl InfectionField {
    pub fn config(&self) -> GridConfig {
        self.config
    }

    #[inline]
    pub fn time(&self, x: usize, y: usize) -> u32 {
        self.times[y * self.config.width + x]
    }

    /// The set `{x : time(x) <= t}`.
    pub fn infected_by(&self, t: u32) -> SiteSet {
        let mut out = SiteSet::empty(self.config);
        for y in 0..self.config.height {
            for x in 0..self.config.width {
                if self.time(x, y) <= t {
                    out.insert(x, y);
                }
            }
        }
        out
    }

    pub fn max_finite(&self) -> Option<u32> {
        self.times.iter().copied().filter(|&t| t != NEVER).max()
    }
}

/// Step budget for [`SiteSet::evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepLimit {
    Unbounded,
    AtMost(u32),
}

/// Terminal state of an evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveOutcome {
    /// The whole grid became infected; payload is the percolation time `T`.
    Percolated(u32),
    /// A fixed point short of the full grid was reached.
    NotPercolated,
    /// The step budget ran out before a fixed point.
    LimitReached(u32),
}

impl EvolveOutcome {
    pub fn time(&self) -> Option<u32> {
        match self {
            EvolveOutcome::Percolated(t) => Some(*t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub closure: SiteSet,
    pub outcome: EvolveOutcome,
    pub steps: u32,
}

/// Orientation of a 2-thick empty line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LineOrientation {
    /// A `2 x L` rectangle: two adjacent rows.
    Horizontal,
    /// An `L x 2` rectangle: two adjacent columns.
    Vertical,
}

/// Longest all-empty double line, with a witness position (the least `(x, y)`
/// corner of the rectangle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DoubleLine {
    pub length: usize,
    pub orientation: LineOrientation,
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DoubleLineScan {
    /// Longest empty double line anywhere in the grid.
    pub best: Option<DoubleLine>,
    /// Longest empty double line whose rectangle touches no grid edge.
    pub interior: Option<DoubleLine>,
}

impl SiteSet {
    pub fn empty(config: GridConfig) -> Self {
        SiteSet {
            config,
            words: vec![0; config.words_per_row() * config.height],
        }
    }

    pub fn full(config: GridConfig) -> Self {
        let mut s = SiteSet {
            config,
            words: vec![u64::MAX; config.words_per_row() * config.height],
        };
        s.clear_padding();
        s
    }

    /// Independent Bernoulli(`p`) occupancy from the deterministic stream
    /// keyed by `(seed, trial_index, site_index)`.
    pub fn sample(config: GridConfig, params: SimParams) -> Self {
        let mut s = SiteSet::empty(config);
        if params.p <= 0.0 {
            return s;
        }
        if params.p >= 1.0 {
            return SiteSet::full(config);
        }
        for y in 0..config.height {
            for x in 0..config.width {
                if rng::site_occupied(params.seed, params.trial_index, config.site_index(x, y), params.p) {
                    s.insert(x, y);
                }
            }
        }
        s
    }

    pub fn from_sites(config: GridConfig, sites: &[(usize, usize)]) -> Self {
        let mut s = SiteSet::empty(config);
        for &(x, y) in sites {
            s.insert(x, y);
        }
        s
    }

    pub fn config(&self) -> GridConfig {
        self.config
    }

    pub fn width(&self) -> usize {
        self.config.width
    }

    pub fn height(&self) -> usize {
        self.config.height
    }

    fn clear_padding(&mut self) {
        let wpr = self.config.words_per_row();
        let mask = self.config.tail_mask();
        for y in 0..self.config.height {
            self.words[y * wpr + wpr - 1] &= mask;
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.config.width && y < self.config.height);
        let wpr = self.config.words_per_row();
        self.words[y * wpr + x / 64] >> (x % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, x: usize, y: usize) {
        debug_assert!(x < self.config.width && y < self.config.height);
        let wpr = self.config.words_per_row();
        self.words[y * wpr + x / 64] |= 1u64 << (x % 64);
    }

    #[inline]
    pub fn remove(&mut self, x: usize, y: usize) {
        let wpr = self.config.words_per_row();
        self.words[y * wpr + x / 64] &= !(1u64 << (x % 64));
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty_set(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.config.area()
    }

    pub fn is_subset_of(&self, other: &SiteSet) -> bool {
        assert_eq!(self.config, other.config);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        assert_eq!(self.config, other.config);
        SiteSet {
            config: self.config,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn iter_sites(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let wpr = self.config.words_per_row();
        (0..self.config.height).flat_map(move |y| {
            (0..wpr).flat_map(move |wi| {
                let mut w = self.words[y * wpr + wi];
                std::iter::from_fn(move || {
                    if w == 0 {
                        return None;
                    }
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some((wi * 64 + bit, y))
                })
            })
        })
    }

    /// One synchronous sweep of the two-neighbour rule. The result contains
    /// the input; a site is added iff at least two of its grid neighbours
    /// are set in the input.
    pub fn step(&self) -> SiteSet {
        let mut out = self.clone();
        step_words(&self.config, &self.words, &mut out.words);
        out
    }

    /// Runs the process to its fixed point (or the step budget). Infection
    /// times are not tracked; see [`SiteSet::evolve_with_times`].
    pub fn evolve(&self, limit: StepLimit) -> Evolution {
        self.evolve_impl(limit, None).0
    }

    /// As [`SiteSet::evolve`], also recording per-site infection times.
    /// The 32-bit time field is allocated only on this path.
    pub fn evolve_with_times(&self, limit: StepLimit) -> (Evolution, InfectionField) {
        let (ev, field) = self.evolve_impl(limit, Some(InfectionField {
            config: self.config,
            times: vec![NEVER; self.config.area()],
        }));
        (ev, field.expect("times were requested"))
    }

    fn evolve_impl(&self, limit: StepLimit, mut field: Option<InfectionField>) -> (Evolution, Option<InfectionField>) {
        let config = self.config;
        let area = config.area();
        if let Some(f) = field.as_mut() {
            for (x, y) in self.iter_sites() {
                f.times[y * config.width + x] = 0;
            }
        }
        let mut cur = self.words.clone();
        let mut next = vec![0u64; cur.len()];
        let mut count = self.count();
        let mut t: u32 = 0;
        if count == area {
            return (
                Evolution { closure: SiteSet { config, words: cur }, outcome: EvolveOutcome::Percolated(0), steps: 0 },
                field,
            );
        }
        let max_steps = match limit {
            StepLimit::Unbounded => u32::MAX,
            StepLimit::AtMost(m) => m,
        };
        loop {
            if t >= max_steps {
                return (
                    Evolution { closure: SiteSet { config, words: cur }, outcome: EvolveOutcome::LimitReached(t), steps: t },
                    field,
                );
            }
            next.copy_from_slice(&cur);
            step_words(&config, &cur, &mut next);
            t += 1;
            let mut added = 0usize;
            let wpr = config.words_per_row();
            for i in 0..cur.len() {
                let diff = next[i] & !cur[i];
                if diff != 0 {
                    added += diff.count_ones() as usize;
                    if let Some(f) = field.as_mut() {
                        let y = i / wpr;
                        let base = (i % wpr) * 64;
                        let mut d = diff;
                        while d != 0 {
                            let bit = d.trailing_zeros() as usize;
                            d &= d - 1;
                            f.times[y * config.width + base + bit] = t;
                        }
                    }
                }
            }
            if added == 0 {
                return (
                    Evolution { closure: SiteSet { config, words: cur }, outcome: EvolveOutcome::NotPercolated, steps: t - 1 },
                    field,
                );
            }
            std::mem::swap(&mut cur, &mut next);
            count += added;
            if count == area {
                return (
                    Evolution { closure: SiteSet { config, words: cur }, outcome: EvolveOutcome::Percolated(t), steps: t },
                    field,
                );
            }
            // Each productive sweep infects at least one site.
            assert!(t as usize <= area, "evolution exceeded the area bound");
        }
    }

    /// The infected set after exactly `t` steps (stops early at a fixed
    /// point, which no further step can change).
    pub fn evolve_to(&self, t: u32) -> SiteSet {
        self.evolve(StepLimit::AtMost(t)).closure
    }

    /// Scans for the longest all-empty `2 x L` / `L x 2` rectangle, both
    /// anywhere in the grid and restricted to rectangles that avoid every
    /// grid edge.
    pub fn longest_empty_double_line(&self) -> DoubleLineScan {
        let mut scan = DoubleLineScan::default();
        let w = self.config.width;
        let h = self.config.height;
        let wpr = self.config.words_per_row();
        // Horizontal: adjacent row pairs (y, y + 1).
        let mut free_row = vec![0u64; wpr];
        for y in 0..h.saturating_sub(1) {
            let tail = self.config.tail_mask();
            for i in 0..wpr {
                let mask = if i + 1 == wpr { tail } else { u64::MAX };
                free_row[i] = !(self.words[y * wpr + i] | self.words[(y + 1) * wpr + i]) & mask;
            }
            let interior_rows = y >= 1 && y + 2 <= h - 1;
            scan_runs(&free_row, w, |start, len| {
                take_best(&mut scan.best, len, LineOrientation::Horizontal, start, y);
                if interior_rows {
                    let s = start.max(1);
                    let e = (start + len - 1).min(w.saturating_sub(2));
                    if e >= s {
                        take_best(&mut scan.interior, e - s + 1, LineOrientation::Horizontal, s, y);
                    }
                }
            });
        }
        // Vertical: adjacent column pairs, tracked with per-column run
        // counters over a row sweep.
        if w >= 2 {
            let mut run = vec![0u32; w - 1];
            for y in 0..h {
                for x in 0..w - 1 {
                    if !self.get(x, y) && !self.get(x + 1, y) {
                        run[x] += 1;
                        let len = run[x] as usize;
                        let start_y = y + 1 - len;
                        take_best(&mut scan.best, len, LineOrientation::Vertical, x, start_y);
                        if x >= 1 && x + 2 <= w - 1 {
                            let s = start_y.max(1);
                            let e = y.min(h.saturating_sub(2));
                            if e >= s {
                                take_best(&mut scan.interior, e - s + 1, LineOrientation::Vertical, x, s);
                            }
                        }
                    } else {
                        run[x] = 0;
                    }
                }
            }
        }
        scan
    }

    /// Copies the rectangle `[x0, x0 + w) x [y0, y0 + h)` into a fresh grid
    /// of dimensions `w x h`.
    pub fn extract_rect(&self, x0: usize, y0: usize, w: usize, h: usize) -> SiteSet {
        assert!(w >= 1 && h >= 1 && x0 + w <= self.config.width && y0 + h <= self.config.height);
        let out_config = GridConfig::new(w, h);
        let mut out = SiteSet::empty(out_config);
        let src_wpr = self.config.words_per_row();
        let dst_wpr = out_config.words_per_row();
        let shift = x0 % 64;
        let word0 = x0 / 64;
        for y in 0..h {
            let src_row = &self.words[(y0 + y) * src_wpr..(y0 + y + 1) * src_wpr];
            for dw in 0..dst_wpr {
                let si = word0 + dw;
                let lo = src_row.get(si).copied().unwrap_or(0) >> shift;
                let hi = if shift == 0 {
                    0
                } else {
                    src_row.get(si + 1).copied().unwrap_or(0) << (64 - shift)
                };
                out.words[y * dst_wpr + dw] = lo | hi;
            }
        }
        out.clear_padding();
        out
    }

    /// Writes `src` into this grid with its origin at `(x0, y0)`.
    pub fn blit(&mut self, src: &SiteSet, x0: usize, y0: usize) {
        assert!(x0 + src.width() <= self.config.width && y0 + src.height() <= self.config.height);
        for (x, y) in src.iter_sites() {
            self.insert(x0 + x, y0 + y);
        }
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

fn take_best(slot: &mut Option<DoubleLine>, length: usize, orientation: LineOrientation, x: usize, y: usize) {
    let better = match slot {
        None => true,
        Some(cur) => length > cur.length,
    };
    if better {
        *slot = Some(DoubleLine { length, orientation, x, y });
    }
}

/// Calls `f(start, len)` for every maximal run of set bits in a packed row.
/// Padding bits past `width` must be zero.
fn scan_runs(words: &[u64], width: usize, mut f: impl FnMut(usize, usize)) {
    let mut run_start = None::<usize>;
    for (wi, &word) in words.iter().enumerate() {
        let base = wi * 64;
        let mut w = word;
        let mut offset = 0usize;
        while offset < 64 {
            if w == 0 {
                if let Some(s) = run_start.take() {
                    f(s, base + offset - s);
                }
                break;
            }
            let zeros = w.trailing_zeros() as usize;
            if zeros > 0 {
                if let Some(s) = run_start.take() {
                    f(s, base + offset - s);
                }
                w >>= zeros;
                offset += zeros;
                continue;
            }
            if run_start.is_none() {
                run_start = Some(base + offset);
            }
            let ones = w.trailing_ones() as usize;
            if ones >= 64 - offset {
                break;
            }
            w >>= ones;
            offset += ones;
        }
    }
    if let Some(s) = run_start {
        f(s, width - s);
    }
}

/// One synchronous sweep over packed words: `out |= at_least_two(neighbours)`.
fn step_words(config: &GridConfig, cur: &[u64], out: &mut [u64]) {
    let wpr = config.words_per_row();
    let h = config.height;
    let tail = config.tail_mask();
    for y in 0..h {
        let row = &cur[y * wpr..(y + 1) * wpr];
        for i in 0..wpr {
            let up = if y > 0 { cur[(y - 1) * wpr + i] } else { 0 };
            let down = if y + 1 < h { cur[(y + 1) * wpr + i] } else { 0 };
            let w = row[i];
            let carry_left = if i > 0 { row[i - 1] >> 63 } else { 0 };
            let carry_right = if i + 1 < wpr { row[i + 1] << 63 } else { 0 };
            let left = (w << 1) | carry_left;
            let right = (w >> 1) | carry_right;
            let two = (up & down) | (left & right) | ((up ^ down) & (left ^ right));
            let mask = if i + 1 == wpr { tail } else { u64::MAX };
            out[y * wpr + i] |= two & mask;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent reference sweep, set-based; deliberately naive.
    pub(crate) fn oracle_step(sites: &std::collections::HashSet<(i64, i64)>, w: i64, h: i64) -> std::collections::HashSet<(i64, i64)> {
        let mut out = sites.clone();
        for x in 0..w {
            for y in 0..h {
                if sites.contains(&(x, y)) {
                    continue;
                }
                let n = [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]
                    .iter()
                    .filter(|s| sites.contains(*s))
                    .count();
                if n >= 2 {
                    out.insert((x, y));
                }
            }
        }
        out
    }

    fn to_set(s: &SiteSet) -> std::collections::HashSet<(i64, i64)> {
        s.iter_sites().map(|(x, y)| (x as i64, y as i64)).collect()
    }

    #[test]
    fn forced_step_on_3x3() {
        let g = GridConfig::square(3);
        let a = SiteSet::from_sites(g, &[(0, 1), (1, 0)]);
        let b = a.step();
        assert!(b.get(0, 0) && b.get(1, 1));
        assert_eq!(b.count(), 4);
    }

    #[test]
    fn full_grid_is_fixed() {
        let g = GridConfig::new(5, 4);
        let f = SiteSet::full(g);
        assert_eq!(f.step(), f);
        assert_eq!(f.evolve(StepLimit::Unbounded).outcome, EvolveOutcome::Percolated(0));
    }

    #[test]
    fn single_site_is_fixed() {
        let g = GridConfig::square(4);
        let a = SiteSet::from_sites(g, &[(2, 1)]);
        assert_eq!(a.step(), a);
        let ev = a.evolve(StepLimit::Unbounded);
        assert_eq!(ev.outcome, EvolveOutcome::NotPercolated);
        assert_eq!(ev.closure, a);
    }

    #[test]
    fn empty_grid_never_percolates() {
        let g = GridConfig::square(3);
        let ev = SiteSet::empty(g).evolve(StepLimit::Unbounded);
        assert_eq!(ev.outcome, EvolveOutcome::NotPercolated);
        assert!(ev.closure.is_empty_set());
    }

    #[test]
    fn diagonal_percolates_in_n_minus_1() {
        // Cross-checked against the set-based oracle for every n.
        for n in 1..=10usize {
            let g = GridConfig::square(n);
            let diag: Vec<_> = (0..n).map(|i| (i, i)).collect();
            let a = SiteSet::from_sites(g, &diag);

            let mut oracle: std::collections::HashSet<(i64, i64)> =
                diag.iter().map(|&(x, y)| (x as i64, y as i64)).collect();
            let mut cur = a.clone();
            let mut t = 0u32;
            loop {
                let next_oracle = oracle_step(&oracle, n as i64, n as i64);
                let next = cur.step();
                assert_eq!(to_set(&next), next_oracle, "n = {n}, t = {t}");
                if next == cur {
                    break;
                }
                oracle = next_oracle;
                cur = next;
                t += 1;
            }
            let ev = a.evolve(StepLimit::Unbounded);
            assert_eq!(ev.outcome, EvolveOutcome::Percolated((n - 1) as u32), "n = {n}");
            let _ = t;
        }
    }

    #[test]
    fn diagonal_band_after_two_steps() {
        let g = GridConfig::square(5);
        let a = SiteSet::from_sites(g, &(0..5).map(|i| (i, i)).collect::<Vec<_>>());
        let a2 = a.evolve_to(2);
        for x in 0..5i64 {
            for y in 0..5i64 {
                assert_eq!(a2.get(x as usize, y as usize), (x - y).abs() <= 2, "({x},{y})");
            }
        }
    }

    #[test]
    fn evolve_to_zero_is_identity_and_composes() {
        let g = GridConfig::new(17, 9);
        let a = SiteSet::sample(g, SimParams::new(0.2, 5, 0).unwrap());
        assert_eq!(a.evolve_to(0), a);
        assert_eq!(a.evolve_to(2).evolve_to(3), a.evolve_to(5));
        let full = SiteSet::full(g);
        assert_eq!(full.evolve_to(7), full);
    }

    #[test]
    fn sample_edge_probabilities() {
        let g = GridConfig::square(8);
        assert!(SiteSet::sample(g, SimParams::new(0.0, 1, 0).unwrap()).is_empty_set());
        assert!(SiteSet::sample(g, SimParams::new(1.0, 1, 0).unwrap()).is_full());
        assert!(SimParams::new(1.5, 0, 0).is_err());
        assert!(SimParams::new(-0.1, 0, 0).is_err());
    }

    #[test]
    fn sample_count_within_exact_binomial_interval() {
        // Central 99.99% interval of Bin(4096, 1/2), recomputed here from the
        // exact CDF with big-integer arithmetic and frozen below.
        let (lo, hi) = binomial_central_9999(4096);
        assert_eq!((lo, hi), (1924, 2172));
        let g = GridConfig::square(64);
        let a = SiteSet::sample(g, SimParams::new(0.5, 0xB00F, 0).unwrap());
        let c = a.count();
        assert!((lo..=hi).contains(&c), "count {c} outside [{lo}, {hi}]");
    }

    /// Equal-tail central 99.99% interval of Bin(n, 1/2) from the exact CDF.
    fn binomial_central_9999(n: usize) -> (usize, usize) {
        // Work with scaled big integers: CDF(x) * 2^n = sum of C(n, k).
        // alpha/2 = 2^n / 20000.
        let mut binom = vec![num_one()];
        for _ in 0..n {
            let mut next = vec![num_one()];
            for i in 1..binom.len() {
                next.push(num_add(&binom[i - 1], &binom[i]));
            }
            next.push(num_one());
            binom = next;
        }
        let total = binom.iter().fold(vec![0u32], |acc, b| num_add(&acc, b));
        let threshold = num_div_u32(&total, 20000); // floor(2^n / alpha^-1)
        let mut cum = vec![0u32];
        let mut lo = None;
        let mut hi = None;
        let upper = num_sub(&total, &threshold);
        for (x, b) in binom.iter().enumerate() {
            cum = num_add(&cum, b);
            if lo.is_none() && num_gt(&cum, &threshold) {
                lo = Some(x);
            }
            if hi.is_none() && !num_lt(&cum, &upper) {
                hi = Some(x);
                break;
            }
        }
        (lo.unwrap(), hi.unwrap())
    }

    // Minimal little-endian base-2^32 bignum helpers for the oracle above.
    fn num_one() -> Vec<u32> {
        vec![1]
    }
    fn num_add(a: &[u32], b: &[u32]) -> Vec<u32> {
        let mut out = Vec::with_capacity(a.len().max(b.len()) + 1);
        let mut carry = 0u64;
        for i in 0..a.len().max(b.len()) {
            let s = carry
                + u64::from(a.get(i).copied().unwrap_or(0))
                + u64::from(b.get(i).copied().unwrap_or(0));
            out.push(s as u32);
            carry = s >> 32;
        }
        if carry > 0 {
            out.push(carry as u32);
        }
        out
    }
    fn num_sub(a: &[u32], b: &[u32]) -> Vec<u32> {
        let mut out = Vec::with_capacity(a.len());
        let mut borrow = 0i64;
        for i in 0..a.len() {
            let mut d = i64::from(a[i]) - i64::from(b.get(i).copied().unwrap_or(0)) - borrow;
            borrow = 0;
            if d < 0 {
                d += 1 << 32;
                borrow = 1;
            }
            out.push(d as u32);
        }
        assert_eq!(borrow, 0);
        while out.len() > 1 && *out.last().unwrap() == 0 {
            out.pop();
        }
        out
    }
    fn num_div_u32(a: &[u32], d: u32) -> Vec<u32> {
        let mut out = vec![0u32; a.len()];
        let mut rem = 0u64;
        for i in (0..a.len()).rev() {
            let cur = (rem << 32) | u64::from(a[i]);
            out[i] = (cur / u64::from(d)) as u32;
            rem = cur % u64::from(d);
        }
        while out.len() > 1 && *out.last().unwrap() == 0 {
            out.pop();
        }
        out
    }
    fn num_cmp(a: &[u32], b: &[u32]) -> std::cmp::Ordering {
        let la = a.iter().rposition(|&w| w != 0).map_or(0, |i| i + 1);
        let lb = b.iter().rposition(|&w| w != 0).map_or(0, |i| i + 1);
        if la != lb {
            return la.cmp(&lb);
        }
        for i in (0..la).rev() {
            if a[i] != b[i] {
                return a[i].cmp(&b[i]);
            }
        }
        std::cmp::Ordering::Equal
    }
    fn num_gt(a: &[u32], b: &[u32]) -> bool {
        num_cmp(a, b) == std::cmp::Ordering::Greater
    }
    fn num_lt(a: &[u32], b: &[u32]) -> bool {
        num_cmp(a, b) == std::cmp::Ordering::Less
    }

    #[test]
    fn determinism_across_runs() {
        let g = GridConfig::new(40, 25);
        let p = SimParams::new(0.3, 123, 7).unwrap();
        let a = SiteSet::sample(g, p);
        let b = SiteSet::sample(g, p);
        assert_eq!(a, b);
        let (ev_a, f_a) = a.evolve_with_times(StepLimit::Unbounded);
        let (ev_b, f_b) = b.evolve_with_times(StepLimit::Unbounded);
        assert_eq!(ev_a.closure, ev_b.closure);
        assert_eq!(f_a, f_b);
    }

    #[test]
    fn infection_field_matches_evolve_to() {
        for trial in 0..8u64 {
            let g = GridConfig::new(32, 32);
            let a = SiteSet::sample(g, SimParams::new(0.12, 99, trial).unwrap());
            let (ev, field) = a.evolve_with_times(StepLimit::Unbounded);
            let t_max = field.max_finite().unwrap_or(0);
            for t in 0..=t_max {
                assert_eq!(field.infected_by(t), a.evolve_to(t), "trial {trial}, t = {t}");
            }
            assert_eq!(field.infected_by(t_max), ev.closure);
        }
    }

    #[test]
    fn closure_is_fixed_point() {
        for trial in 0..10u64 {
            let g = GridConfig::new(48, 20);
            let a = SiteSet::sample(g, SimParams::new(0.15, 3, trial).unwrap());
            let closure = a.evolve(StepLimit::Unbounded).closure;
            assert_eq!(closure.step(), closure);
        }
    }

    #[test]
    fn step_limit_reported() {
        let g = GridConfig::square(12);
        let diag: Vec<_> = (0..12).map(|i| (i, i)).collect();
        let a = SiteSet::from_sites(g, &diag);
        let ev = a.evolve(StepLimit::AtMost(3));
        assert_eq!(ev.outcome, EvolveOutcome::LimitReached(3));
        assert_eq!(ev.closure, a.evolve_to(3));
    }

    #[test]
    fn double_line_on_empty_and_full() {
        let g = GridConfig::square(10);
        let scan = SiteSet::empty(g).longest_empty_double_line();
        assert_eq!(scan.best.unwrap().length, 10);
        assert!(SiteSet::full(g).longest_empty_double_line().best.is_none());
    }

    #[test]
    fn double_line_constructed_case() {
        // Everything occupied except rows 3 and 4.
        let g = GridConfig::square(10);
        let mut a = SiteSet::full(g);
        for x in 0..10 {
            a.remove(x, 3);
            a.remove(x, 4);
        }
        let best = a.longest_empty_double_line().best.unwrap();
        assert_eq!(best.length, 10);
        assert_eq!(best.orientation, LineOrientation::Horizontal);
        assert_eq!(best.y, 3);
        // The interior-only scan must clip to columns 1..=8.
        let interior = a.longest_empty_double_line().interior.unwrap();
        assert_eq!(interior.length, 8);
        assert_eq!((interior.x, interior.y), (1, 3));
    }

    #[test]
    fn double_line_vertical_case() {
        let g = GridConfig::new(9, 6);
        let mut a = SiteSet::full(g);
        for y in 0..6 {
            a.remove(4, y);
            a.remove(5, y);
        }
        let best = a.longest_empty_double_line().best.unwrap();
        assert_eq!(best.length, 6);
        assert_eq!(best.orientation, LineOrientation::Vertical);
        assert_eq!(best.x, 4);
    }

    #[test]
    fn wide_grid_cross_word_neighbours() {
        // A pair straddling a word boundary must still infect between them.
        let g = GridConfig::new(130, 3);
        let a = SiteSet::from_sites(g, &[(63, 1), (64, 0), (64, 2)]);
        let b = a.step();
        assert!(b.get(64, 1));
        // And the oracle agrees on the whole sweep.
        let oracle = oracle_step(&a.iter_sites().map(|(x, y)| (x as i64, y as i64)).collect(), 130, 3);
        assert_eq!(to_set(&b), oracle);
    }

    #[test]
    fn random_sweeps_match_oracle() {
        for trial in 0..12u64 {
            let g = GridConfig::new(70, 23);
            let a = SiteSet::sample(g, SimParams::new(0.18, 42, trial).unwrap());
            let got = a.step();
            let want = oracle_step(&a.iter_sites().map(|(x, y)| (x as i64, y as i64)).collect(), 70, 23);
            assert_eq!(to_set(&got), want, "trial {trial}");
        }
    }

    #[test]
    fn monotone_in_initial_set() {
        for trial in 0..10u64 {
            let g = GridConfig::new(30, 30);
            let big = SiteSet::sample(g, SimParams::new(0.25, 17, trial).unwrap());
            // Thin deterministically to get a subset.
            let mut small = big.clone();
            for (i, (x, y)) in big.iter_sites().collect::<Vec<_>>().into_iter().enumerate() {
                if i % 3 == 0 {
                    small.remove(x, y);
                }
            }
            for t in [0u32, 1, 2, 5, 30] {
                assert!(small.evolve_to(t).is_subset_of(&big.evolve_to(t)), "trial {trial}, t {t}");
            }
        }
    }
}
