//! Droplet geometry and the rectangles process.
//!
//! A droplet `[(a, b), (c, d)]` is the set of sites `(x, y)` with
//! `a <= x <= c` and `b <= y <= d`. The rectangles process grows initially
//! occupied sites into rectangles by repeatedly replacing any two droplets
//! within l1 distance 2 of each other by the smallest droplet containing
//! both; the union of the surviving rectangles is exactly the bootstrap
//! closure of the seed set. We record every intermediate rectangle in a
//! [`MergeTrace`] so that scale information (which the closure alone does
//! not retain) stays available.
//!
//! Merge order is fixed: the active droplet with the least `(b, a, d, c)`
//! key is examined first and merges with its least-key partner, so traces
//! are reproducible run to run.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{SiteSet, StepLimit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Droplet {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl std::fmt::Display for Droplet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[({}, {}), ({}, {})]", self.a, self.b, self.c, self.d)
    }
}

impl Droplet {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a > c || b > d {
            return Err(Error::InvalidDroplet(a, b, c, d));
        }
        Ok(Droplet { a, b, c, d })
    }

    pub fn site(x: i64, y: i64) -> Self {
        Droplet { a: x, b: y, c: x, d: y }
    }

    /// Square droplet with side `m` and bottom-left corner `(a, b)`.
    pub fn cell(a: i64, b: i64, m: i64) -> Self {
        assert!(m >= 1);
        Droplet { a, b, c: a + m - 1, d: b + m - 1 }
    }

    pub fn width(&self) -> u64 {
        (self.c - self.a + 1) as u64
    }

    pub fn height(&self) -> u64 {
        (self.d - self.b + 1) as u64
    }

    pub fn dims(&self) -> (u64, u64) {
        (self.width(), self.height())
    }

    /// Long side length.
    pub fn lg(&self) -> u64 {
        self.width().max(self.height())
    }

    /// Short side length.
    pub fn sh(&self) -> u64 {
        self.width().min(self.height())
    }

    /// Semi-perimeter `lg + sh`.
    pub fn phi(&self) -> u64 {
        self.width() + self.height()
    }

    pub fn area(&self) -> u64 {
        self.width() * self.height()
    }

    pub fn is_square(&self) -> bool {
        self.width() == self.height()
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.a <= x && x <= self.c && self.b <= y && y <= self.d
    }

    pub fn contains_droplet(&self, other: &Droplet) -> bool {
        self.a <= other.a && other.c <= self.c && self.b <= other.b && other.d <= self.d
    }

    pub fn intersects(&self, other: &Droplet) -> bool {
        self.a <= other.c && other.a <= self.c && self.b <= other.d && other.b <= self.d
    }

    /// Smallest droplet containing both.
    pub fn bounding(&self, other: &Droplet) -> Droplet {
        Droplet {
            a: self.a.min(other.a),
            b: self.b.min(other.b),
            c: self.c.max(other.c),
            d: self.d.max(other.d),
        }
    }

    /// l1 distance between the site sets (0 when they intersect).
    pub fn l1_distance(&self, other: &Droplet) -> u64 {
        let dx = (other.a - self.c).max(self.a - other.c).max(0) as u64;
        let dy = (other.b - self.d).max(self.b - other.d).max(0) as u64;
        dx + dy
    }

    /// `[(a+1, b+1), (c-1, d-1)]` when both dimensions are at least 3.
    pub fn interior(&self) -> Option<Droplet> {
        if self.width() >= 3 && self.height() >= 3 {
            Some(Droplet { a: self.a + 1, b: self.b + 1, c: self.c - 1, d: self.d - 1 })
        } else {
            None
        }
    }

    /// The four one-thick edge strips.
    pub fn edges(&self) -> DropletEdges {
        DropletEdges {
            left: Droplet { a: self.a, b: self.b, c: self.a, d: self.d },
            right: Droplet { a: self.c, b: self.b, c: self.c, d: self.d },
            bottom: Droplet { a: self.a, b: self.b, c: self.c, d: self.b },
            top: Droplet { a: self.a, b: self.d, c: self.c, d: self.d },
        }
    }

    /// The `2 x (m - 2)` strips flanking each edge of an `m`-cell. Not
    /// applicable to non-square droplets or cells with `m < 3`.
    pub fn buffers(&self) -> Option<DropletBuffers> {
        if !self.is_square() || self.width() < 3 {
            return None;
        }
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        Some(DropletBuffers {
            left: Droplet { a: a - 1, b: b + 1, c: a, d: d - 1 },
            right: Droplet { a: c, b: b + 1, c: c + 1, d: d - 1 },
            bottom: Droplet { a: a + 1, b: b - 1, c: c - 1, d: b },
            top: Droplet { a: a + 1, b: d, c: c - 1, d: d + 1 },
        })
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Droplet {
        Droplet { a: self.a + dx, b: self.b + dy, c: self.c + dx, d: self.d + dy }
    }

    /// Vertical reflection inside a parent of height `h` anchored at `b0`.
    pub(crate) fn mirror_y(&self, b0: i64, h: i64) -> Droplet {
        Droplet {
            a: self.a,
            b: b0 + (h - 1) - (self.d - b0),
            c: self.c,
            d: b0 + (h - 1) - (self.b - b0),
        }
    }

    fn key(&self) -> (i64, i64, i64, i64) {
        (self.b, self.a, self.d, self.c)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DropletEdges {
    pub left: Droplet,
    pub right: Droplet,
    pub top: Droplet,
    pub bottom: Droplet,
}

#[derive(Debug, Clone, Copy)]
pub struct DropletBuffers {
    pub left: Droplet,
    pub right: Droplet,
    pub top: Droplet,
    pub bottom: Droplet,
}

/// One rectangle produced by the process: a seed site (no parents) or the
/// bounding box of two merged predecessors.
#[derive(Debug, Clone, Copy)]
pub struct TraceNode {
    pub droplet: Droplet,
    pub parents: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct MergeTrace {
    pub nodes: Vec<TraceNode>,
    pub finals: Vec<usize>,
}

impl MergeTrace {
    pub fn final_droplets(&self) -> impl Iterator<Item = &Droplet> + '_ {
        self.finals.iter().map(|&i| &self.nodes[i].droplet)
    }

    /// The closure as a site set over the given grid dimensions.
    pub fn union_of_finals(&self, width: usize, height: usize) -> SiteSet {
        let mut out = SiteSet::empty(crate::grid::GridConfig::new(width, height));
        for droplet in self.final_droplets() {
            for y in droplet.b..=droplet.d {
                for x in droplet.a..=droplet.c {
                    if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
                        out.insert(x as usize, y as usize);
                    }
                }
            }
        }
        out
    }

    /// Line-oriented export: `id a b c d parent1 parent2`, with `-1` for
    /// the parents of a seed.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let (p1, p2) = match node.parents {
                Some((p1, p2)) => (p1 as i64, p2 as i64),
                None => (-1, -1),
            };
            let droplet = node.droplet;
            out.push_str(&format!(
                "{} {} {} {} {} {} {}\n",
                i, droplet.a, droplet.b, droplet.c, droplet.d, p1, p2
            ));
        }
        out
    }
}

const BUCKET: i64 = 16;

struct Buckets {
    x0: i64,
    y0: i64,
    bw: i64,
    bh: i64,
    lists: Vec<Vec<u32>>,
}

impl Buckets {
    fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        let bw = (x1 - x0) / BUCKET + 1;
        let bh = (y1 - y0) / BUCKET + 1;
        Buckets { x0, y0, bw, bh, lists: vec![Vec::new(); (bw * bh) as usize] }
    }

    fn range(&self, droplet: &Droplet, inflate: i64) -> (i64, i64, i64, i64) {
        let bx0 = (((droplet.a - inflate) - self.x0).max(0)) / BUCKET;
        let by0 = (((droplet.b - inflate) - self.y0).max(0)) / BUCKET;
        let bx1 = (((droplet.c + inflate) - self.x0).min((self.bw - 1) * BUCKET)) / BUCKET;
        let by1 = (((droplet.d + inflate) - self.y0).min((self.bh - 1) * BUCKET)) / BUCKET;
        (bx0, by0, bx1.min(self.bw - 1), by1.min(self.bh - 1))
    }

    fn insert(&mut self, id: u32, droplet: &Droplet) {
        let (bx0, by0, bx1, by1) = self.range(droplet, 0);
        for by in by0..=by1 {
            for bx in bx0..=bx1 {
                self.lists[(by * self.bw + bx) as usize].push(id);
            }
        }
    }
}

/// Runs the rectangles process over the given seed sites.
fn merge_process(seeds: impl Iterator<Item = (i64, i64)>) -> MergeTrace {
    let mut nodes: Vec<TraceNode> = seeds
        .map(|(x, y)| TraceNode { droplet: Droplet::site(x, y), parents: None })
        .collect();
    if nodes.is_empty() {
        return MergeTrace { nodes, finals: Vec::new() };
    }
    let x0 = nodes.iter().map(|n| n.droplet.a).min().unwrap();
    let y0 = nodes.iter().map(|n| n.droplet.b).min().unwrap();
    let x1 = nodes.iter().map(|n| n.droplet.c).max().unwrap();
    let y1 = nodes.iter().map(|n| n.droplet.d).max().unwrap();
    let mut buckets = Buckets::new(x0, y0, x1, y1);
    let mut active = vec![true; nodes.len()];
    let mut seen: Vec<u32> = vec![0; nodes.len()];
    let mut generation: u32 = 0;
    let mut heap: BinaryHeap<Reverse<((i64, i64, i64, i64), u32)>> = BinaryHeap::new();
    for (i, node) in nodes.iter().enumerate() {
        buckets.insert(i as u32, &node.droplet);
        heap.push(Reverse((node.droplet.key(), i as u32)));
    }

    while let Some(Reverse((_, id))) = heap.pop() {
        if !active[id as usize] {
            continue;
        }
        let droplet = nodes[id as usize].droplet;
        // Least-key active partner within l1 distance 2.
        generation += 1;
        let mut best: Option<((i64, i64, i64, i64), u32)> = None;
        let (bx0, by0, bx1, by1) = buckets.range(&droplet, 2);
        for by in by0..=by1 {
            for bx in bx0..=bx1 {
                for &cand in &buckets.lists[(by * buckets.bw + bx) as usize] {
                    if cand == id || !active[cand as usize] || seen[cand as usize] == generation {
                        continue;
                    }
                    seen[cand as usize] = generation;
                    let other = nodes[cand as usize].droplet;
                    if droplet.l1_distance(&other) <= 2 {
                        let key = (other.key(), cand);
                        if best.map_or(true, |b| key < b) {
                            best = Some(key);
                        }
                    }
                }
            }
        }
        if let Some((_, partner)) = best {
            active[id as usize] = false;
            active[partner as usize] = false;
            let merged = droplet.bounding(&nodes[partner as usize].droplet);
            let new_id = nodes.len();
            let (p1, p2) = if nodes[id as usize].droplet.key() <= nodes[partner as usize].droplet.key() {
                (id as usize, partner as usize)
            } else {
                (partner as usize, id as usize)
            };
            nodes.push(TraceNode { droplet: merged, parents: Some((p1, p2)) });
            active.push(true);
            seen.push(0);
            buckets.insert(new_id as u32, &merged);
            heap.push(Reverse((merged.key(), new_id as u32)));
        }
        // With no partner the droplet rests; a later droplet that lands
        // nearby will pick it up through its own examination.
    }

    let mut finals: Vec<usize> =
        (0..nodes.len()).filter(|&i| active[i]).collect();
    finals.sort_by_key(|&i| (nodes[i].droplet.key(), i));
    MergeTrace { nodes, finals }
}

pub fn rectangles_process(a: &SiteSet) -> MergeTrace {
    merge_process(a.iter_sites().map(|(x, y)| (x as i64, y as i64)))
}

/// Rectangles process restricted to the seeds inside `x`, in global
/// coordinates.
pub fn rectangles_process_in(a: &SiteSet, x: &Droplet) -> MergeTrace {
    merge_process(
        a.iter_sites()
            .map(|(sx, sy)| (sx as i64, sy as i64))
            .filter(|&(sx, sy)| x.contains(sx, sy)),
    )
}

/// Copies the sites of `a` inside `d` into a fresh `dims(d)` grid.
pub fn extract(a: &SiteSet, d: &Droplet) -> Result<SiteSet> {
    let w = a.width() as i64;
    let h = a.height() as i64;
    if d.a < 0 || d.b < 0 || d.c >= w || d.d >= h {
        return Err(Error::Precondition(format!("droplet {d} outside {w}x{h} grid")));
    }
    Ok(a.extract_rect(d.a as usize, d.b as usize, d.width() as usize, d.height() as usize))
}

/// Whether the closure of `A` restricted to `d`, computed inside `d` alone,
/// covers all of `d`.
pub fn is_internally_spanned(d: &Droplet, a: &SiteSet) -> Result<bool> {
    let sub = extract(a, d)?;
    Ok(spans_own_grid(&sub))
}

/// Whether `d` is internally spanned within the first `t` steps.
pub fn is_spanned_by_time(d: &Droplet, a: &SiteSet, t: u32) -> Result<bool> {
    let sub = extract(a, d)?;
    if 2 * (sub.count() as u64) < d.phi() {
        return Ok(false);
    }
    Ok(sub.evolve_to(t).is_full())
}

pub(crate) fn spans_own_grid(sub: &SiteSet) -> bool {
    // Necessary count bound first: a spanned droplet holds at least
    // phi / 2 seeds.
    let phi = (sub.width() + sub.height()) as u64;
    if 2 * (sub.count() as u64) < phi {
        return false;
    }
    sub.evolve(StepLimit::Unbounded).closure.is_full()
}

/// Critical-droplet window `[gamma / 2, gamma]` with `gamma = p^-3`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CriticalParams {
    pub p: f64,
    pub gamma: f64,
}

impl CriticalParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(CriticalParams { p, gamma: p.powi(-3) })
    }

    /// No droplet has semi-perimeter below 2, so the window holds no
    /// droplet at all once `gamma < 2`.
    pub fn window_is_empty(&self) -> bool {
        self.gamma < 2.0
    }

    /// Exact comparison of an integer semi-perimeter against the real
    /// window bounds; `gamma` itself is never rounded.
    #[inline]
    pub fn in_window(&self, phi: u64) -> bool {
        let phi = phi as f64;
        2.0 * phi >= self.gamma && phi <= self.gamma
    }
}

/// Merge-trace scan for an internally spanned critical droplet inside `x`.
///
/// Sound: every trace node is internally spanned, so a hit is a witness.
/// Complete up to the merge jump: a single merge can move the semi-perimeter
/// from below `gamma / 2` to at most `gamma + 2`, so a configuration whose
/// only witnesses are skipped this way has a trace node with semi-perimeter
/// in `(gamma, gamma + 2]`. [`detect_critical_exact`] is the ground truth.
pub fn detect_critical(x: &Droplet, a: &SiteSet, params: &CriticalParams) -> Result<bool> {
    if params.window_is_empty() {
        return Err(Error::WindowEmpty(params.gamma));
    }
    let trace = rectangles_process_in(a, x);
    Ok(trace.nodes.iter().any(|n| params.in_window(n.droplet.phi())))
}

/// Used by the disagreement audit: whether the trace jumps over the window.
pub fn trace_has_window_overshoot(x: &Droplet, a: &SiteSet, params: &CriticalParams) -> bool {
    let trace = rectangles_process_in(a, x);
    trace.nodes.iter().any(|n| {
        let phi = n.droplet.phi() as f64;
        phi > params.gamma && phi <= params.gamma + 2.0
    })
}

/// Exhaustive oracle for the critical event: enumerates every sub-droplet of
/// `x` with semi-perimeter in the window and tests internal spanning.
/// Refuses droplets with `lg > 64`.
pub fn detect_critical_exact(x: &Droplet, a: &SiteSet, params: &CriticalParams) -> Result<bool> {
    if params.window_is_empty() {
        return Err(Error::WindowEmpty(params.gamma));
    }
    if x.lg() > 64 {
        return Err(Error::BudgetExceeded(format!("lg = {} > 64", x.lg())));
    }
    let sub = extract(a, x)?;
    let w = sub.width();
    let h = sub.height();
    // Prefix sums over the occupancy for the |A ∩ D| >= phi / 2 prefilter.
    let counts = prefix_counts(&sub);
    let count_rect = |x0: usize, y0: usize, dw: usize, dh: usize| -> u64 {
        (counts[(y0 + dh) * (w + 1) + (x0 + dw)] + counts[y0 * (w + 1) + x0]
            - counts[y0 * (w + 1) + (x0 + dw)]
            - counts[(y0 + dh) * (w + 1) + x0]) as u64
    };
    for s in 2..=(w + h) as u64 {
        if !params.in_window(s) {
            continue;
        }
        let s = s as usize;
        for dw in s.saturating_sub(h).max(1)..=w.min(s - 1) {
            let dh = s - dw;
            for y0 in 0..=(h - dh) {
                for x0 in 0..=(w - dw) {
                    if 2 * count_rect(x0, y0, dw, dh) < s as u64 {
                        continue;
                    }
                    if spans_own_grid(&sub.extract_rect(x0, y0, dw, dh)) {
                        return Ok(true);
                    }
                }
            }
        }
    }
    Ok(false)
}

fn prefix_counts(sub: &SiteSet) -> Vec<u32> {
    let w = sub.width();
    let h = sub.height();
    let mut counts = vec![0u32; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += sub.get(x, y) as u32;
            counts[(y + 1) * (w + 1) + (x + 1)] = counts[y * (w + 1) + (x + 1)] + row;
        }
    }
    counts
}

/// For every integer `1 <= k <= lg(d) / 2`, a witness internally spanned
/// sub-droplet with `k <= lg <= 2k`, read off the merge tree.
///
/// Walking from the root towards the larger parent, the long side at least
/// halves (minus one) per step, so the first node with `lg <= 2k` already
/// has `lg >= k`.
pub fn al_scale_scan(d: &Droplet, a: &SiteSet) -> Result<Vec<(u64, Droplet)>> {
    let trace = rectangles_process_in(a, d);
    let root = match trace.finals.as_slice() {
        [only] if trace.nodes[*only].droplet == *d => *only,
        _ => {
            return Err(Error::Precondition(format!("droplet {d} is not internally spanned")));
        }
    };
    let mut out = Vec::new();
    for k in 1..=d.lg() / 2 {
        let mut node = root;
        while trace.nodes[node].droplet.lg() > 2 * k {
            let (p1, p2) = trace.nodes[node]
                .parents
                .expect("node with lg > 2 has parents");
            let lg1 = trace.nodes[p1].droplet.lg();
            let lg2 = trace.nodes[p2].droplet.lg();
            node = if lg1 >= lg2 { p1 } else { p2 };
        }
        let witness = trace.nodes[node].droplet;
        assert!(
            witness.lg() >= k && witness.lg() <= 2 * k,
            "merge-tree descent left the [k, 2k] band: k = {k}, lg = {}",
            witness.lg()
        );
        out.push((k, witness));
    }
    Ok(out)
}
