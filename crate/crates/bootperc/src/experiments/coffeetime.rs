//! Exhaustive connected-subgraph counts against the `(e(d-1))^k` bound.

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::rng::StreamRng;

#[derive(Debug, Clone, serde::Serialize)]
pub struct CoffeetimeReport {
    pub vertex: usize,
    pub k: usize,
    pub max_degree: usize,
    pub count: u64,
    pub bound: f64,
    pub pass: bool,
}

/// Counts connected induced subgraphs of order `k` containing `v` and
/// compares against `(e (d - 1))^k` where `d` is the maximum degree.
pub fn coffeetime_check(graph: &Graph, v: usize, k: usize) -> Result<CoffeetimeReport> {
    let d = graph.max_degree();
    if d < 2 {
        return Err(Error::Precondition(format!("max degree {d} below 2")));
    }
    let count = graph.count_connected_induced(v, k)?;
    let bound = (std::f64::consts::E * (d as f64 - 1.0)).powi(k as i32);
    Ok(CoffeetimeReport { vertex: v, k, max_degree: d, count, bound, pass: (count as f64) <= bound })
}

/// The fixed corpus: paths and cycles up to 12 vertices, complete graphs up
/// to 6, grid graphs up to 5x5, and 50 random connected graphs of maximum
/// degree at most 5 on up to 10 vertices; every vertex, all `k <= 6`.
pub fn coffeetime_corpus_check(seed: u64) -> Result<Vec<CoffeetimeReport>> {
    let mut graphs: Vec<Graph> = Vec::new();
    for n in 3..=12 {
        graphs.push(Graph::path(n)?);
        graphs.push(Graph::cycle(n)?);
    }
    for n in 3..=6 {
        graphs.push(Graph::complete(n)?);
    }
    for w in 2..=5 {
        for h in 2..=5 {
            graphs.push(Graph::grid2d(w, h)?);
        }
    }
    let mut rng = StreamRng::new(seed);
    for _ in 0..50 {
        let n = rng.range_inclusive(3, 10) as usize;
        graphs.push(Graph::random_bounded_degree(n, 5, &mut rng)?);
    }
    let mut out = Vec::new();
    for g in &graphs {
        if g.max_degree() < 2 {
            continue;
        }
        for v in 0..g.order() {
            for k in 1..=6.min(g.order()) {
                out.push(coffeetime_check(g, v, k)?);
            }
        }
    }
    Ok(out)
}
