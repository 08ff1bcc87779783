//! Small graphs and exhaustive connected-subgraph counting.

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Undirected graph on at most 64 vertices, adjacency stored as bitmasks.
#[derive(Debug, Clone)]
pub struct Graph {
    adj: Vec<u64>,
}

impl Graph {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::BudgetExceeded(format!("graph order {n} outside 1..=64")));
        }
        Ok(Graph { adj: vec![0; n] })
    }

    pub fn order(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v && u < self.order() && v < self.order());
        self.adj[u] |= 1 << v;
        self.adj[v] |= 1 << u;
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count_ones() as usize
    }

    pub fn max_degree(&self) -> usize {
        (0..self.order()).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn path(n: usize) -> Result<Self> {
        let mut g = Graph::new(n)?;
        for i in 1..n {
            g.add_edge(i - 1, i);
        }
        Ok(g)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let mut g = Graph::path(n)?;
        if n > 2 {
            g.add_edge(n - 1, 0);
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Graph::new(n)?;
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        Ok(g)
    }

    pub fn grid2d(w: usize, h: usize) -> Result<Self> {
        let mut g = Graph::new(w * h)?;
        for y in 0..h {
            for x in 0..w {
                let u = y * w + x;
                if x + 1 < w {
                    g.add_edge(u, u + 1);
                }
                if y + 1 < h {
                    g.add_edge(u, u + w);
                }
            }
        }
        Ok(g)
    }

    /// Connected random graph with maximum degree at most `dmax`: a random
    /// spanning path plus extra edges where degrees allow.
    pub fn random_bounded_degree(n: usize, dmax: usize, rng: &mut StreamRng) -> Result<Self> {
        let mut g = Graph::new(n)?;
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            perm.swap(i, j);
        }
        for i in 1..n {
            g.add_edge(perm[i - 1], perm[i]);
        }
        let extra = rng.below((n * n / 4) as u64 + 1);
        for _ in 0..extra {
            let u = rng.below(n as u64) as usize;
            let v = rng.below(n as u64) as usize;
            if u != v && !g.has_edge(u, v) && g.degree(u) < dmax && g.degree(v) < dmax {
                g.add_edge(u, v);
            }
        }
        assert!(g.max_degree() <= dmax.max(2));
        Ok(g)
    }

    /// Exact count of connected induced subgraphs of order `k` containing
    /// `v`, by rooted extension with an exclusion set (each subgraph is
    /// generated exactly once).
    pub fn count_connected_induced(&self, v: usize, k: usize) -> Result<u64> {
        if v >= self.order() {
            return Err(Error::Precondition(format!("vertex {v} outside graph")));
        }
        if k == 0 || k > self.order() {
            return Ok(0);
        }
        let mut count = 0u64;
        let sub = 1u64 << v;
        let ext = self.adj[v];
        self.extend(sub, ext, sub, k, &mut count);
        Ok(count)
    }

    fn extend(&self, sub: u64, ext: u64, banned: u64, k: usize, count: &mut u64) {
        if sub.count_ones() as usize == k {
            *count += 1;
            return;
        }
        let mut rest = ext;
        let mut banned = banned;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            let bit = 1u64 << u;
            rest &= rest - 1;
            banned |= bit;
            let new_ext = (rest | (self.adj[u] & !banned)) & !sub;
            self.extend(sub | bit, new_ext, banned | bit, k, count);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: enumerate all k-subsets containing v, test
    /// connectivity by flood fill.
    fn brute_count(g: &Graph, v: usize, k: usize) -> u64 {
        let n = g.order();
        let mut count = 0;
        for mask in 0u64..(1 << n) {
            if mask.count_ones() as usize != k || mask >> v & 1 == 0 {
                continue;
            }
            let mut seen = 1u64 << v;
            loop {
                let mut grew = false;
                let mut m = seen;
                while m != 0 {
                    let u = m.trailing_zeros() as usize;
                    m &= m - 1;
                    let add = g.adj[u] & mask & !seen;
                    if add != 0 {
                        seen |= add;
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
            if seen == mask {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn path_counts() {
        let g = Graph::path(3).unwrap();
        assert_eq!(g.count_connected_induced(1, 1).unwrap(), 1);
        assert_eq!(g.count_connected_induced(1, 2).unwrap(), 2);
        assert_eq!(g.count_connected_induced(1, 3).unwrap(), 1);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = StreamRng::new(9);
        let mut graphs: Vec<Graph> = vec![
            Graph::path(7).unwrap(),
            Graph::cycle(8).unwrap(),
            Graph::complete(5).unwrap(),
            Graph::grid2d(3, 4).unwrap(),
        ];
        for _ in 0..6 {
            let n = rng.range_inclusive(4, 10) as usize;
            graphs.push(Graph::random_bounded_degree(n, 5, &mut rng).unwrap());
        }
        for (gi, g) in graphs.iter().enumerate() {
            for v in 0..g.order().min(4) {
                for k in 1..=g.order().min(5) {
                    assert_eq!(
                        g.count_connected_induced(v, k).unwrap(),
                        brute_count(g, v, k),
                        "graph {gi}, v {v}, k {k}"
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_orders() {
        let g = Graph::path(4).unwrap();
        assert_eq!(g.count_connected_induced(0, 0).unwrap(), 0);
        assert_eq!(g.count_connected_induced(0, 5).unwrap(), 0);
        assert!(g.count_connected_induced(9, 2).is_err());
        assert!(Graph::new(65).is_err());
    }
}
