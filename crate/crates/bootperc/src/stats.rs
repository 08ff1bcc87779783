//! Wilson intervals, median order-statistic intervals and verdicts.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub point: f64,
    pub low: f64,
    pub high: f64,
}

/// Wilson score interval at 95% for a binomial proportion.
pub fn wilson(successes: u64, trials: u64) -> Interval {
    assert!(trials >= 1 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = (Z95 / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Interval { point: p, low: (centre - half).max(0.0), high: (centre + half).min(1.0) }
}

/// Median with a distribution-free 95% confidence interval from binomial
/// order statistics. The input need not be sorted.
pub fn median_ci(values: &[f64]) -> Interval {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let half = Z95 * (n as f64).sqrt() / 2.0;
    let lo_idx = ((n as f64 / 2.0 - half).floor().max(0.0)) as usize;
    let hi_idx = (((n as f64 / 2.0 + half).ceil()) as usize).min(n - 1);
    Interval { point: median, low: sorted[lo_idx], high: sorted[hi_idx] }
}

/// Standard error of a binomial proportion estimate.
pub fn proportion_se(successes: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    (p * (1.0 - p) / n).sqrt()
}

/// Pooled standard error for the comparison `P(E and F)` versus
/// `P(E) P(F)` on a shared sample.
pub fn pooled_product_se(p_ef: (u64, u64), p_e: (u64, u64), p_f: (u64, u64)) -> f64 {
    let se_ef = proportion_se(p_ef.0, p_ef.1);
    let se_e = proportion_se(p_e.0, p_e.1);
    let se_f = proportion_se(p_f.0, p_f.1);
    let pe = p_e.0 as f64 / p_e.1 as f64;
    let pf = p_f.0 as f64 / p_f.1 as f64;
    (se_ef * se_ef + (pf * se_e) * (pf * se_e) + (pe * se_f) * (pe * se_f)).sqrt()
}

/// Spearman rank correlation with midranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = midranks(xs);
    let ry = midranks(ys);
    pearson(&rx, &ry)
}

fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Outcome of a statistical inequality check. `Fail` requires the whole
/// confidence interval on the violating side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

/// Checks `estimate <= bound`: `Pass` when the upper confidence limit is
/// within the bound, `Fail` when even the lower limit violates it.
pub fn verdict_le(estimate: &Interval, bound: f64) -> Verdict {
    if estimate.high <= bound {
        Verdict::Pass
    } else if estimate.low > bound {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}
