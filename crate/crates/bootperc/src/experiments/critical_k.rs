//! Bisection estimate of the critical grid size: the side length at which
//! the probability of containing an internally spanned critical droplet
//! crosses one half.

use rayon::prelude::*;

use super::EstimateResult;
use crate::droplet::{detect_critical, CriticalParams, Droplet};
use crate::error::{Error, Result};
use crate::grid::{GridConfig, SimParams, SiteSet};
use crate::rng::trial_seed;
use crate::scales::CriticalScale;

pub const DEFAULT_K_MAX: u64 = 1024;

#[derive(Debug, Clone, serde::Serialize)]
pub struct BisectionPoint {
    pub k: u64,
    pub estimate: EstimateResult,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CriticalKResult {
    pub scale: CriticalScale,
    /// Whether some evaluated point achieved `|P - 1/2| <= tolerance`.
    /// When the crossing is a jump (no such point exists), `k_hat` is the
    /// smallest evaluated side with estimate at least one half.
    pub tolerance_met: bool,
    pub bracket: (u64, u64),
    /// All evaluated points, sorted by side length.
    pub evaluated: Vec<BisectionPoint>,
}

fn estimate_gamma_probability(
    k: u64,
    p: f64,
    crit: &CriticalParams,
    trials: u64,
    seed: u64,
) -> EstimateResult {
    // A droplet inside [k]^2 has semi-perimeter at most 2k, so the window
    // is unreachable outright when 2k < gamma / 2.
    if (2 * k) as f64 * 2.0 < crit.gamma {
        return EstimateResult::from_counts(0, trials, seed);
    }
    let config = GridConfig::square(k as usize);
    let whole = Droplet::new(0, 0, k as i64 - 1, k as i64 - 1).unwrap();
    let label = format!("critical-k:k={k}:p={p}");
    let hits = (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = SiteSet::sample(
                config,
                SimParams::new(p, trial_seed(seed, &label, i), i).unwrap(),
            );
            u64::from(detect_critical(&whole, &a, crit).expect("non-degenerate window"))
        })
        .sum();
    EstimateResult::from_counts(hits, trials, seed)
}

pub fn estimate_critical_k(p: f64, trials: u64, tolerance: f64, seed: u64) -> Result<CriticalKResult> {
    estimate_critical_k_with_budget(p, trials, tolerance, seed, DEFAULT_K_MAX)
}

/// Exponential bracketing from below followed by integer bisection on the
/// estimated crossing of one half. Deterministic in `(p, trials, seed)`.
pub fn estimate_critical_k_with_budget(
    p: f64,
    trials: u64,
    tolerance: f64,
    seed: u64,
    k_max: u64,
) -> Result<CriticalKResult> {
    let crit = CriticalParams::new(p)?;
    if crit.window_is_empty() {
        return Err(Error::WindowEmpty(crit.gamma));
    }
    let mut evaluated: Vec<BisectionPoint> = Vec::new();
    let mut eval = |k: u64| -> f64 {
        let estimate = estimate_gamma_probability(k, p, &crit, trials, seed);
        let point = estimate.point;
        evaluated.push(BisectionPoint { k, estimate });
        point
    };
    // Exponential search for the upper end of the bracket.
    let mut lo = 2u64;
    let mut lo_p = eval(lo);
    if lo_p >= 0.5 {
        // Degenerate: already above one half at the smallest side.
        let k_hat = lo;
        return Ok(finish(p, k_hat, lo_p, tolerance, (lo, lo), evaluated));
    }
    let mut hi = lo;
    let mut hi_p = lo_p;
    loop {
        if hi >= k_max {
            return Err(Error::BracketNotFound { lo, hi, p_lo: lo_p, p_hi: hi_p });
        }
        let next = (hi * 2).min(k_max);
        let next_p = eval(next);
        if next_p >= 0.5 {
            hi = next;
            hi_p = next_p;
            break;
        }
        lo = next;
        lo_p = next_p;
        hi = next;
        hi_p = next_p;
    }
    // Integer bisection on the monotone crossing.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let mid_p = eval(mid);
        if mid_p >= 0.5 {
            hi = mid;
            hi_p = mid_p;
        } else {
            lo = mid;
            lo_p = mid_p;
        }
    }
    let _ = (lo_p, hi_p);
    // Prefer a point that lands within tolerance of one half; otherwise the
    // crossing side itself.
    let best = evaluated
        .iter()
        .filter(|pt| (pt.estimate.point - 0.5).abs() <= tolerance)
        .min_by(|a, b| {
            let da = (a.estimate.point - 0.5).abs();
            let db = (b.estimate.point - 0.5).abs();
            da.partial_cmp(&db).unwrap().then(a.k.cmp(&b.k))
        })
        .map(|pt| pt.k);
    let (k_hat, tolerance_met) = match best {
        Some(k) => (k, true),
        None => (hi, false),
    };
    let p_at = evaluated
        .iter()
        .find(|pt| pt.k == k_hat)
        .map(|pt| pt.estimate.point)
        .unwrap();
    Ok(finish(p, k_hat, p_at, tolerance, (lo, hi), evaluated))
}

fn finish(
    p: f64,
    k_hat: u64,
    p_at: f64,
    tolerance: f64,
    bracket: (u64, u64),
    mut evaluated: Vec<BisectionPoint>,
) -> CriticalKResult {
    evaluated.sort_by_key(|pt| pt.k);
    evaluated.dedup_by_key(|pt| pt.k);
    CriticalKResult {
        scale: CriticalScale::new(p, k_hat as f64),
        tolerance_met: (p_at - 0.5).abs() <= tolerance,
        bracket,
        evaluated,
    }
}

/// Nondecreasing along the evaluated sides, allowing confidence overlap:
/// flags only a statistically significant decrease.
pub fn monotone_within_ci(points: &[BisectionPoint]) -> bool {
    points.windows(2).all(|w| w[0].estimate.ci_low <= w[1].estimate.ci_high)
}
