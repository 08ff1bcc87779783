//! Estimated frequencies of bad and weakly bad cells, and the doubling
//! recursions that bound them:
//! `eta_2m <= eta_m^4 + 100 m^2 q^(4m-8)` and
//! `theta_2m <= theta_m^4 + 50 m^2 q^(2m)`.

use rayon::prelude::*;

use super::EstimateResult;
use crate::cells::classify_cell;
use crate::droplet::Droplet;
use crate::grid::{GridConfig, SimParams, SiteSet};
use crate::rng::trial_seed;
use crate::scales::ScaleParams;
use crate::stats::{verdict_le, Verdict};

/// Counts of bad and weakly bad cells over a shared sample of `m`-cells,
/// so the containment `bad => weakly bad` holds sample by sample.
pub fn cell_failure_counts(
    m: u64,
    p: f64,
    trials: u64,
    params: &ScaleParams,
    seed: u64,
) -> (u64, u64) {
    let config = GridConfig::square(m as usize);
    let cell = Droplet::new(0, 0, m as i64 - 1, m as i64 - 1).unwrap();
    let label = format!("cell-rates:m={m}:p={p}");
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = SiteSet::sample(
                config,
                SimParams::new(p, trial_seed(seed, &label, i), i).unwrap(),
            );
            let class = classify_cell(&cell, &a, params, p).expect("square cell");
            debug_assert!(!class.bad() || class.weakly_bad());
            (u64::from(class.bad()), u64::from(class.weakly_bad()))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Fraction of sampled `m`-cells that are bad.
pub fn estimate_eta(m: u64, p: f64, trials: u64, params: &ScaleParams, seed: u64) -> EstimateResult {
    let (bad, _) = cell_failure_counts(m, p, trials, params, seed);
    EstimateResult::from_counts(bad, trials, seed)
}

/// Fraction of sampled `m`-cells that are weakly bad.
pub fn estimate_theta(m: u64, p: f64, trials: u64, params: &ScaleParams, seed: u64) -> EstimateResult {
    let (_, weakly) = cell_failure_counts(m, p, trials, params, seed);
    EstimateResult::from_counts(weakly, trials, seed)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RecursionReport {
    pub kind: &'static str,
    pub m: u64,
    pub p: f64,
    pub trials: u64,
    pub small: EstimateResult,
    pub large: EstimateResult,
    /// Upper bound from the recursion, fed with the small estimate's upper
    /// confidence limit.
    pub bound: f64,
    pub verdict: Verdict,
}

/// Estimates at `m` and `2m` and checks the eta recursion at 95%.
pub fn eta_recursion_check(
    m: u64,
    p: f64,
    trials: u64,
    params: &ScaleParams,
    seed: u64,
) -> RecursionReport {
    let small = estimate_eta(m, p, trials, params, seed);
    let large = estimate_eta(2 * m, p, trials, params, seed ^ 0x55AA);
    let q = 1.0 - p;
    let bound = small.ci_high.powi(4) + 100.0 * (m * m) as f64 * q.powi(4 * m as i32 - 8);
    let verdict = verdict_le(&large.interval(), bound);
    RecursionReport { kind: "eta", m, p, trials, small, large, bound, verdict }
}

/// As [`eta_recursion_check`] for the weakly-bad rate.
pub fn theta_recursion_check(
    m: u64,
    p: f64,
    trials: u64,
    params: &ScaleParams,
    seed: u64,
) -> RecursionReport {
    let small = estimate_theta(m, p, trials, params, seed);
    let large = estimate_theta(2 * m, p, trials, params, seed ^ 0x55AA);
    let q = 1.0 - p;
    let bound = small.ci_high.powi(4) + 50.0 * (m * m) as f64 * q.powi(2 * m as i32);
    let verdict = verdict_le(&large.interval(), bound);
    RecursionReport { kind: "theta", m, p, trials, small, large, bound, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_probabilities() {
        let params = ScaleParams::default();
        // Full cells are strongly good: both rates vanish.
        let eta = estimate_eta(6, 1.0, 50, &params, 1);
        assert_eq!(eta.successes, 0);
        let theta = estimate_theta(6, 1.0, 50, &params, 1);
        assert_eq!(theta.successes, 0);
        // Empty cells with m >= 3 are bad and weakly bad.
        let (bad, weakly) = cell_failure_counts(6, 0.0, 50, &params, 1);
        assert_eq!((bad, weakly), (50, 50));
    }

    #[test]
    fn weakly_bad_dominates_bad() {
        let params = ScaleParams::default();
        for &p in &[0.2, 0.35, 0.5] {
            let (bad, weakly) = cell_failure_counts(8, p, 400, &params, 7);
            assert!(weakly >= bad, "p = {p}: {weakly} < {bad}");
        }
    }

    #[test]
    fn recursion_checks_never_fail_statistically() {
        let params = ScaleParams::default();
        let eta = eta_recursion_check(8, 0.35, 1500, &params, 11);
        assert_ne!(eta.verdict, Verdict::Fail, "{eta:?}");
        let theta = theta_recursion_check(8, 0.35, 1500, &params, 11);
        assert_ne!(theta.verdict, Verdict::Fail, "{theta:?}");
    }

    #[test]
    fn estimates_are_reproducible() {
        let params = ScaleParams::default();
        let a = estimate_eta(8, 0.3, 300, &params, 42);
        let b = estimate_eta(8, 0.3, 300, &params, 42);
        assert_eq!(a.successes, b.successes);
    }
}
