//! Conditional speed of M-slabs: `P(fast | subcritical)` with rejection
//! sampling on subcriticality.

use rayon::prelude::*;

use crate::droplet::{CriticalParams, Droplet};
use crate::error::Result;
use crate::grid::{GridConfig, SimParams, SiteSet};
use crate::rng::trial_seed;
use crate::scales::ScaleParams;
use crate::stats::{wilson, Interval};
use crate::waves::classify_slab;

const REJECTION_CAP: u64 = 100_000;

#[derive(Debug, Clone, serde::Serialize)]
pub struct SlabReport {
    pub p: f64,
    pub m_scale: f64,
    pub lg: u64,
    pub sh: u64,
    pub threshold: u64,
    pub requested: u64,
    pub accepted: u64,
    pub attempts: u64,
    /// Whether the rejection budget sufficed for the requested count.
    pub complete: bool,
    pub fast_given_subcritical: Interval,
    pub flood_totals: Vec<u32>,
    pub mean_flood: f64,
    /// Mean flood time over `lg = M / p`, the speed diagnostic.
    pub mean_flood_over_lg: f64,
}

/// Samples slabs of dimensions `round(m/p) x round(m)`, keeps the
/// subcritical ones (up to a fixed attempt budget) and classifies each as
/// fast or slow by its flood time.
pub fn slab_experiment(
    p: f64,
    m_scale: f64,
    params: &ScaleParams,
    trials: u64,
    seed: u64,
) -> Result<SlabReport> {
    let crit = CriticalParams::new(p)?;
    let lg = (m_scale / p).round().max(2.0) as u64;
    let sh = m_scale.round().max(1.0) as u64;
    let config = GridConfig::new(lg as usize, sh as usize);
    let slab = Droplet::new(0, 0, lg as i64 - 1, sh as i64 - 1).unwrap();
    let label = format!("slab:p={p}:m={m_scale}");
    let cap = REJECTION_CAP.min(trials.saturating_mul(64).max(trials));

    // Attempts are examined in index order; the first `trials` subcritical
    // ones are kept, so the outcome is independent of scheduling.
    let chunk = 256u64.max(trials);
    let mut verdicts = Vec::new();
    let mut attempts = 0u64;
    while attempts < cap && (verdicts.len() as u64) < trials {
        let hi = (attempts + chunk).min(cap);
        let mut batch: Vec<(u64, crate::waves::SlabVerdict)> = (attempts..hi)
            .into_par_iter()
            .map(|i| {
                let a = SiteSet::sample(
                    config,
                    SimParams::new(p, trial_seed(seed, &label, i), i).unwrap(),
                );
                (i, classify_slab(&slab, &a, p, params, &crit).expect("slab shape"))
            })
            .collect();
        batch.sort_by_key(|(i, _)| *i);
        for (_, v) in batch {
            if v.subcritical && (verdicts.len() as u64) < trials {
                verdicts.push(v);
            }
        }
        attempts = hi;
    }

    let accepted = verdicts.len() as u64;
    let fast = verdicts.iter().filter(|v| v.fast).count() as u64;
    let flood_totals: Vec<u32> = verdicts.iter().map(|v| v.flood_total).collect();
    let mean_flood = if accepted > 0 {
        flood_totals.iter().map(|&t| f64::from(t)).sum::<f64>() / accepted as f64
    } else {
        f64::NAN
    };
    let fast_interval = if accepted > 0 {
        wilson(fast, accepted)
    } else {
        Interval { point: f64::NAN, low: f64::NAN, high: f64::NAN }
    };
    Ok(SlabReport {
        p,
        m_scale,
        lg,
        sh,
        threshold: (params.c_slow * lg as f64).floor() as u64,
        requested: trials,
        accepted,
        attempts,
        complete: accepted == trials,
        fast_given_subcritical: fast_interval,
        flood_totals,
        mean_flood,
        mean_flood_over_lg: mean_flood / lg as f64,
    })
}
