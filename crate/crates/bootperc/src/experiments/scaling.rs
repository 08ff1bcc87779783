//! Percolation-time scaling against `log n / (2 log 1/q)`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::TrialRecord;
use crate::grid::{EvolveOutcome, GridConfig, SimParams, SiteSet, StepLimit};
use crate::rng::trial_seed;
use crate::stats::{median_ci, Interval};

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScalingRow {
    pub n: u64,
    pub p: f64,
    pub trials: u64,
    pub percolated: u64,
    pub median_t: f64,
    /// `log n / (2 log 1/q)`.
    pub predicted: f64,
    pub ratio: f64,
    pub ratio_ci: Interval,
}

/// Runs the grid sweep and checks the blocking bound on every trial: with
/// `l` the longest fully interior empty double line of the initial set,
/// a percolating trial must have `T >= floor((l - 1) / 2)` (the middle two
/// squares of an empty `2 x l` rectangle stay uninfected that long).
pub fn time_scaling_experiment(
    n_list: &[u64],
    p_list: &[f64],
    trials: u64,
    seed: u64,
) -> (Vec<ScalingRow>, Vec<TrialRecord>) {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &n in n_list {
        for &p in p_list {
            let label = format!("time-scaling:n={n}:p={p}");
            let config = GridConfig::square(n as usize);
            let mut cell: Vec<(u64, TrialRecord)> = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let trial_key = trial_seed(seed, &label, i);
                    let a = SiteSet::sample(config, SimParams::new(p, trial_key, i).unwrap());
                    let scan = a.longest_empty_double_line();
                    let ev = a.evolve(StepLimit::Unbounded);
                    let t = match ev.outcome {
                        EvolveOutcome::Percolated(t) => Some(t),
                        _ => None,
                    };
                    if let (Some(t), Some(interior)) = (t, scan.interior) {
                        let l = interior.length as u64;
                        if l >= 3 {
                            assert!(
                                u64::from(t) >= (l - 1) / 2,
                                "blocking bound violated: T = {t} < floor(({l} - 1) / 2) \
                                 at n = {n}, p = {p}, trial {i}"
                            );
                        }
                    }
                    let mut diagnostics = BTreeMap::new();
                    diagnostics.insert("occupied".to_string(), serde_json::json!(a.count()));
                    (
                        i,
                        TrialRecord {
                            trial_index: i,
                            seed: trial_key,
                            n,
                            p,
                            t,
                            longest_empty_double_line: scan.best,
                            diagnostics,
                        },
                    )
                })
                .collect();
            cell.sort_by_key(|(i, _)| *i);
            let times: Vec<f64> = cell
                .iter()
                .filter_map(|(_, r)| r.t.map(f64::from))
                .collect();
            let predicted = (n as f64).ln() / (2.0 * (1.0 / (1.0 - p)).ln());
            let (median_t, ratio_ci) = if times.is_empty() {
                (f64::NAN, Interval { point: f64::NAN, low: f64::NAN, high: f64::NAN })
            } else {
                let m = median_ci(&times);
                (
                    m.point,
                    Interval {
                        point: m.point / predicted,
                        low: m.low / predicted,
                        high: m.high / predicted,
                    },
                )
            };
            rows.push(ScalingRow {
                n,
                p,
                trials,
                percolated: times.len() as u64,
                median_t,
                predicted,
                ratio: median_t / predicted,
                ratio_ci,
            });
            records.extend(cell.into_iter().map(|(_, r)| r));
        }
    }
    (rows, records)
}
