//! Monte Carlo estimators and verification experiments.
//!
//! Every experiment is a pure function of its parameters and a seed: trials
//! are keyed by `(master seed, experiment id, trial index)` and aggregated
//! with commutative reductions, so results do not depend on scheduling.

mod calc;
mod cell_rates;
mod coffeetime;
mod critical_k;
mod harris;
mod scaling;
mod slabs;
mod upright;

pub use calc::{appendix_calc_check, CalcReport, CalcVariantReport, ConstraintVariant};
pub use cell_rates::{
    cell_failure_counts, estimate_eta, estimate_theta, eta_recursion_check,
    theta_recursion_check, RecursionReport,
};
pub use coffeetime::{coffeetime_check, coffeetime_corpus_check, CoffeetimeReport};
pub use critical_k::{
    estimate_critical_k, estimate_critical_k_with_budget, monotone_within_ci, BisectionPoint,
    CriticalKResult, DEFAULT_K_MAX,
};
pub use harris::{harris_check, harris_default_suite, EventSpec, HarrisReport, Monotonicity};
pub use scaling::{time_scaling_experiment, ScalingRow};
pub use slabs::{slab_experiment, SlabReport};
pub use upright::{upright_bound_probe, UprightReport, UprightVerdict};

use std::collections::BTreeMap;

use crate::grid::DoubleLine;
use crate::scales::Scales;
use crate::stats::Interval;

/// One Monte Carlo proportion with its Wilson interval and provenance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EstimateResult {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub successes: u64,
    pub trials: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Scales>,
}

impl EstimateResult {
    pub(crate) fn from_counts(successes: u64, trials: u64, seed: u64) -> Self {
        let interval = crate::stats::wilson(successes, trials);
        EstimateResult {
            point: interval.point,
            ci_low: interval.low,
            ci_high: interval.high,
            successes,
            trials,
            seed,
            metadata: None,
        }
    }

    pub fn interval(&self) -> Interval {
        Interval { point: self.point, low: self.ci_low, high: self.ci_high }
    }
}

/// One simulated trial, reproducible from `(seed, trial_index)` alone.
/// `t` is `null` when the grid did not percolate.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed: u64,
    pub n: u64,
    pub p: f64,
    pub t: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub longest_empty_double_line: Option<DoubleLine>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}
