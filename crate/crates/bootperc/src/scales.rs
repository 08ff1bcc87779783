//! The scale hierarchy: gamma, K, L, M and the constants they depend on.
//!
//! All logarithms are natural.

use crate::error::{Error, Result};

/// `pi^2 / 18`, the sharp metastability constant for the two-neighbour
/// process on the square grid.
pub const LAMBDA: f64 = 0.548_311_355_616_075_5;

/// Tunable constants for cell classification and the derived scales.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ScaleParams {
    /// Time constant `B` in the `B m / p` classification budget.
    pub b_time: f64,
    /// Scale constant `A` in the definitions of `L` and `M`.
    pub a_const: f64,
    /// Restriction constant `sigma`.
    pub sigma: u32,
    /// Slow-slab constant, strictly inside `(0, 1/2)`.
    pub c_slow: f64,
    /// Small-p cap: `K` is frozen at its value at `p0` for `p > p0`.
    pub p0: f64,
    /// Traversal time constant in the `25 m / p` budget.
    pub quick_b: f64,
}

impl Default for ScaleParams {
    fn default() -> Self {
        ScaleParams {
            b_time: 50.0,
            a_const: 5.0,
            sigma: 36,
            c_slow: 0.25,
            p0: 0.2,
            quick_b: 25.0,
        }
    }
}

impl ScaleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_slow > 0.0 && self.c_slow < 0.5) {
            return Err(Error::BadConfig(format!("c_slow = {} outside (0, 1/2)", self.c_slow)));
        }
        if self.b_time <= 0.0 || self.a_const <= 0.0 || self.quick_b <= 0.0 {
            return Err(Error::BadConfig("time and scale constants must be positive".into()));
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(Error::BadConfig(format!("p0 = {} outside (0, 1)", self.p0)));
        }
        Ok(())
    }

    /// The recursion lemmas assume `B >= 50` and `sigma >= 36`; overriding
    /// below those values is allowed but flagged.
    pub fn meets_lemma_hypotheses(&self) -> bool {
        self.b_time >= 50.0 && self.sigma >= 36
    }

    /// Classification budget `floor(B m / p)` for an `m`-cell.
    pub fn cell_time_budget(&self, m: u64, p: f64) -> u32 {
        budget(self.b_time, m, p)
    }
}

pub(crate) fn budget(constant: f64, m: u64, p: f64) -> u32 {
    assert!(p > 0.0);
    let t = (constant * m as f64 / p).floor();
    if t >= f64::from(u32::MAX) {
        u32::MAX
    } else {
        t as u32
    }
}

/// Critical grid size estimate and the derived exponent
/// `mu_hat = p ln K_hat`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CriticalScale {
    pub p: f64,
    pub k_hat: f64,
    pub mu_hat: f64,
    pub lambda: f64,
}

impl CriticalScale {
    pub fn new(p: f64, k_hat: f64) -> Self {
        assert!(k_hat >= 1.0);
        CriticalScale { p, k_hat, mu_hat: p * k_hat.ln(), lambda: LAMBDA }
    }
}

/// `p` clamped to the cap `p0`; the critical size for `p > p0` is the one
/// estimated at `p0`.
pub fn effective_p(p: f64, params: &ScaleParams) -> f64 {
    p.min(params.p0)
}

/// The derived scales for a grid of side `n`. `k_hat` must be the critical
/// size estimated at `effective_p(p, params)`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Scales {
    pub p: f64,
    pub n: f64,
    pub gamma: f64,
    pub k: f64,
    pub l: f64,
    pub m: f64,
    /// Whether `(50 L^2 q^-8)^(1/L) (1-p)^(1/8) < 1` holds; experiments
    /// relying on the geometric-series bound warn when it does not.
    pub ratio_guard_ok: bool,
}

pub fn derive_scales(p: f64, n: f64, params: &ScaleParams, k_hat: f64) -> Result<Scales> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let k = k_hat;
    if n <= k {
        return Err(Error::ScaleUndefined(format!("n = {n} <= K = {k}; M needs log(n/K) > 0")));
    }
    let q = 1.0 - p;
    let gamma = p.powi(-3);
    let l = params.a_const * k * k * (1.0 / q).ln();
    let log_ratio = (n / k).ln();
    let m = (params.a_const * (p * log_ratio).sqrt() * k).max(params.a_const * log_ratio);
    // log-domain evaluation of (50 L^2 q^-8)^(1/L) q^(1/8) < 1
    let guard = (50f64.ln() + 2.0 * l.ln() + 8.0 * (1.0 / q).ln()) / l + q.ln() / 8.0;
    Ok(Scales { p, n, gamma, k, l, m, ratio_guard_ok: guard < 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_matches_pi_squared_over_18() {
        let pi = std::f64::consts::PI;
        assert_eq!(LAMBDA, pi * pi / 18.0);
    }

    #[test]
    fn gamma_arithmetic() {
        let s = derive_scales(0.1, 1e6, &ScaleParams::default(), 245.0).unwrap();
        assert!((s.gamma - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn l_from_definition() {
        let s = derive_scales(0.3, 1e6, &ScaleParams::default(), 20.0).unwrap();
        assert!((s.l - 713.3498878774648).abs() < 1e-9, "L = {}", s.l);
    }

    #[test]
    fn m_takes_the_larger_branch() {
        let s = derive_scales(0.1, 1e6, &ScaleParams::default(), 245.0).unwrap();
        let first = 5.0 * (0.1f64 * (1e6f64 / 245.0).ln()).sqrt() * 245.0;
        let second = 5.0 * (1e6f64 / 245.0).ln();
        assert!((first - 1116.9858964573573).abs() < 1e-6);
        assert!((second - 41.571261737097736).abs() < 1e-9);
        assert!((s.m - first).abs() < 1e-9);
    }

    #[test]
    fn m_undefined_when_n_not_above_k() {
        assert!(derive_scales(0.1, 200.0, &ScaleParams::default(), 245.0).is_err());
    }

    #[test]
    fn effective_p_caps_at_p0() {
        let params = ScaleParams::default();
        assert_eq!(effective_p(0.1, &params), 0.1);
        assert_eq!(effective_p(0.35, &params), 0.2);
    }

    #[test]
    fn params_validation() {
        let mut params = ScaleParams::default();
        assert!(params.validate().is_ok());
        assert!(params.meets_lemma_hypotheses());
        params.c_slow = 0.5;
        assert!(params.validate().is_err());
        params.c_slow = 0.25;
        params.b_time = 10.0;
        assert!(params.validate().is_ok());
        assert!(!params.meets_lemma_hypotheses());
    }

    #[test]
    fn mu_hat_definition() {
        let cs = CriticalScale::new(0.15, 75.0);
        assert!((cs.mu_hat - 0.15 * 75f64.ln()).abs() < 1e-12);
        assert_eq!(cs.lambda, LAMBDA);
    }

    #[test]
    fn budget_floors() {
        let params = ScaleParams::default();
        // 50 * 3 / 0.4 = 375.0
        assert_eq!(params.cell_time_budget(3, 0.4), 375);
        // 50 * 7 / 0.3 = 1166.66...
        assert_eq!(params.cell_time_budget(7, 0.3), 1166);
    }
}
