//! Empirical correlation checks: increasing events are positively
//! correlated, an increasing and a decreasing event negatively.

use rayon::prelude::*;

use crate::droplet::{detect_critical, CriticalParams, Droplet};
use crate::error::{Error, Result};
use crate::grid::{GridConfig, SimParams, SiteSet, StepLimit};
use crate::rng::trial_seed;
use crate::stats::{pooled_product_se, wilson, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

/// A named event with a declared monotonicity, spot-verified before use.
pub struct EventSpec<'a> {
    pub name: &'a str,
    pub monotone: Monotonicity,
    pub eval: Box<dyn Fn(&SiteSet) -> bool + Sync + 'a>,
}

impl<'a> EventSpec<'a> {
    pub fn increasing(name: &'a str, eval: impl Fn(&SiteSet) -> bool + Sync + 'a) -> Self {
        EventSpec { name, monotone: Monotonicity::Increasing, eval: Box::new(eval) }
    }

    pub fn decreasing(name: &'a str, eval: impl Fn(&SiteSet) -> bool + Sync + 'a) -> Self {
        EventSpec { name, monotone: Monotonicity::Decreasing, eval: Box::new(eval) }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PairComparison {
    pub events: (String, String),
    pub p_joint: f64,
    pub p_product: f64,
    pub tolerance: f64,
    /// `P(E and F) >= P(E) P(F) - 3 SE` for two increasing events,
    /// `P(E and G) <= P(E) P(G) + 3 SE` for the mixed pair.
    pub ok: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HarrisReport {
    pub n: u64,
    pub p: f64,
    pub trials: u64,
    pub p_e: Interval,
    pub p_f: Interval,
    pub p_g: Interval,
    pub increasing_pair: PairComparison,
    pub mixed_pair: PairComparison,
}

/// Spot check on nested sample pairs: adding seeds must not destroy an
/// increasing event nor create a decreasing one.
fn spot_check(event: &EventSpec, n: u64, p: f64, seed: u64) -> Result<()> {
    let config = GridConfig::square(n as usize);
    for i in 0..48u64 {
        let big = SiteSet::sample(config, SimParams::new(p, trial_seed(seed, "spot", i), i)?);
        let mut small = big.clone();
        for (j, (x, y)) in big.iter_sites().collect::<Vec<_>>().into_iter().enumerate() {
            if j % 3 == 0 {
                small.remove(x, y);
            }
        }
        let (lo, hi) = ((event.eval)(&small), (event.eval)(&big));
        let ok = match event.monotone {
            Monotonicity::Increasing => !lo || hi,
            Monotonicity::Decreasing => !hi || lo,
        };
        if !ok {
            return Err(Error::NotMonotone(event.name.to_string()));
        }
    }
    Ok(())
}

/// Estimates the two correlation inequalities on a shared sample of
/// `p`-random grids, at three pooled standard errors.
pub fn harris_check(
    e: &EventSpec,
    f: &EventSpec,
    g: &EventSpec,
    n: u64,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<HarrisReport> {
    if e.monotone != Monotonicity::Increasing
        || f.monotone != Monotonicity::Increasing
        || g.monotone != Monotonicity::Decreasing
    {
        return Err(Error::Precondition(
            "harris_check expects increasing E, increasing F, decreasing G".into(),
        ));
    }
    for event in [e, f, g] {
        spot_check(event, n.min(40), p, seed ^ 0xC0FFEE)?;
    }
    let config = GridConfig::square(n as usize);
    let label = format!("harris:n={n}:p={p}");
    let (ce, cf, cg, cef, ceg) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = SiteSet::sample(
                config,
                SimParams::new(p, trial_seed(seed, &label, i), i).unwrap(),
            );
            let ie = (e.eval)(&a);
            let if_ = (f.eval)(&a);
            let ig = (g.eval)(&a);
            (
                u64::from(ie),
                u64::from(if_),
                u64::from(ig),
                u64::from(ie && if_),
                u64::from(ie && ig),
            )
        })
        .reduce(
            || (0, 0, 0, 0, 0),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3, a.4 + b.4),
        );
    let pe = ce as f64 / trials as f64;
    let pf = cf as f64 / trials as f64;
    let pg = cg as f64 / trials as f64;
    let pef = cef as f64 / trials as f64;
    let peg = ceg as f64 / trials as f64;
    let se_ef = pooled_product_se((cef, trials), (ce, trials), (cf, trials));
    let se_eg = pooled_product_se((ceg, trials), (ce, trials), (cg, trials));
    Ok(HarrisReport {
        n,
        p,
        trials,
        p_e: wilson(ce, trials),
        p_f: wilson(cf, trials),
        p_g: wilson(cg, trials),
        increasing_pair: PairComparison {
            events: (e.name.to_string(), f.name.to_string()),
            p_joint: pef,
            p_product: pe * pf,
            tolerance: 3.0 * se_ef,
            ok: pef >= pe * pf - 3.0 * se_ef,
        },
        mixed_pair: PairComparison {
            events: (e.name.to_string(), g.name.to_string()),
            p_joint: peg,
            p_product: pe * pg,
            tolerance: 3.0 * se_eg,
            ok: peg <= pe * pg + 3.0 * se_eg,
        },
    })
}

/// The default event suite on an `n x n` grid:
/// `E` = "row 0 holds at least `k` seeds" (increasing),
/// `F` = "the grid percolates" (increasing),
/// `G` = "no internally spanned critical droplet" (decreasing).
pub fn harris_default_suite(n: u64, p: f64) -> (EventSpec<'static>, EventSpec<'static>, EventSpec<'static>) {
    let k = ((n as f64) * p * 0.9).ceil().max(1.0) as usize;
    let crit = CriticalParams::new(p).expect("valid p");
    let whole = Droplet::new(0, 0, n as i64 - 1, n as i64 - 1).unwrap();
    let e = EventSpec::increasing(
        "row0-seeds",
        move |a: &SiteSet| (0..a.width()).filter(|&x| a.get(x, 0)).count() >= k,
    );
    let f = EventSpec::increasing("percolates", |a: &SiteSet| {
        matches!(a.evolve(StepLimit::Unbounded).outcome, crate::grid::EvolveOutcome::Percolated(_))
    });
    let g = EventSpec::decreasing("no-critical-droplet", move |a: &SiteSet| {
        !detect_critical(&whole, a, &crit).expect("non-degenerate window")
    });
    (e, f, g)
}

/// Equality check for events with disjoint supports: both one-sided bands
/// must hold, which pins `P(E1 and E2)` to the product within tolerance.
pub fn independent_events_band(n: u64, p: f64, trials: u64, seed: u64) -> Result<PairComparison> {
    let k = ((n as f64) * p * 0.9).ceil().max(1.0) as usize;
    let e1 = EventSpec::increasing(
        "row0-seeds",
        move |a: &SiteSet| (0..a.width()).filter(|&x| a.get(x, 0)).count() >= k,
    );
    let e2 = EventSpec::increasing(
        "row2-seeds",
        move |a: &SiteSet| (0..a.width()).filter(|&x| a.get(x, 2)).count() >= k,
    );
    let config = GridConfig::square(n as usize);
    let label = format!("harris-indep:n={n}:p={p}");
    let (c1, c2, c12) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = SiteSet::sample(
                config,
                SimParams::new(p, trial_seed(seed, &label, i), i).unwrap(),
            );
            let i1 = (e1.eval)(&a);
            let i2 = (e2.eval)(&a);
            (u64::from(i1), u64::from(i2), u64::from(i1 && i2))
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let p1 = c1 as f64 / trials as f64;
    let p2 = c2 as f64 / trials as f64;
    let p12 = c12 as f64 / trials as f64;
    let se = pooled_product_se((c12, trials), (c1, trials), (c2, trials));
    Ok(PairComparison {
        events: ("row0-seeds".into(), "row2-seeds".into()),
        p_joint: p12,
        p_product: p1 * p2,
        tolerance: 3.0 * se,
        ok: (p12 - p1 * p2).abs() <= 3.0 * se,
    })
}
