//! Fixture verification suite: a fast, deterministic battery of the
//! invariants and statistical checks, shared by the `verify` command and
//! the integration tests. Every check is keyed off the master seed, and the
//! JSONL streams it writes are byte-identical across runs with the same
//! seed.

use std::collections::BTreeMap;
use std::path::Path;

use crate::droplet::{
    self, al_scale_scan, detect_critical, detect_critical_exact, is_internally_spanned,
    rectangles_process, trace_has_window_overshoot, CriticalParams, Droplet,
};
use crate::error::Result;
use crate::experiments::{self, TrialRecord};
use crate::flood::flood;
use crate::grid::{GridConfig, SimParams, SiteSet, StepLimit};
use crate::gridfmt;
use crate::io::write_records;
use crate::rng::{trial_seed, StreamRng};
use crate::scales::ScaleParams;
use crate::stats::Verdict;
use crate::waves::{
    audit_restriction, extract_wave_from_flood, restrict_wave, restricted_metrics, validate_wave,
    wave_metrics, Wave,
};

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct VerifyReport {
    pub master_seed: u64,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

fn check(checks: &mut Vec<CheckResult>, name: &str, outcome: std::result::Result<String, String>) {
    let (pass, detail) = match outcome {
        Ok(detail) => (true, detail),
        Err(detail) => (false, detail),
    };
    checks.push(CheckResult { name: name.to_string(), pass, detail });
}

/// Runs the whole battery. When `out_dir` is given, the Monte Carlo pieces
/// also persist their trial streams there.
pub fn run_verify(master_seed: u64, out_dir: Option<&Path>) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let params = ScaleParams::default();

    check(&mut checks, "closure-equivalence", closure_equivalence(master_seed, 150));
    check(&mut checks, "al-witness-scan", al_witness_scan(master_seed, 40));
    check(&mut checks, "critical-detector-agreement", detector_agreement(master_seed, 60));
    check(&mut checks, "blocking-and-band", blocking_and_band(master_seed, out_dir));
    check(&mut checks, "flood-containment", flood_containment(master_seed, 50));
    check(&mut checks, "wave-extraction", wave_extraction(master_seed, 80, out_dir));
    check(&mut checks, "restriction-laws", restriction_laws(master_seed, 150));
    check(&mut checks, "coffeetime-corpus", coffeetime(master_seed));
    check(&mut checks, "harris-suite", harris(master_seed));
    check(&mut checks, "appendix-minimization", appendix(master_seed));
    check(&mut checks, "cell-rate-recursions", recursions(master_seed, &params));
    check(&mut checks, "critical-size-bisection", critical_size(master_seed));
    check(&mut checks, "upright-probe", upright(master_seed, &params));
    check(&mut checks, "grid-format-round-trips", formats(master_seed));

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { master_seed, checks, all_pass })
}

fn closure_equivalence(seed: u64, grids: u64) -> std::result::Result<String, String> {
    let mut geom = StreamRng::new(trial_seed(seed, "verify:closure", 0));
    let mut nodes = 0usize;
    for i in 0..grids {
        let p = *geom.choose(&[0.05, 0.1, 0.2, 0.4]);
        let w = geom.range_inclusive(4, 48) as usize;
        let h = geom.range_inclusive(4, 48) as usize;
        let a = SiteSet::sample(
            GridConfig::new(w, h),
            SimParams::new(p, trial_seed(seed, "verify:closure:grid", i), i).unwrap(),
        );
        let trace = rectangles_process(&a);
        let closure = a.evolve(StepLimit::Unbounded).closure;
        if trace.union_of_finals(w, h) != closure {
            return Err(format!("closure mismatch at grid {i}"));
        }
        for node in &trace.nodes {
            let inside = droplet::extract(&a, &node.droplet).unwrap();
            if 2 * (inside.count() as u64) < node.droplet.phi() {
                return Err(format!("seed-count bound violated at grid {i}"));
            }
            if let Some((p1, p2)) = node.parents {
                let lg1 = trace.nodes[p1].droplet.lg();
                let lg2 = trace.nodes[p2].droplet.lg();
                if node.droplet.lg() > lg1 + lg2 + 1 {
                    return Err(format!("merge growth bound violated at grid {i}"));
                }
            }
        }
        nodes += trace.nodes.len();
    }
    Ok(format!("{grids} grids, {nodes} trace nodes"))
}

fn al_witness_scan(seed: u64, wanted: u64) -> std::result::Result<String, String> {
    let mut geom = StreamRng::new(trial_seed(seed, "verify:al", 0));
    let mut found = 0u64;
    let mut trial = 0u64;
    while found < wanted && trial < wanted * 40 {
        trial += 1;
        let w = geom.range_inclusive(4, 30) as usize;
        let h = geom.range_inclusive(4, 30) as usize;
        let p = 0.25 + geom.next_f64() * 0.4;
        let a = SiteSet::sample(
            GridConfig::new(w, h),
            SimParams::new(p, trial_seed(seed, "verify:al:grid", trial), trial).unwrap(),
        );
        let d = Droplet::new(0, 0, w as i64 - 1, h as i64 - 1).unwrap();
        if !is_internally_spanned(&d, &a).unwrap() {
            continue;
        }
        let witnesses = al_scale_scan(&d, &a).map_err(|e| e.to_string())?;
        for (k, witness) in &witnesses {
            if !(witness.lg() >= *k && witness.lg() <= 2 * k) {
                return Err(format!("witness outside [k, 2k] at trial {trial}"));
            }
            if !is_internally_spanned(witness, &a).unwrap() {
                return Err(format!("witness not spanned at trial {trial}"));
            }
        }
        found += 1;
    }
    if found < wanted {
        return Err(format!("only {found} spanned droplets found"));
    }
    Ok(format!("{found} spanned droplets, all scales witnessed"))
}

fn detector_agreement(seed: u64, instances: u64) -> std::result::Result<String, String> {
    let mut geom = StreamRng::new(trial_seed(seed, "verify:gamma", 0));
    for i in 0..instances {
        let p = *geom.choose(&[0.15, 0.2, 0.25]);
        let crit = CriticalParams::new(p).unwrap();
        let n = geom.range_inclusive(10, 44) as usize;
        let a = SiteSet::sample(
            GridConfig::square(n),
            SimParams::new(p, trial_seed(seed, "verify:gamma:grid", i), i).unwrap(),
        );
        let x = Droplet::new(0, 0, n as i64 - 1, n as i64 - 1).unwrap();
        let fast = detect_critical(&x, &a, &crit).unwrap();
        let exact = detect_critical_exact(&x, &a, &crit).unwrap();
        if fast && !exact {
            return Err(format!("fast detector unsound at instance {i}"));
        }
        if !fast && exact && !trace_has_window_overshoot(&x, &a, &crit) {
            return Err(format!("unexplained disagreement at instance {i}"));
        }
    }
    Ok(format!("{instances} instances within the documented slack"))
}

fn blocking_and_band(seed: u64, out_dir: Option<&Path>) -> std::result::Result<String, String> {
    let trials = 100;
    let (rows, records) =
        experiments::time_scaling_experiment(&[128], &[0.3], trials, trial_seed(seed, "verify:scaling", 0));
    if let Some(dir) = out_dir {
        let by_index: BTreeMap<u64, TrialRecord> =
            records.iter().map(|r| (r.trial_index, r.clone())).collect();
        write_records(dir, "verify-scaling", trials, false, |i| by_index[&i].clone())
            .map_err(|e| e.to_string())?;
    }
    let row = &rows[0];
    if row.percolated < trials * 9 / 10 {
        return Err(format!("only {} of {trials} percolated", row.percolated));
    }
    if !(row.ratio > 0.4 && row.ratio < 2.5) {
        return Err(format!("ratio {} far outside the band", row.ratio));
    }
    Ok(format!("median T = {}, ratio = {:.3}", row.median_t, row.ratio))
}

fn flood_containment(seed: u64, pairs: u64) -> std::result::Result<String, String> {
    let mut geom = StreamRng::new(trial_seed(seed, "verify:flood", 0));
    for i in 0..pairs {
        let w = geom.range_inclusive(16, 48) as i64;
        let h = geom.range_inclusive(16, 48) as i64;
        let p = *geom.choose(&[0.1, 0.2]);
        let a = SiteSet::sample(
            GridConfig::new(w as usize, h as usize),
            SimParams::new(p, trial_seed(seed, "verify:flood:grid", i), i).unwrap(),
        );
        let a0 = 1 + geom.below((w as u64 - 4).max(1)) as i64;
        let b0 = 1 + geom.below((h as u64 - 4).max(1)) as i64;
        let c0 = (a0 + 2 + geom.below(w as u64) as i64).min(w - 1);
        let d0 = (b0 + 2 + geom.below(h as u64) as i64).min(h - 1);
        let d = Droplet::new(a0, b0, c0, d0).unwrap();
        let f = flood(&d, &a).unwrap();
        let (_, field) = a.evolve_with_times(StepLimit::Unbounded);
        for y in d.b..=d.d {
            for x in d.a..=d.c {
                if f.time_at(x, y).unwrap() > field.time(x as usize, y as usize) {
                    return Err(format!("containment fails at ({x}, {y}) in pair {i}"));
                }
            }
        }
    }
    Ok(format!("{pairs} droplet/grid pairs contained"))
}

fn wave_extraction(seed: u64, instances: u64, out_dir: Option<&Path>) -> std::result::Result<String, String> {
    let mut geom = StreamRng::new(trial_seed(seed, "verify:waves", 0));
    let mut extracted = Vec::new();
    let mut i = 0u64;
    while extracted.len() < instances as usize && i < instances * 6 {
        i += 1;
        let w = geom.range_inclusive(14, 40) as i64;
        let h = geom.range_inclusive(20, 60) as i64;
        let p = *geom.choose(&[0.05, 0.1]);
        let a = SiteSet::sample(
            GridConfig::new(w as usize, h as usize),
            SimParams::new(p, trial_seed(seed, "verify:waves:grid", i), i).unwrap(),
        );
        let d = Droplet::new(0, 0, w - 1, h - 1).unwrap();
        let f = flood(&d, &a).unwrap();
        let mut site = None;
        for y in 0..h {
            for x in 0..w {
                let t = f.time_at(x, y).unwrap();
                let width = (x.min(w - 1 - x) + 1) as u64;
                if t > 0 && u64::from(t) < width && site.map_or(true, |(bt, _, _)| t > bt) {
                    site = Some((t, x, y));
                }
            }
        }
        let Some((t, x, y)) = site else { continue };
        let ex = extract_wave_from_flood(&d, &f, x, y).map_err(|e| e.to_string())?;
        if validate_wave(&ex.wave).is_err() || ex.height < ex.site_height || ex.time > u64::from(t) {
            return Err(format!("postcondition failure at instance {i}"));
        }
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("height".into(), serde_json::json!(ex.height));
        diagnostics.insert("time".into(), serde_json::json!(ex.time));
        diagnostics.insert("flood_time".into(), serde_json::json!(ex.flood_time));
        diagnostics.insert("droplets".into(), serde_json::json!(ex.wave.len()));
        extracted.push(TrialRecord {
            trial_index: extracted.len() as u64,
            seed: trial_seed(seed, "verify:waves:grid", i),
            n: w as u64,
            p,
            t: Some(t),
            longest_empty_double_line: None,
            diagnostics,
        });
    }
    if (extracted.len() as u64) < instances {
        return Err(format!("only {} eligible instances", extracted.len()));
    }
    if let Some(dir) = out_dir {
        let count = extracted.len() as u64;
        write_records(dir, "verify-waves", count, false, |i| extracted[i as usize].clone())
            .map_err(|e| e.to_string())?;
    }
    Ok(format!("{} waves extracted and validated", extracted.len()))
}

fn restriction_laws(seed: u64, wanted: u64) -> std::result::Result<String, String> {
    let mut geom = StreamRng::new(trial_seed(seed, "verify:restrict", 0));
    let sigma = 4u32;
    let gamma = 10.0;
    let mut done = 0u64;
    let mut trial = 0u64;
    while done < wanted && trial < wanted * 4 {
        trial += 1;
        let k = geom.range_inclusive(1, 5);
        let mut ds = Vec::new();
        let mut b = 1i64;
        let mut x = 5i64;
        for _ in 0..k {
            let w = geom.range_inclusive(1, 4) as i64;
            let h = geom.range_inclusive(1, 4) as i64;
            ds.push(Droplet::new(x, b, x + w - 1, b + h - 1).unwrap());
            b = b + h + geom.below(2) as i64;
            x += w + 3 + geom.below(4) as i64;
        }
        let wave = Wave::new(ds.clone()).unwrap();
        if validate_wave(&wave).is_err() {
            continue;
        }
        let gw = ds.iter().map(|d| d.c).max().unwrap() + 2;
        let gh = ds.iter().map(|d| d.d).max().unwrap() + 2;
        let mut a = SiteSet::empty(GridConfig::new(gw as usize, gh as usize));
        for d in &ds {
            for y in d.b..=d.d {
                for x in d.a..=d.c {
                    a.insert(x as usize, y as usize);
                }
            }
        }
        let parent = Droplet::new(0, 0, gw - 1, gh - 1).unwrap();
        let wm = wave_metrics(&wave, &parent).map_err(|e| e.to_string())?;
        let restricted = restrict_wave(&wave, sigma, gamma).map_err(|e| e.to_string())?;
        let rm = restricted_metrics(&restricted).map_err(|e| e.to_string())?;
        if rm.height < wm.height || rm.time > wm.time {
            return Err(format!("height/time law fails at trial {trial}"));
        }
        audit_restriction(&wave, &restricted, &a).map_err(|e| e.to_string())?;
        done += 1;
    }
    if done < wanted {
        return Err(format!("only {done} valid generated waves"));
    }
    Ok(format!("{done} restrictions audited"))
}

fn coffeetime(seed: u64) -> std::result::Result<String, String> {
    let reports = experiments::coffeetime_corpus_check(trial_seed(seed, "verify:coffee", 0))
        .map_err(|e| e.to_string())?;
    let failures = reports.iter().filter(|r| !r.pass).count();
    if failures > 0 {
        return Err(format!("{failures} of {} counts exceed the bound", reports.len()));
    }
    Ok(format!("{} counts within the bound", reports.len()))
}

fn harris(seed: u64) -> std::result::Result<String, String> {
    let (e, f, g) = experiments::harris_default_suite(40, 0.2);
    let report = experiments::harris_check(&e, &f, &g, 40, 0.2, 1500, trial_seed(seed, "verify:harris", 0))
        .map_err(|e| e.to_string())?;
    if !report.increasing_pair.ok {
        return Err(format!("increasing pair: {:?}", report.increasing_pair));
    }
    if !report.mixed_pair.ok {
        return Err(format!("mixed pair: {:?}", report.mixed_pair));
    }
    let band = experiments::independent_events_band(40, 0.2, 1500, trial_seed(seed, "verify:harris", 1))
        .map_err(|e| e.to_string())?;
    if !band.ok {
        return Err(format!("independence band: {band:?}"));
    }
    Ok("correlation inequalities and independence band hold".into())
}

fn appendix(_seed: u64) -> std::result::Result<String, String> {
    let report = experiments::appendix_calc_check(1e-16, 0.05, 36.0, 1e6, 60).map_err(|e| e.to_string())?;
    for v in &report.variants {
        if !v.pass {
            return Err(format!("{:?}: min {} at {:?}", v.variant, v.min_f, v.argmin));
        }
    }
    Ok(format!(
        "min f = {:.3e} (full), {:.3e} (half)",
        report.variants[0].min_f, report.variants[1].min_f
    ))
}

fn recursions(seed: u64, params: &ScaleParams) -> std::result::Result<String, String> {
    let eta = experiments::eta_recursion_check(8, 0.35, 2000, params, trial_seed(seed, "verify:eta", 0));
    let theta = experiments::theta_recursion_check(8, 0.35, 2000, params, trial_seed(seed, "verify:theta", 0));
    for report in [&eta, &theta] {
        if report.verdict == Verdict::Fail {
            return Err(format!("{} recursion significantly violated: {report:?}", report.kind));
        }
        if report.large.point > report.small.point.max(0.02) + 0.05 {
            return Err(format!("{} rate failed to contract: {report:?}", report.kind));
        }
    }
    Ok(format!(
        "eta: {:?} ({:.4} -> {:.4}), theta: {:?} ({:.4} -> {:.4})",
        eta.verdict, eta.small.point, eta.large.point,
        theta.verdict, theta.small.point, theta.large.point
    ))
}

fn critical_size(seed: u64) -> std::result::Result<String, String> {
    let result = experiments::estimate_critical_k(0.3, 400, 0.05, trial_seed(seed, "verify:k", 0))
        .map_err(|e| e.to_string())?;
    if !experiments::monotone_within_ci(&result.evaluated) {
        return Err("bisection path not monotone within confidence".into());
    }
    if !(result.scale.mu_hat > 0.0) {
        return Err(format!("mu_hat = {}", result.scale.mu_hat));
    }
    Ok(format!("K = {}, mu = {:.4}", result.scale.k_hat, result.scale.mu_hat))
}

fn upright(seed: u64, params: &ScaleParams) -> std::result::Result<String, String> {
    let vacuous = experiments::upright_bound_probe(20, 0.3, 200, 1000.0, params, trial_seed(seed, "verify:up", 0))
        .map_err(|e| e.to_string())?;
    if vacuous.verdict != experiments::UprightVerdict::Vacuous {
        return Err(format!("expected a vacuous bound, got {:?}", vacuous.verdict));
    }
    let tuned = experiments::upright_bound_probe(200, 0.4, 60, 0.1, params, trial_seed(seed, "verify:up", 1))
        .map_err(|e| e.to_string())?;
    if tuned.verdict != experiments::UprightVerdict::Pass {
        return Err(format!("tuned probe: {tuned:?}"));
    }
    Ok("vacuous case flagged, binding case passes".into())
}

fn formats(seed: u64) -> std::result::Result<String, String> {
    let mut geom = StreamRng::new(trial_seed(seed, "verify:fmt", 0));
    for i in 0..40u64 {
        let w = geom.range_inclusive(1, 70) as usize;
        let h = geom.range_inclusive(1, 40) as usize;
        let a = SiteSet::sample(
            GridConfig::new(w, h),
            SimParams::new(geom.next_f64(), trial_seed(seed, "verify:fmt:grid", i), i).unwrap(),
        );
        let text_ok = gridfmt::parse(&gridfmt::render(&a).unwrap()).unwrap() == a;
        let binary_ok = gridfmt::from_binary(&gridfmt::to_binary(&a)).unwrap() == a;
        if !text_ok || !binary_ok {
            return Err(format!("round-trip failure at grid {i}"));
        }
    }
    Ok("40 grids round-tripped through both formats".into())
}
