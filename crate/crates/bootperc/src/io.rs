//! Config-driven experiment runner with deterministic, resumable outputs.
//!
//! A run is described by a JSON config (strictly validated), executed under
//! a fixed master seed, and persisted as a manifest plus one JSONL stream
//! per experiment, a JSON summary and a CSV table. Trial records depend
//! only on `(master seed, experiment id, trial index)`, so interrupted runs
//! can be resumed by regenerating exactly the missing indices; the merged
//! stream is byte-identical to an uninterrupted run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::droplet::{rectangles_process, CriticalParams, Droplet};
use crate::error::{Error, Result};
use crate::experiments::{self, TrialRecord};
use crate::grid::{EvolveOutcome, GridConfig, SimParams, SiteSet, StepLimit};
use crate::rng::trial_seed;
use crate::scales::ScaleParams;
use crate::stats::Verdict;
use crate::verify;
use crate::waves;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Closure,
    Scan,
    EstimateK,
    Slab,
    Waves,
    Verify,
}

fn default_n() -> u64 {
    64
}
fn default_p() -> f64 {
    0.3
}
fn default_trials() -> u64 {
    100
}
fn default_tolerance() -> f64 {
    0.05
}
fn default_k_max() -> u64 {
    experiments::DEFAULT_K_MAX
}
fn default_m_cells() -> Vec<u64> {
    vec![8, 16]
}

/// One experiment run. Everything except `command` has a default, and the
/// schema rejects unknown fields.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default)]
    pub n_list: Vec<u64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub p_list: Vec<f64>,
    /// Slab heights for the slab command.
    #[serde(default)]
    pub m_list: Vec<f64>,
    /// Cell sides for the scan command.
    #[serde(default = "default_m_cells")]
    pub m_cells: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    #[serde(default)]
    pub scales: ScaleParams,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub resume: bool,
    /// Worker threads; 0 means automatic.
    #[serde(default)]
    pub threads: usize,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::BadConfig("trials must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::BadConfig("n must be positive".into()));
        }
        for &p in std::iter::once(&self.p).chain(&self.p_list) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::BadConfig(format!("p = {p} outside [0, 1]")));
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance < 0.5) {
            return Err(Error::BadConfig(format!("tolerance = {} outside (0, 0.5)", self.tolerance)));
        }
        self.scales.validate()?;
        Ok(())
    }

    pub fn ps(&self) -> Vec<f64> {
        if self.p_list.is_empty() {
            vec![self.p]
        } else {
            self.p_list.clone()
        }
    }

    pub fn ns(&self) -> Vec<u64> {
        if self.n_list.is_empty() {
            vec![self.n]
        } else {
            self.n_list.clone()
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("bootperc-out"))
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub resume: bool,
    pub threads: Option<usize>,
}

pub fn apply_overrides(config: &mut RunConfig, overrides: &CliOverrides) {
    if let Some(trials) = overrides.trials {
        config.trials = trials;
    }
    if let Some(seed) = overrides.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.out_dir = Some(out.clone());
    }
    if overrides.resume {
        config.resume = true;
    }
    if let Some(threads) = overrides.threads {
        config.threads = threads;
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExperimentMarker {
    pub completed_trials: u64,
    pub checksum: u64,
    pub complete: bool,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub config: RunConfig,
    pub experiments: BTreeMap<String, ExperimentMarker>,
}

impl RunManifest {
    fn new(config: &RunConfig) -> Self {
        RunManifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            experiments: BTreeMap::new(),
        }
    }

    fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    fn store(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Writes (or resumes) one JSONL stream of trial records. `generate` must be
/// a pure function of the trial index; on resume only missing indices are
/// regenerated and the merged file is identical to a fresh run.
pub fn write_records(
    dir: &Path,
    name: &str,
    trials: u64,
    resume: bool,
    generate: impl Fn(u64) -> TrialRecord + Sync,
) -> Result<(PathBuf, u64)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.jsonl"));
    let mut existing: BTreeMap<u64, String> = BTreeMap::new();
    if resume && path.exists() {
        for line in fs::read_to_string(&path)?.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let record: TrialRecord = serde_json::from_str(line)
                .map_err(|e| Error::BadGridData(format!("{name}.jsonl: {e}")))?;
            if record.trial_index < trials {
                existing.insert(record.trial_index, line.to_string());
            }
        }
    }
    let missing: Vec<u64> = (0..trials).filter(|i| !existing.contains_key(i)).collect();
    use rayon::prelude::*;
    let fresh: Vec<(u64, String)> = missing
        .into_par_iter()
        .map(|i| {
            let record = generate(i);
            debug_assert_eq!(record.trial_index, i);
            (i, serde_json::to_string(&record).expect("record serializes"))
        })
        .collect();
    existing.extend(fresh);
    let mut body = String::new();
    for line in existing.values() {
        body.push_str(line);
        body.push('\n');
    }
    fs::write(&path, &body)?;
    Ok((path, fnv64(body.as_bytes())))
}

fn write_summary_json(dir: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn write_summary_csv(dir: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(dir.join("summary.csv"))?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Exit status of a run: 0 on success, 1 when a hard assertion or a FAIL
/// verdict surfaced, 2 for invalid configs (mapped by the binary).
pub fn run(config: &RunConfig) -> Result<i32> {
    config.validate()?;
    let threads = if config.threads > 0 {
        config.threads
    } else {
        std::env::var("BOOTPERC_THREADS").ok().and_then(|v| v.parse().ok()).unwrap_or(0)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::BadConfig(e.to_string()))?;
    pool.install(|| dispatch(config))
}

fn dispatch(config: &RunConfig) -> Result<i32> {
    let dir = config.out_dir();
    fs::create_dir_all(&dir)?;
    let manifest_path = dir.join("manifest.json");
    let mut manifest = if config.resume && manifest_path.exists() {
        RunManifest::load(&manifest_path)?
    } else {
        RunManifest::new(config)
    };
    manifest.config = config.clone();
    let mut failed = false;
    let mut mark = |manifest: &mut RunManifest, name: &str, trials: u64, checksum: u64| -> Result<()> {
        if let Some(old) = manifest.experiments.get(name) {
            if old.complete && old.checksum != checksum {
                return Err(Error::ExperimentFailed(format!(
                    "{name}: resumed stream checksum {checksum:#x} != recorded {:#x}",
                    old.checksum
                )));
            }
        }
        manifest.experiments.insert(
            name.to_string(),
            ExperimentMarker { completed_trials: trials, checksum, complete: true },
        );
        Ok(())
    };

    match config.command {
        Command::Simulate => {
            let (rows, _) = experiments::time_scaling_experiment(
                &config.ns(),
                &config.ps(),
                config.trials,
                config.master_seed,
            );
            for &n in &config.ns() {
                for &p in &config.ps() {
                    let name = format!("simulate-n{n}-p{p}");
                    let label = format!("time-scaling:n={n}:p={p}");
                    let grid = GridConfig::square(n as usize);
                    let (_, checksum) = write_records(&dir, &name, config.trials, config.resume, |i| {
                        simulate_trial(grid, n, p, trial_seed(config.master_seed, &label, i), i)
                    })?;
                    mark(&mut manifest, &name, config.trials, checksum)?;
                }
            }
            let mut csv_rows = Vec::new();
            for r in &rows {
                csv_rows.push(vec![
                    r.n.to_string(),
                    r.p.to_string(),
                    r.trials.to_string(),
                    r.percolated.to_string(),
                    r.median_t.to_string(),
                    r.predicted.to_string(),
                    r.ratio.to_string(),
                ]);
            }
            write_summary_csv(&dir, &["n", "p", "trials", "percolated", "median_t", "predicted", "ratio"], &csv_rows)?;
            write_summary_json(&dir, &serde_json::json!({ "command": "simulate", "rows": rows }))?;
        }
        Command::Closure => {
            let n = config.n;
            let p = config.p;
            let grid = GridConfig::square(n as usize);
            let label = format!("closure:n={n}:p={p}");
            let (_, checksum) = write_records(&dir, "closure", config.trials, config.resume, |i| {
                closure_trial(grid, n, p, trial_seed(config.master_seed, &label, i), i)
            })?;
            mark(&mut manifest, "closure", config.trials, checksum)?;
            // Export the first trial's merge trace for external tooling.
            let a = SiteSet::sample(grid, SimParams::new(p, trial_seed(config.master_seed, &label, 0), 0)?);
            fs::write(dir.join("trace.txt"), rectangles_process(&a).export_text())?;
            write_summary_json(&dir, &serde_json::json!({
                "command": "closure", "n": n, "p": p, "trials": config.trials,
            }))?;
            write_summary_csv(&dir, &["n", "p", "trials"], &[vec![n.to_string(), p.to_string(), config.trials.to_string()]])?;
        }
        Command::Scan => {
            let mut reports = Vec::new();
            for &m in &config.m_cells {
                for &p in &config.ps() {
                    let seed = trial_seed(config.master_seed, "scan", m);
                    reports.push(experiments::eta_recursion_check(m, p, config.trials, &config.scales, seed));
                    reports.push(experiments::theta_recursion_check(m, p, config.trials, &config.scales, seed ^ 1));
                }
            }
            failed |= reports.iter().any(|r| r.verdict == Verdict::Fail);
            let csv_rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.kind.to_string(),
                        r.m.to_string(),
                        r.p.to_string(),
                        r.small.point.to_string(),
                        r.large.point.to_string(),
                        r.bound.to_string(),
                        format!("{:?}", r.verdict),
                    ]
                })
                .collect();
            write_summary_csv(&dir, &["kind", "m", "p", "rate_m", "rate_2m", "bound", "verdict"], &csv_rows)?;
            write_summary_json(&dir, &serde_json::json!({ "command": "scan", "reports": reports }))?;
        }
        Command::EstimateK => {
            let mut results = Vec::new();
            for &p in &config.ps() {
                let seed = trial_seed(config.master_seed, "estimate-k", (p * 1e6) as u64);
                let result = experiments::estimate_critical_k_with_budget(
                    p,
                    config.trials,
                    config.tolerance,
                    seed,
                    config.k_max,
                )?;
                failed |= !experiments::monotone_within_ci(&result.evaluated);
                results.push(result);
            }
            let csv_rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| {
                    vec![
                        r.scale.p.to_string(),
                        r.scale.k_hat.to_string(),
                        r.scale.mu_hat.to_string(),
                        r.tolerance_met.to_string(),
                    ]
                })
                .collect();
            write_summary_csv(&dir, &["p", "k_hat", "mu_hat", "tolerance_met"], &csv_rows)?;
            write_summary_json(&dir, &serde_json::json!({ "command": "estimate-k", "results": results }))?;
        }
        Command::Slab => {
            let ms = if config.m_list.is_empty() { vec![20.0] } else { config.m_list.clone() };
            let mut reports = Vec::new();
            for &p in &config.ps() {
                for &m in &ms {
                    let seed = trial_seed(config.master_seed, "slab", (m * 1e3) as u64);
                    let report = experiments::slab_experiment(p, m, &config.scales, config.trials, seed)?;
                    let name = format!("slab-p{p}-m{m}");
                    let label = format!("slab:p={p}:m={m}");
                    let lg = report.lg;
                    let sh = report.sh;
                    let grid = GridConfig::new(lg as usize, sh as usize);
                    let (_, checksum) = write_records(&dir, &name, report.attempts, config.resume, |i| {
                        slab_trial(grid, lg, sh, p, &config.scales, trial_seed(seed, &label, i), i)
                    })?;
                    mark(&mut manifest, &name, report.attempts, checksum)?;
                    reports.push(report);
                }
            }
            let csv_rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.p.to_string(),
                        r.m_scale.to_string(),
                        r.accepted.to_string(),
                        r.fast_given_subcritical.point.to_string(),
                        r.mean_flood.to_string(),
                        r.mean_flood_over_lg.to_string(),
                    ]
                })
                .collect();
            write_summary_csv(&dir, &["p", "m", "accepted", "fast_given_subcritical", "mean_flood", "mean_flood_over_lg"], &csv_rows)?;
            write_summary_json(&dir, &serde_json::json!({ "command": "slab", "reports": reports }))?;
        }
        Command::Waves => {
            let report = waves_command(config, &dir)?;
            write_summary_json(&dir, &report)?;
            write_summary_csv(
                &dir,
                &["instances", "extracted", "mean_height", "mean_time"],
                &[vec![
                    report["instances"].to_string(),
                    report["extracted"].to_string(),
                    report["mean_height"].to_string(),
                    report["mean_time"].to_string(),
                ]],
            )?;
        }
        Command::Verify => {
            let report = verify::run_verify(config.master_seed, Some(&dir))?;
            for check in &report.checks {
                println!("{}: {}", if check.pass { "PASS" } else { "FAIL" }, check.name);
            }
            write_summary_json(&dir, &serde_json::to_value(&report)?)?;
            let csv_rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), c.pass.to_string(), c.detail.clone()])
                .collect();
            write_summary_csv(&dir, &["check", "pass", "detail"], &csv_rows)?;
            failed |= !report.all_pass;
        }
    }
    manifest.store(&manifest_path)?;
    Ok(if failed { 1 } else { 0 })
}

fn simulate_trial(grid: GridConfig, n: u64, p: f64, seed: u64, index: u64) -> TrialRecord {
    let a = SiteSet::sample(grid, SimParams::new(p, seed, index).expect("valid p"));
    let scan = a.longest_empty_double_line();
    let ev = a.evolve(StepLimit::Unbounded);
    let t = match ev.outcome {
        EvolveOutcome::Percolated(t) => Some(t),
        _ => None,
    };
    if let (Some(t), Some(interior)) = (t, scan.interior) {
        let l = interior.length as u64;
        if l >= 3 {
            assert!(u64::from(t) >= (l - 1) / 2, "blocking bound violated at trial {index}");
        }
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("occupied".into(), serde_json::json!(a.count()));
    TrialRecord {
        trial_index: index,
        seed,
        n,
        p,
        t,
        longest_empty_double_line: scan.best,
        diagnostics,
    }
}

fn closure_trial(grid: GridConfig, n: u64, p: f64, seed: u64, index: u64) -> TrialRecord {
    let a = SiteSet::sample(grid, SimParams::new(p, seed, index).expect("valid p"));
    let trace = rectangles_process(&a);
    let closure = a.evolve(StepLimit::Unbounded).closure;
    assert_eq!(
        trace.union_of_finals(grid.width, grid.height),
        closure,
        "closure mismatch at trial {index}"
    );
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("nodes".into(), serde_json::json!(trace.nodes.len()));
    diagnostics.insert("finals".into(), serde_json::json!(trace.finals.len()));
    diagnostics.insert("closure_size".into(), serde_json::json!(closure.count()));
    TrialRecord {
        trial_index: index,
        seed,
        n,
        p,
        t: None,
        longest_empty_double_line: None,
        diagnostics,
    }
}

fn slab_trial(grid: GridConfig, lg: u64, sh: u64, p: f64, params: &ScaleParams, seed: u64, index: u64) -> TrialRecord {
    let a = SiteSet::sample(grid, SimParams::new(p, seed, index).expect("valid p"));
    let slab = Droplet::new(0, 0, lg as i64 - 1, sh as i64 - 1).unwrap();
    let crit = CriticalParams::new(p).expect("valid p");
    let verdict = waves::classify_slab(&slab, &a, p, params, &crit).expect("slab shape");
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("subcritical".into(), serde_json::json!(verdict.subcritical));
    diagnostics.insert("fast".into(), serde_json::json!(verdict.fast));
    diagnostics.insert("flood_total".into(), serde_json::json!(verdict.flood_total));
    TrialRecord {
        trial_index: index,
        seed,
        n: lg,
        p,
        t: None,
        longest_empty_double_line: None,
        diagnostics,
    }
}

fn waves_command(config: &RunConfig, dir: &Path) -> Result<serde_json::Value> {
    let p = config.p;
    let crit = CriticalParams::new(p)?;
    let w = config.n.max(8);
    let h = 3 * w;
    let grid = GridConfig::new(w as usize, h as usize);
    let droplet = Droplet::new(0, 0, w as i64 - 1, h as i64 - 1).unwrap();
    let mut extracted = 0u64;
    let mut heights = Vec::new();
    let mut times = Vec::new();
    let mut first_dump = true;
    for i in 0..config.trials {
        let label = format!("waves:p={p}");
        let a = SiteSet::sample(grid, SimParams::new(p, trial_seed(config.master_seed, &label, i), i)?);
        let flood = crate::flood::flood(&droplet, &a)?;
        let mut site = None;
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let t = flood.time_at(x, y)?;
                let width = (x.min(w as i64 - 1 - x) + 1) as u64;
                if t > 0 && u64::from(t) < width {
                    if site.map_or(true, |(bt, _, _)| t > bt) {
                        site = Some((t, x, y));
                    }
                }
            }
        }
        let Some((_, x, y)) = site else { continue };
        let ex = waves::extract_wave_from_flood(&droplet, &flood, x, y)?;
        heights.push(ex.height as f64);
        times.push(ex.time as f64);
        extracted += 1;
        if first_dump {
            fs::write(dir.join("wave.txt"), ex.wave.to_text())?;
            let subcritical = ex.wave.droplets().iter().all(|d| (d.phi() as f64) <= crit.gamma);
            if subcritical {
                let restricted = waves::restrict_wave(&ex.wave, config.scales.sigma, crit.gamma)?;
                waves::audit_restriction(&ex.wave, &restricted, &a)?;
                fs::write(dir.join("restricted.txt"), restricted.to_text())?;
            }
            first_dump = false;
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(serde_json::json!({
        "command": "waves",
        "instances": config.trials,
        "extracted": extracted,
        "mean_height": mean(&heights),
        "mean_time": mean(&times),
    }))
}
