//! Scenario configuration, check execution and report files.

mod checks;
mod config;
mod convergence;
mod report;
pub mod sampling;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use checks::{landed_on_fiber, perturbed_seed, run_check, sized_pair, Artifact, CheckOutput, Context};
pub use config::{OutputSpec, Samples, ScanSpec, ScenarioConfig, SurfaceSpec, Tolerances, CHECKS};
pub use convergence::{emit_convergence, fit_order, ConvergenceRow, ConvergenceTable, EXACT_FLOOR, SECOND_ORDER};
pub use report::{CheckReport, Gate, Order, ReportRecord, ScenarioReport, REL_FLOOR};

use crate::error::{Error, Result};
use crate::moduli::ModuliConfig;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BSQ_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "bsq-out";

/// Command-line overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: None, out_dir: None, tol_scale: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ScenarioReport,
    /// Directory holding `report.json`, `timings.json` and the tables.
    pub dir: PathBuf,
    /// Seconds per check; not part of the report so reruns stay byte-identical.
    pub timings: BTreeMap<String, f64>,
}

/// Evaluate the selected checks, concurrently, and assemble the report
/// sorted by check id.
pub fn evaluate(config: &ScenarioConfig, options: &RunOptions) -> Result<(ScenarioReport, Vec<Artifact>, BTreeMap<String, f64>)> {
    config.validate()?;
    if !(options.tol_scale > 0.0 && options.tol_scale.is_finite()) {
        return Err(Error::Config(format!("tolerance scale must be positive, got {}", options.tol_scale)));
    }
    let surface = config.surface()?;
    let seed = options.seed.unwrap_or(config.seed);
    let moduli = match config.tau {
        Some(t) => ModuliConfig::for_surface(&surface).with_tau(t)?,
        None => ModuliConfig::for_surface(&surface),
    };
    let ctx = Context { config, surface, seed, tol: config.tolerances.scaled(options.tol_scale), moduli };
    let mut ids = config.checks.clone();
    ids.sort();
    let results: Vec<(CheckOutput, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = ids
            .iter()
            .map(|id| {
                let ctx = &ctx;
                scope.spawn(move || {
                    let t0 = Instant::now();
                    let out = run_check(id, ctx);
                    (out, t0.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
    });
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();
    let mut timings = BTreeMap::new();
    for (out, secs) in results {
        timings.insert(out.report.id.clone(), secs);
        artifacts.extend(out.artifacts);
        checks.push(out.report);
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = ScenarioReport {
        scenario: config.name.clone(),
        seed,
        surface: config.surface,
        n: config.nodes,
        tau: moduli.tau,
        tol_scale: options.tol_scale,
        checks,
        pass,
    };
    Ok((report, artifacts, timings))
}

/// Output directory: flag, then config, then environment, then `bsq-out`.
pub fn output_root(config: &ScenarioConfig, options: &RunOptions) -> PathBuf {
    options
        .out_dir
        .clone()
        .or_else(|| config.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents).map_err(|e| Error::Io(format!("{}: {e}", dir.join(name).display())))
}

/// Run a parsed scenario and write `report.json`, `timings.json` and the
/// check tables to `<out>/<name>/`.
pub fn run_config(config: &ScenarioConfig, options: &RunOptions) -> Result<RunOutcome> {
    let (report, artifacts, timings) = evaluate(config, options)?;
    let dir = output_root(config, options).join(&config.name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    write(&dir, "report.json", &report.to_json())?;
    let mut t = serde_json::to_string_pretty(&timings).expect("timings serialize");
    t.push('\n');
    write(&dir, "timings.json", &t)?;
    for a in &artifacts {
        write(&dir, &a.name, &a.contents)?;
    }
    Ok(RunOutcome { report, dir, timings })
}

/// Load, validate and run the scenario at `path`.
pub fn run_scenario(path: &Path, options: &RunOptions) -> Result<RunOutcome> {
    run_config(&ScenarioConfig::load(path)?, options)
}

/// Read report files and fit convergence orders across them; writes
/// `convergence.csv` and one `.dat` file per group to `out_dir`.
pub fn converge_reports(paths: &[PathBuf], out_dir: &Path, min_order: f64) -> Result<ConvergenceTable> {
    let mut records = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        let report = ScenarioReport::from_json(&text)?;
        records.extend(report.checks.into_iter().flat_map(|c| c.records));
    }
    let table = emit_convergence(&records, min_order)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    write(out_dir, "convergence.csv", &table.to_csv())?;
    for a in table.dat_files() {
        write(out_dir, &a.name, &a.contents)?;
    }
    Ok(table)
}
