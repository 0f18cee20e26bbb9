//! Experiment harness: TOML configs in, `results.csv` and `meta.json` out.

pub mod config;
pub mod error;
pub mod results;
pub mod runners;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};
use results::ResultRow;
use runners::RunContext;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed_offset: u64,
    /// Simulate an interruption of `rdm-estimate` after this many batches.
    pub stop_after_batches: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub rows: Vec<ResultRow>,
    pub meta: serde_json::Value,
}

/// Runs without touching the filesystem (except for `rdm-estimate`, which
/// needs `out_dir`).
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions, out_dir: Option<&Path>) -> LabResult<RunReport> {
    cfg.validate()?;
    let mut ctx = RunContext::new(cfg, opts.seed_offset);
    ctx.out_dir = out_dir.map(Path::to_path_buf);
    ctx.stop_after_batches = opts.stop_after_batches;
    let t = Instant::now();
    let rows = runners::run(&ctx)?;
    let secs = t.elapsed().as_secs_f64();
    let meta = meta(cfg, &ctx, opts, secs)?;
    Ok(RunReport { rows, meta })
}

/// Runs and writes `results.csv` and `meta.json` into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions, out_dir: &Path) -> LabResult<RunReport> {
    std::fs::create_dir_all(out_dir)?;
    let report = execute(cfg, opts, Some(out_dir))?;
    results::write_csv(&out_dir.join("results.csv"), &report.rows)?;
    std::fs::write(out_dir.join("meta.json"), serde_json::to_string_pretty(&report.meta)?)?;
    Ok(report)
}

pub fn output_paths(out_dir: &Path) -> (PathBuf, PathBuf) {
    (out_dir.join("results.csv"), out_dir.join("meta.json"))
}

fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn meta(cfg: &ExperimentConfig, ctx: &RunContext, opts: &RunOptions, secs: f64) -> LabResult<serde_json::Value> {
    let snapshots = ctx.snapshots();
    Ok(json!({
        "config": cfg,
        "config_hash": ctx.hash,
        "seed_offset": opts.seed_offset,
        "seeds": ctx.seeds,
        "git_hash": git_hash(),
        "versions": {
            "shadowrdm-lab": env!("CARGO_PKG_VERSION"),
            "csv_schema": results::HEADER,
            "config_schema": config::SCHEMA_VERSION,
        },
        "defaults": {
            "boundary": "open unless the model says periodic",
            "trunc2": "three-body terms of the QSE matrix elements dropped",
            "l1_convention": "full-tuple sum over all ordered index tuples",
            "index_samples": config::DEFAULT_INDEX_SAMPLES,
            "zero_denominator_rtol": shadowrdm::cumulant::ZERO_DENOMINATOR_RTOL,
            "entropy": "von Neumann entropy in bits of modes 0..N/2",
            "qse_couplers": "single annihilators a_p on the scanned ground sector",
            "overlap_threshold": shadowrdm::qse::DEFAULT_THRESHOLD,
        },
        "telemetry": {
            "snapshots": snapshots,
            "seconds": secs,
            "snapshots_per_second": if secs > 0.0 { snapshots as f64 / secs } else { 0.0 },
            "threads": rayon::current_num_threads(),
        },
    }))
}
