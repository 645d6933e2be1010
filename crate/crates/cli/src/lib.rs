//! Experiment harness for the `combeo` optimizers: JSON configs in, trace
//! CSVs, median summaries, a manifest and SVG plots out.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod runner;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use combeo::BenchmarkId;

pub use config::{parse_config, parse_config_file, ConfigIssue, ExperimentConfig, OptimizerKind, RunSpec};
pub use error::HarnessError;
pub use output::{read_trace, write_results, write_trace, Manifest, TraceRecord, TRACE_HEADER};
pub use plot::{render_plot, render_svg, Metric, Series};
pub use runner::{run_experiment, summarize, RunOutcome, SummaryRow};

/// Overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub outdir: Option<PathBuf>,
    /// Concurrent runs; 0 means one per core.
    pub jobs: usize,
}

/// Parses, runs and writes one config. Fails with [`HarnessError::RunsFailed`]
/// after writing everything if any single run failed.
pub fn run_config(path: &Path, options: &RunOptions) -> Result<Manifest, HarnessError> {
    let mut config = parse_config_file(path)?;
    if let Some(seed) = options.seed {
        config.override_seed(seed);
    }
    if let Some(dir) = &options.outdir {
        config.outdir = dir.clone();
    }
    let instances = runner::build_instances(&config)?;
    let outcomes = run_experiment(&config, options.jobs)?;
    let manifest = write_results(&config, &instances, &outcomes, &config.outdir)?;
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    if failed > 0 {
        return Err(HarnessError::RunsFailed(failed));
    }
    Ok(manifest)
}

/// Table of benchmark ids, boxes and names.
pub fn bench_list() -> String {
    let mut out = String::from("id   kind       box             name\n");
    for id in BenchmarkId::ALL {
        let (lo, hi) = id.domain();
        let kind = if id.is_basic() { "basic" } else { "composite" };
        let _ = writeln!(out, "{:<4} {:<10} [{:>4}, {:>3}]      {}", id.to_string(), kind, lo, hi, id.name());
    }
    out.push_str("\noptimizers: ");
    out.push_str(&OptimizerKind::ALL.map(|k| k.as_str()).join(", "));
    out.push('\n');
    out
}
