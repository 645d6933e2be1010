//! Executes every run of a config, optionally in parallel, and aggregates the
//! per-seed records into median rows.

use std::time::{Duration, Instant};

use combeo::{BenchmarkInstance, RunRecord};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, RunSpec};
use crate::error::HarnessError;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub result: Result<RunRecord, String>,
    pub wall: Duration,
}

/// Instances indexed by experiment, then benchmark.
pub fn build_instances(config: &ExperimentConfig) -> Result<Vec<Vec<BenchmarkInstance>>, HarnessError> {
    config
        .experiments
        .iter()
        .map(|e| e.benchmarks.iter().map(|b| b.build().map_err(HarnessError::from)).collect())
        .collect()
}

/// Runs every (case, seed). A failing run is recorded and the rest proceed.
/// Outcomes come back in [`ExperimentConfig::runs`] order whatever `jobs` is;
/// `jobs = 0` uses every core.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<Vec<RunOutcome>, HarnessError> {
    let instances = build_instances(config)?;
    let runs = config.runs();
    info!("{} run(s) on {} job(s)", runs.len(), if jobs == 0 { "all".to_string() } else { jobs.to_string() });
    let execute = |spec: &RunSpec| {
        let exp = &config.experiments[spec.experiment];
        let optimizer = &exp.optimizers[spec.optimizer];
        let instance = &instances[spec.experiment][spec.benchmark];
        let start = Instant::now();
        let result = optimizer.run(instance, spec.seed).map_err(|e| e.to_string());
        if let Err(e) = &result {
            warn!(
                "{}/{}/{} seed {} failed: {e}",
                exp.label, exp.benchmarks[spec.benchmark].label, optimizer.label, spec.seed
            );
        }
        RunOutcome {
            spec: *spec,
            result,
            wall: start.elapsed(),
        }
    };
    if jobs == 1 {
        return Ok(runs.iter().map(execute).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    Ok(pool.install(|| runs.par_iter().map(execute).collect()))
}

/// Median statistics of one benchmark × optimizer case.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub benchmark: String,
    pub optimizer: String,
    pub runs: usize,
    pub failed: usize,
    pub reached: usize,
    /// Median iterations to target, or `>M` when the median run ran out of
    /// budget, or `failed` when no run completed.
    pub iterations_to_target: String,
    pub median_iterations: Option<usize>,
    pub median_final_error: Option<f64>,
    pub median_evals: Option<u64>,
}

/// Lower median: the middle element, or the smaller middle one for an even count.
pub fn lower_median<T: Clone>(mut values: Vec<T>, cmp: impl Fn(&T, &T) -> std::cmp::Ordering) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(cmp);
    Some(values[(values.len() - 1) / 2].clone())
}

pub fn summarize(config: &ExperimentConfig, outcomes: &[RunOutcome]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (e, exp) in config.experiments.iter().enumerate() {
        for (b, bench) in exp.benchmarks.iter().enumerate() {
            for (o, opt) in exp.optimizers.iter().enumerate() {
                let case: Vec<&RunOutcome> = outcomes
                    .iter()
                    .filter(|r| r.spec.experiment == e && r.spec.benchmark == b && r.spec.optimizer == o)
                    .collect();
                let records: Vec<&RunRecord> = case.iter().filter_map(|r| r.result.as_ref().ok()).collect();
                let reached = records.iter().filter(|r| r.reached_target()).count();
                // Unreached runs rank after every reached one.
                let ranked = lower_median(
                    records.iter().map(|r| (!r.reached_target(), r.iterations())).collect(),
                    |a, b| a.cmp(b),
                );
                let iterations_to_target = match ranked {
                    None => "failed".to_string(),
                    Some((false, it)) => it.to_string(),
                    Some((true, _)) => format!(">{}", opt.max_iter()),
                };
                rows.push(SummaryRow {
                    experiment: exp.label.clone(),
                    benchmark: bench.label.clone(),
                    optimizer: opt.label.clone(),
                    runs: case.len(),
                    failed: case.len() - records.len(),
                    reached,
                    iterations_to_target,
                    median_iterations: lower_median(records.iter().map(|r| r.iterations()).collect(), |a, b| a.cmp(b)),
                    median_final_error: lower_median(
                        records.iter().map(|r| r.final_row().mean_error).collect(),
                        |a: &f64, b: &f64| a.total_cmp(b),
                    ),
                    median_evals: lower_median(records.iter().map(|r| r.evaluations).collect(), |a, b| a.cmp(b)),
                });
            }
        }
    }
    rows
}
