//! Result files: per-run traces, run and summary tables, timings, instance
//! documents, plots and a manifest that lists all of them.

use std::fs;
use std::path::{Path, PathBuf};

use combeo::{BenchmarkInstance, RunRecord};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::plot::{render_svg, Series};
use crate::runner::{summarize, RunOutcome, SummaryRow};

pub const TRACE_HEADER: [&str; 5] = ["iteration", "tau", "best_cost", "mean_error", "evals"];

pub const SUMMARY_HEADER: [&str; 10] = [
    "experiment",
    "benchmark",
    "optimizer",
    "runs",
    "failed",
    "reached",
    "iterations_to_target",
    "median_iterations",
    "median_final_error",
    "median_evals",
];

/// Seventeen significant digits, enough to round-trip any f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One parsed trace line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub tau: f64,
    pub best_cost: f64,
    pub mean_error: f64,
    pub evals: u64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn trace_rows(record: &RunRecord) -> Vec<Vec<String>> {
    record
        .trace
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                fmt_float(r.tau),
                fmt_float(r.best_cost),
                fmt_float(r.mean_error),
                r.evals.to_string(),
            ]
        })
        .collect()
}

pub fn write_trace(path: &Path, record: &RunRecord) -> Result<(), HarnessError> {
    write_table(path, &TRACE_HEADER, &trace_rows(record))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(HarnessError::Trace {
            path: path.to_path_buf(),
            message: format!("expected header {:?}, found {:?}", TRACE_HEADER.join(","), header),
        });
    }
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

pub fn summary_rows(rows: &[SummaryRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|s| {
            vec![
                s.experiment.clone(),
                s.benchmark.clone(),
                s.optimizer.clone(),
                s.runs.to_string(),
                s.failed.to_string(),
                s.reached.to_string(),
                s.iterations_to_target.clone(),
                opt(s.median_iterations),
                opt(s.median_final_error.map(fmt_float)),
                opt(s.median_evals),
            ]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestRun {
    pub experiment: String,
    pub benchmark: String,
    pub optimizer: String,
    pub seed: u64,
    pub status: String,
    pub trace: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub runs: Vec<ManifestRun>,
    /// Every file written, relative to the output directory.
    pub files: Vec<String>,
}

fn case_name(config: &ExperimentConfig, outcome: &RunOutcome) -> (String, String, String) {
    let exp = &config.experiments[outcome.spec.experiment];
    (
        exp.label.clone(),
        exp.benchmarks[outcome.spec.benchmark].label.clone(),
        exp.optimizers[outcome.spec.optimizer].label.clone(),
    )
}

/// Writes every result file under `outdir` and returns the manifest.
pub fn write_results(
    config: &ExperimentConfig,
    instances: &[Vec<BenchmarkInstance>],
    outcomes: &[RunOutcome],
    outdir: &Path,
) -> Result<Manifest, HarnessError> {
    let mut files = Vec::new();
    for sub in ["traces", "instances"] {
        fs::create_dir_all(outdir.join(sub)).map_err(io_err(&outdir.join(sub)))?;
    }

    for (exp, exp_instances) in config.experiments.iter().zip(instances) {
        for (bench, inst) in exp.benchmarks.iter().zip(exp_instances) {
            let rel = format!("instances/{}_{}.json", exp.label, bench.label);
            let path = outdir.join(&rel);
            fs::write(&path, inst.to_json()?).map_err(io_err(&path))?;
            files.push(rel);
        }
    }

    let mut runs = Vec::new();
    let mut run_rows = Vec::new();
    let mut timing_rows = Vec::new();
    for outcome in outcomes {
        let (e, b, o) = case_name(config, outcome);
        let seed = outcome.spec.seed;
        timing_rows.push(vec![
            e.clone(),
            b.clone(),
            o.clone(),
            seed.to_string(),
            fmt_float(outcome.wall.as_secs_f64()),
        ]);
        match &outcome.result {
            Ok(record) => {
                let rel = format!("traces/{e}_{b}_{o}_s{seed}.csv");
                write_trace(&outdir.join(&rel), record)?;
                let last = record.final_row();
                run_rows.push(vec![
                    e.clone(),
                    b.clone(),
                    o.clone(),
                    seed.to_string(),
                    "ok".into(),
                    record.iterations().to_string(),
                    record.reached_target().to_string(),
                    fmt_float(last.mean_error),
                    fmt_float(record.best_cost),
                    record.evaluations.to_string(),
                    rel.clone(),
                    String::new(),
                ]);
                runs.push(ManifestRun {
                    experiment: e,
                    benchmark: b,
                    optimizer: o,
                    seed,
                    status: "ok".into(),
                    trace: Some(rel.clone()),
                });
                files.push(rel);
            }
            Err(message) => {
                run_rows.push(vec![
                    e.clone(),
                    b.clone(),
                    o.clone(),
                    seed.to_string(),
                    "failed".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    message.clone(),
                ]);
                runs.push(ManifestRun {
                    experiment: e,
                    benchmark: b,
                    optimizer: o,
                    seed,
                    status: format!("failed: {message}"),
                    trace: None,
                });
            }
        }
    }

    let runs_path = outdir.join("runs.csv");
    write_table(
        &runs_path,
        &[
            "experiment",
            "benchmark",
            "optimizer",
            "seed",
            "status",
            "iterations",
            "reached",
            "final_error",
            "best_cost",
            "evals",
            "trace",
            "error",
        ],
        &run_rows,
    )?;
    files.push("runs.csv".into());

    let summary_path = outdir.join("summary.csv");
    write_table(&summary_path, &SUMMARY_HEADER, &summary_rows(&summarize(config, outcomes)))?;
    files.push("summary.csv".into());

    // Wall times vary between invocations, so they live apart from the summary.
    let timing_path = outdir.join("timing.csv");
    write_table(
        &timing_path,
        &["experiment", "benchmark", "optimizer", "seed", "wall_seconds"],
        &timing_rows,
    )?;
    files.push("timing.csv".into());

    if config.plot {
        files.extend(write_case_plots(config, outcomes, outdir)?);
    }

    files.sort();
    let manifest = Manifest {
        config: config.clone(),
        runs,
        files,
    };
    let path = outdir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}

/// One log-scale best-cost plot per benchmark case, one series per run.
fn write_case_plots(
    config: &ExperimentConfig,
    outcomes: &[RunOutcome],
    outdir: &Path,
) -> Result<Vec<String>, HarnessError> {
    let dir = outdir.join("plots");
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut written = Vec::new();
    for (e, exp) in config.experiments.iter().enumerate() {
        for (b, bench) in exp.benchmarks.iter().enumerate() {
            let series: Vec<Series> = outcomes
                .iter()
                .filter(|r| r.spec.experiment == e && r.spec.benchmark == b)
                .filter_map(|r| {
                    let record = r.result.as_ref().ok()?;
                    Some(Series {
                        label: format!("{} s{}", exp.optimizers[r.spec.optimizer].label, r.spec.seed),
                        points: record.trace.iter().map(|t| (t.iteration as f64, t.best_cost)).collect(),
                    })
                })
                .collect();
            let title = format!("{} {}", exp.label, bench.label);
            if let Some(svg) = render_svg(&series, true, &title, "best cost") {
                let rel = format!("plots/{}_{}.svg", exp.label, bench.label);
                let path: PathBuf = outdir.join(&rel);
                fs::write(&path, svg).map_err(io_err(&path))?;
                written.push(rel);
            }
        }
    }
    Ok(written)
}
