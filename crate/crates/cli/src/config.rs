//! Experiment configuration: a JSON document listing benchmark × optimizer
//! matrices and the seeds to run them with.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use combeo::{
    default_group_size, make_instance_with, run_best_memory, run_de, run_elementwise_scramble, run_greedy_scramble,
    run_pso, AckleyForm, BenchmarkId, BenchmarkInstance, DeConfig, InstanceOptions, Objective, OptimizerConfig,
    PsoConfig, RunRecord,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::HarnessError;

/// Offset between the seeds of consecutive repetitions.
pub const REPETITION_STRIDE: u64 = 1 << 32;

/// One problem in validation, located by a JSON path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    GreedyScramble,
    ElementwiseScramble,
    BestMemory,
    De,
    Pso,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::GreedyScramble,
        OptimizerKind::ElementwiseScramble,
        OptimizerKind::BestMemory,
        OptimizerKind::De,
        OptimizerKind::Pso,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::GreedyScramble => "greedy-scramble",
            OptimizerKind::ElementwiseScramble => "elementwise-scramble",
            OptimizerKind::BestMemory => "best-memory",
            OptimizerKind::De => "de",
            OptimizerKind::Pso => "pso",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    outdir: Option<PathBuf>,
    #[serde(default)]
    plot: bool,
    #[serde(default)]
    experiments: Vec<RawExperiment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    #[serde(default)]
    label: Option<String>,
    benchmarks: Vec<RawBenchmark>,
    optimizers: Vec<RawOptimizer>,
    #[serde(default = "default_seeds")]
    seeds: Vec<u64>,
    #[serde(default = "default_repetitions")]
    repetitions: usize,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBenchmark {
    id: BenchmarkId,
    n: usize,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default)]
    instance_seed: u64,
    #[serde(default)]
    shift_basic: bool,
    #[serde(default)]
    ackley_form: AckleyForm,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    id: OptimizerKind,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    params: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSpec {
    pub label: String,
    pub id: BenchmarkId,
    pub n: usize,
    pub m: usize,
    pub instance_seed: u64,
    pub shift_basic: bool,
    pub ackley_form: AckleyForm,
}

impl BenchmarkSpec {
    pub fn build(&self) -> combeo::Result<BenchmarkInstance> {
        make_instance_with(
            self.id,
            self.n,
            self.m,
            self.instance_seed,
            InstanceOptions {
                shift_basic: self.shift_basic,
                ackley: self.ackley_form,
            },
        )
    }
}

/// Fully resolved parameters of one optimizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum OptimizerSettings {
    Change(OptimizerConfig),
    De(DeConfig),
    Pso(PsoConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerSpec {
    pub label: String,
    pub id: OptimizerKind,
    pub params: OptimizerSettings,
}

impl OptimizerSpec {
    pub fn max_iter(&self) -> usize {
        match &self.params {
            OptimizerSettings::Change(c) => c.max_iter,
            OptimizerSettings::De(c) => c.max_iter,
            OptimizerSettings::Pso(c) => c.max_iter,
        }
    }

    pub fn population(&self) -> usize {
        match &self.params {
            OptimizerSettings::Change(c) => c.population,
            OptimizerSettings::De(c) => c.population,
            OptimizerSettings::Pso(c) => c.population,
        }
    }

    /// Runs once on `objective` with the given seed.
    pub fn run(&self, objective: &dyn Objective, seed: u64) -> combeo::Result<RunRecord> {
        match (&self.params, self.id) {
            (OptimizerSettings::Change(c), kind) => {
                let config = OptimizerConfig { seed, ..c.clone() };
                match kind {
                    OptimizerKind::GreedyScramble => run_greedy_scramble(objective, &config),
                    OptimizerKind::ElementwiseScramble => run_elementwise_scramble(objective, &config),
                    _ => run_best_memory(objective, &config),
                }
            }
            (OptimizerSettings::De(c), _) => run_de(objective, &DeConfig { seed, ..c.clone() }),
            (OptimizerSettings::Pso(c), _) => run_pso(objective, &PsoConfig { seed, ..c.clone() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub label: String,
    pub benchmarks: Vec<BenchmarkSpec>,
    pub optimizers: Vec<OptimizerSpec>,
    /// Run seeds with repetitions already expanded.
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub outdir: PathBuf,
    pub plot: bool,
    pub experiments: Vec<Experiment>,
}

/// Coordinates of one run inside a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunSpec {
    pub experiment: usize,
    pub benchmark: usize,
    pub optimizer: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Every run in (experiment, benchmark, optimizer, seed) order.
    pub fn runs(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for (e, exp) in self.experiments.iter().enumerate() {
            for b in 0..exp.benchmarks.len() {
                for o in 0..exp.optimizers.len() {
                    for &seed in &exp.seeds {
                        out.push(RunSpec {
                            experiment: e,
                            benchmark: b,
                            optimizer: o,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }

    /// Replaces every seed list with the single seed `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        for exp in &mut self.experiments {
            exp.seeds = vec![seed];
        }
    }
}

pub fn parse_config_file(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates a config document, reporting every issue found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
        HarnessError::Invalid(vec![ConfigIssue::new(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )])
    })?;
    let mut issues = Vec::new();
    let mut experiments = Vec::new();
    let mut exp_labels = BTreeSet::new();
    for (e, raw_exp) in raw.experiments.into_iter().enumerate() {
        let path = format!("experiments[{e}]");
        let label = raw_exp.label.clone().unwrap_or_else(|| format!("e{e}"));
        check_label(&label, &format!("{path}.label"), &mut exp_labels, &mut issues);
        experiments.push(resolve_experiment(raw_exp, label, &path, &mut issues));
    }
    if !issues.is_empty() {
        return Err(HarnessError::Invalid(issues));
    }
    Ok(ExperimentConfig {
        outdir: raw.outdir.unwrap_or_else(|| PathBuf::from("results")),
        plot: raw.plot,
        experiments,
    })
}

fn check_label(label: &str, path: &str, seen: &mut BTreeSet<String>, issues: &mut Vec<ConfigIssue>) {
    if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
        issues.push(ConfigIssue::new(
            path,
            format!("label {label:?} must be non-empty and use only letters, digits, '-', '_' or '.'"),
        ));
    }
    if !seen.insert(label.to_string()) {
        issues.push(ConfigIssue::new(path, format!("duplicate label {label:?}")));
    }
}

fn resolve_experiment(raw: RawExperiment, label: String, path: &str, issues: &mut Vec<ConfigIssue>) -> Experiment {
    if raw.benchmarks.is_empty() {
        issues.push(ConfigIssue::new(format!("{path}.benchmarks"), "at least one benchmark is required"));
    }
    if raw.optimizers.is_empty() {
        issues.push(ConfigIssue::new(format!("{path}.optimizers"), "at least one optimizer is required"));
    }
    if raw.seeds.is_empty() {
        issues.push(ConfigIssue::new(format!("{path}.seeds"), "at least one seed is required"));
    }
    if raw.repetitions == 0 {
        issues.push(ConfigIssue::new(format!("{path}.repetitions"), "must be at least 1"));
    }
    let mut seeds = Vec::new();
    for rep in 0..raw.repetitions as u64 {
        for &s in &raw.seeds {
            seeds.push(s.wrapping_add(rep.wrapping_mul(REPETITION_STRIDE)));
        }
    }
    let distinct: BTreeSet<u64> = seeds.iter().copied().collect();
    if distinct.len() != seeds.len() {
        issues.push(ConfigIssue::new(format!("{path}.seeds"), "seeds must be distinct across repetitions"));
    }

    let mut labels = BTreeSet::new();
    let benchmarks = raw
        .benchmarks
        .into_iter()
        .enumerate()
        .map(|(b, rb)| {
            let p = format!("{path}.benchmarks[{b}]");
            let m = rb.m.unwrap_or_else(|| default_group_size(rb.n));
            let spec = BenchmarkSpec {
                label: rb.label.unwrap_or_else(|| format!("{}-n{}", rb.id, rb.n)),
                id: rb.id,
                n: rb.n,
                m,
                instance_seed: rb.instance_seed,
                shift_basic: rb.shift_basic,
                ackley_form: rb.ackley_form,
            };
            check_label(&spec.label, &format!("{p}.label"), &mut labels, issues);
            if rb.n == 0 {
                issues.push(ConfigIssue::new(format!("{p}.n"), "dimension must be at least 1"));
            } else if let Err(e) = spec.build() {
                issues.push(ConfigIssue::new(p, e.to_string()));
            }
            spec
        })
        .collect();

    let mut labels = BTreeSet::new();
    let optimizers = raw
        .optimizers
        .into_iter()
        .enumerate()
        .filter_map(|(o, ro)| {
            let p = format!("{path}.optimizers[{o}]");
            let label = ro.label.unwrap_or_else(|| ro.id.to_string());
            check_label(&label, &format!("{p}.label"), &mut labels, issues);
            let params = resolve_params(ro.id, ro.params, &format!("{p}.params"), issues)?;
            Some(OptimizerSpec {
                label,
                id: ro.id,
                params,
            })
        })
        .collect();

    Experiment {
        label,
        benchmarks,
        optimizers,
        seeds,
    }
}

fn resolve_params(
    kind: OptimizerKind,
    params: Option<Value>,
    path: &str,
    issues: &mut Vec<ConfigIssue>,
) -> Option<OptimizerSettings> {
    let value = params.unwrap_or_else(|| Value::Object(Default::default()));
    match &value {
        Value::Object(map) if map.contains_key("seed") => {
            issues.push(ConfigIssue::new(
                format!("{path}.seed"),
                "run seeds come from the experiment's seeds list",
            ));
            return None;
        }
        Value::Object(_) => {}
        _ => {
            issues.push(ConfigIssue::new(path, "params must be an object"));
            return None;
        }
    }
    let (settings, violations) = match kind {
        OptimizerKind::GreedyScramble | OptimizerKind::ElementwiseScramble | OptimizerKind::BestMemory => {
            let c: OptimizerConfig = typed(value, path, issues)?;
            let v = c.violations();
            (OptimizerSettings::Change(c), v)
        }
        OptimizerKind::De => {
            let c: DeConfig = typed(value, path, issues)?;
            let v = c.violations();
            (OptimizerSettings::De(c), v)
        }
        OptimizerKind::Pso => {
            let c: PsoConfig = typed(value, path, issues)?;
            let v = c.violations();
            (OptimizerSettings::Pso(c), v)
        }
    };
    if violations.is_empty() {
        Some(settings)
    } else {
        issues.extend(violations.into_iter().map(|m| ConfigIssue::new(path, m)));
        None
    }
}

fn typed<T: serde::de::DeserializeOwned>(value: Value, path: &str, issues: &mut Vec<ConfigIssue>) -> Option<T> {
    match serde_json::from_value(value) {
        Ok(t) => Some(t),
        Err(e) => {
            issues.push(ConfigIssue::new(path, e.to_string()));
            None
        }
    }
}
