//! Per-run traces shared by the change-of-measure drivers and the baselines.

use serde::{Deserialize, Serialize};

use crate::ensemble::{ensemble_mean, DesignVector, Ensemble, KnownOptimum, OptimizationSense, TauGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TargetReached,
    MaxIterations,
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub tau: f64,
    /// Running best objective value.
    pub best_cost: f64,
    /// Headline error: `mean_distance` when the optimizer location is known,
    /// otherwise `cost_gap`, otherwise NaN.
    pub mean_error: f64,
    pub evals: u64,
    /// ‖ensemble mean − x*‖.
    pub mean_distance: Option<f64>,
    /// |best cost − f*|.
    pub cost_gap: Option<f64>,
    /// Mean of the current population's costs.
    pub mean_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub trace: Vec<TraceRow>,
    pub evaluations: u64,
    pub final_mean: DesignVector,
    pub best_particle: DesignVector,
    pub best_cost: f64,
    pub termination: Termination,
}

impl RunRecord {
    /// Iterations executed after the initial population.
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.iteration)
    }

    pub fn reached_target(&self) -> bool {
        self.termination == Termination::TargetReached
    }

    pub fn final_row(&self) -> &TraceRow {
        self.trace.last().expect("a run record always holds the initial row")
    }
}

/// Builds a [`RunRecord`] and decides when the error target is met.
pub(crate) struct Tracker {
    sense: OptimizationSense,
    optimum: Option<KnownOptimum>,
    target_error: f64,
    grid: TauGrid,
    trace: Vec<TraceRow>,
    best_particle: Option<DesignVector>,
    best_cost: f64,
}

impl Tracker {
    pub fn new(sense: OptimizationSense, optimum: Option<KnownOptimum>, target_error: f64, grid: TauGrid) -> Self {
        Self {
            sense,
            optimum,
            target_error,
            grid,
            trace: Vec::new(),
            best_particle: None,
            best_cost: sense.worst_value(),
        }
    }

    /// Offers a candidate for the best-so-far record.
    pub fn offer(&mut self, x: DesignVector, cost: f64) {
        if self.best_particle.is_none() || self.sense.is_better(cost, self.best_cost) {
            self.best_cost = cost;
            self.best_particle = Some(x);
        }
    }

    /// Offers the best particle of a population.
    pub fn offer_population(&mut self, ensemble: &Ensemble, costs: &[f64]) {
        if let Some((j, c)) = self.sense.best_index(costs) {
            if self.best_particle.is_none() || self.sense.is_better(c, self.best_cost) {
                self.offer(ensemble.particle(j), c);
            }
        }
    }

    /// Appends a trace row for `iteration` and reports whether the target is met.
    pub fn record(&mut self, iteration: usize, mean: &DesignVector, costs: &[f64], evals: u64) -> bool {
        let mean_distance = self
            .optimum
            .as_ref()
            .and_then(|o| o.x.as_ref())
            .map(|x| (mean - x).norm());
        let cost_gap = self
            .optimum
            .as_ref()
            .and_then(|o| o.f)
            .map(|f| (self.best_cost - f).abs());
        let mean_error = mean_distance.or(cost_gap).unwrap_or(f64::NAN);
        let mean_cost = costs.iter().sum::<f64>() / costs.len().max(1) as f64;
        self.trace.push(TraceRow {
            iteration,
            tau: self.grid.tau(iteration),
            best_cost: self.best_cost,
            mean_error,
            evals,
            mean_distance,
            cost_gap,
            mean_cost,
        });
        mean_error <= self.target_error
    }

    pub fn record_ensemble(&mut self, iteration: usize, ensemble: &Ensemble, costs: &[f64], evals: u64) -> bool {
        let mean = ensemble_mean(ensemble);
        self.record(iteration, &mean, costs, evals)
    }

    pub fn finish(self, final_mean: DesignVector, evaluations: u64, termination: Termination) -> RunRecord {
        let best_particle = self.best_particle.unwrap_or_else(|| final_mean.clone());
        RunRecord {
            trace: self.trace,
            evaluations,
            final_mean,
            best_particle,
            best_cost: self.best_cost,
            termination,
        }
    }
}
