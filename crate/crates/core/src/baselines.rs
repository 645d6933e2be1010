//! Reference differential evolution (rand/1/bin) and global-best particle
//! swarm optimizers, traced the same way as the change-of-measure drivers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    ensemble_mean, evaluate_ensemble, Ensemble, Evaluator, Objective, OptimizationSense, RngStream, TauGrid,
};
use crate::error::{Error, Result};
use crate::record::{RunRecord, Termination, Tracker};

const INIT_STREAM: u64 = 0;
const ITERATION_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeConfig {
    pub population: usize,
    /// Crossover rate.
    pub cr: f64,
    /// Differential weight.
    pub f_scale: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub target_error: f64,
    pub sense: OptimizationSense,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population: 50,
            cr: 0.1,
            f_scale: 0.5,
            max_iter: 1000,
            seed: 0,
            target_error: 1e-5,
            sense: OptimizationSense::Minimize,
        }
    }
}

impl DeConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.population < 4 {
            out.push(format!("population must be at least 4 for rand/1 mutation, got {}", self.population));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            out.push(format!("cr must lie in [0, 1], got {}", self.cr));
        }
        if !(self.f_scale > 0.0 && self.f_scale.is_finite()) {
            out.push(format!("f_scale must be positive, got {}", self.f_scale));
        }
        if self.max_iter == 0 {
            out.push("max_iter must be at least 1".into());
        }
        if self.target_error < 0.0 {
            out.push(format!("target_error must be non-negative, got {}", self.target_error));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub population: usize,
    pub w_max: f64,
    pub w_min: f64,
    /// Cognitive coefficient.
    pub c1: f64,
    /// Social coefficient.
    pub c2: f64,
    /// Velocity limit as a fraction of each variable's range.
    pub velocity_clamp: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub target_error: f64,
    pub sense: OptimizationSense,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            population: 50,
            w_max: 0.9,
            w_min: 0.4,
            c1: 2.0,
            c2: 2.0,
            velocity_clamp: 0.2,
            max_iter: 1000,
            seed: 0,
            target_error: 1e-5,
            sense: OptimizationSense::Minimize,
        }
    }
}

impl PsoConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.population < 1 {
            out.push("population must be at least 1".into());
        }
        if !(self.w_min > 0.0 && self.w_min <= self.w_max) {
            out.push(format!(
                "inertia must satisfy 0 < w_min <= w_max, got [{}, {}]",
                self.w_min, self.w_max
            ));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            out.push(format!("c1 and c2 must be positive, got {} and {}", self.c1, self.c2));
        }
        if !(self.velocity_clamp > 0.0) {
            out.push(format!("velocity_clamp must be positive, got {}", self.velocity_clamp));
        }
        if self.max_iter == 0 {
            out.push("max_iter must be at least 1".into());
        }
        if self.target_error < 0.0 {
            out.push(format!("target_error must be non-negative, got {}", self.target_error));
        }
        out
    }

    /// `w_max − (w_max − w_min)·i/it_max`.
    pub fn inertia(&self, i: usize) -> f64 {
        self.w_max - (self.w_max - self.w_min) * i as f64 / self.max_iter as f64
    }
}

fn reject(violations: Vec<String>) -> Result<()> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(violations.join("; ")))
    }
}

/// Three distinct indices, all different from `target`.
fn pick_three(n: usize, target: usize, rng: &mut RngStream) -> [usize; 3] {
    let mut out = [target; 3];
    for k in 0..3 {
        loop {
            let c = rng.index(n);
            if c != target && !out[..k].contains(&c) {
                out[k] = c;
                break;
            }
        }
    }
    out
}

/// Binomial crossover: component k comes from the mutant when a uniform draw
/// is below `cr` or `k` is the forced index.
pub fn binomial_crossover(target: &[f64], mutant: &[f64], cr: f64, forced: usize, rng: &mut RngStream) -> Vec<f64> {
    target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(k, (t, m))| if rng.uniform() < cr || k == forced { *m } else { *t })
        .collect()
}

/// DE/rand/1/bin with synchronous generations and greedy selection.
pub fn run_de(objective: &dyn Objective, config: &DeConfig) -> Result<RunRecord> {
    reject(config.violations())?;
    let grid = TauGrid::new(1.0, 1.0, config.max_iter)?;
    let bounds = objective.bounds();
    let mut population = Ensemble::uniform(bounds, config.population, &mut RngStream::new(config.seed, INIT_STREAM))?;
    let mut rng = RngStream::new(config.seed, ITERATION_STREAM);
    let mut evaluator = Evaluator::new(objective);
    let mut costs = evaluate_ensemble(&mut evaluator, &population)?;
    let mut tracker = Tracker::new(config.sense, objective.optimum(), config.target_error, grid);
    tracker.offer_population(&population, &costs);
    if tracker.record_ensemble(0, &population, &costs, evaluator.count()) {
        return Ok(tracker.finish(ensemble_mean(&population), evaluator.count(), Termination::TargetReached));
    }
    let n = population.dim();
    let np = population.len();
    for i in 1..=config.max_iter {
        let mut trials = DMatrix::zeros(n, np);
        for j in 0..np {
            let [a, b, c] = pick_three(np, j, &mut rng);
            let m = population.matrix();
            let mutant: Vec<f64> = (0..n)
                .map(|k| m[(k, a)] + config.f_scale * (m[(k, b)] - m[(k, c)]))
                .collect();
            let forced = rng.index(n);
            let mut trial = binomial_crossover(population.particle_slice(j), &mutant, config.cr, forced, &mut rng);
            bounds.clamp_in_place(&mut trial);
            trials.column_mut(j).copy_from_slice(&trial);
        }
        let trials = Ensemble::from_matrix(trials)?;
        let trial_costs = evaluate_ensemble(&mut evaluator, &trials)?;
        for j in 0..np {
            if config.sense.is_not_worse(trial_costs[j], costs[j]) {
                population.set_particle(j, &trials.particle(j));
                costs[j] = trial_costs[j];
            }
        }
        tracker.offer_population(&population, &costs);
        if tracker.record_ensemble(i, &population, &costs, evaluator.count()) {
            return Ok(tracker.finish(ensemble_mean(&population), evaluator.count(), Termination::TargetReached));
        }
    }
    Ok(tracker.finish(ensemble_mean(&population), evaluator.count(), Termination::MaxIterations))
}

/// Global-best PSO with linearly decreasing inertia; velocities and positions
/// are clamped to the box. The traced estimate is the mean swarm position.
pub fn run_pso(objective: &dyn Objective, config: &PsoConfig) -> Result<RunRecord> {
    reject(config.violations())?;
    let swarm = Ensemble::uniform(
        objective.bounds(),
        config.population,
        &mut RngStream::new(config.seed, INIT_STREAM),
    )?;
    run_pso_from(objective, config, swarm)
}

/// [`run_pso`] from a given initial swarm.
pub fn run_pso_from(objective: &dyn Objective, config: &PsoConfig, initial: Ensemble) -> Result<RunRecord> {
    reject(config.violations())?;
    let grid = TauGrid::new(1.0, 1.0, config.max_iter)?;
    let bounds = objective.bounds();
    let mut swarm = initial;
    let mut rng = RngStream::new(config.seed, ITERATION_STREAM);
    let n = swarm.dim();
    let np = swarm.len();
    let vmax: Vec<f64> = (0..n).map(|k| config.velocity_clamp * bounds.width(k)).collect();
    let mut velocity = DMatrix::<f64>::zeros(n, np);
    let mut evaluator = Evaluator::new(objective);
    let mut costs = evaluate_ensemble(&mut evaluator, &swarm)?;
    let mut personal = swarm.clone();
    let mut personal_costs = costs.clone();
    let (g, mut global_cost) = config.sense.best_index(&costs).expect("non-empty swarm");
    let mut global = swarm.particle(g);
    let mut tracker = Tracker::new(config.sense, objective.optimum(), config.target_error, grid);
    tracker.offer_population(&swarm, &costs);
    if tracker.record_ensemble(0, &swarm, &costs, evaluator.count()) {
        return Ok(tracker.finish(ensemble_mean(&swarm), evaluator.count(), Termination::TargetReached));
    }
    for i in 1..=config.max_iter {
        let w = config.inertia(i);
        let mut next = swarm.matrix().clone();
        for j in 0..np {
            for k in 0..n {
                let x = next[(k, j)];
                let r1 = rng.uniform();
                let r2 = rng.uniform();
                let v = w * velocity[(k, j)]
                    + config.c1 * r1 * (personal.matrix()[(k, j)] - x)
                    + config.c2 * r2 * (global[k] - x);
                let v = v.clamp(-vmax[k], vmax[k]);
                velocity[(k, j)] = v;
                next[(k, j)] = (x + v).clamp(bounds.lower()[k], bounds.upper()[k]);
            }
        }
        swarm = Ensemble::from_matrix(next)?;
        costs = evaluate_ensemble(&mut evaluator, &swarm)?;
        for j in 0..np {
            if config.sense.is_not_worse(costs[j], personal_costs[j]) {
                personal.set_particle(j, &swarm.particle(j));
                personal_costs[j] = costs[j];
            }
        }
        if let Some((b, c)) = config.sense.best_index(&personal_costs) {
            if config.sense.is_not_worse(c, global_cost) {
                global = personal.particle(b);
                global_cost = c;
            }
        }
        tracker.offer_population(&swarm, &costs);
        if tracker.record_ensemble(i, &swarm, &costs, evaluator.count()) {
            return Ok(tracker.finish(ensemble_mean(&swarm), evaluator.count(), Termination::TargetReached));
        }
    }
    Ok(tracker.finish(ensemble_mean(&swarm), evaluator.count(), Termination::MaxIterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{Bounds, FnObjective, KnownOptimum};
    use nalgebra::DVector;

    #[test]
    fn forced_index_only_changes_one_component() {
        let mut rng = RngStream::new(0, 0);
        let target = [0.0; 6];
        let mutant = [1.0; 6];
        for forced in 0..6 {
            let trial = binomial_crossover(&target, &mutant, 0.0, forced, &mut rng);
            let changed: Vec<usize> = (0..6).filter(|&k| trial[k] != target[k]).collect();
            assert_eq!(changed, vec![forced]);
        }
    }

    #[test]
    fn pick_three_is_distinct() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            let [a, b, c] = pick_three(5, 2, &mut rng);
            assert!(a != b && b != c && a != c && ![a, b, c].contains(&2));
        }
    }

    #[test]
    fn inertia_schedule() {
        let cfg = PsoConfig {
            max_iter: 100,
            ..Default::default()
        };
        assert_eq!(cfg.inertia(0), 0.9);
        assert!((cfg.inertia(100) - 0.4).abs() < 1e-15);
        assert!((cfg.inertia(50) - 0.65).abs() < 1e-15);
    }

    #[test]
    fn de_solves_2d_sphere() {
        let obj = FnObjective::new(Bounds::uniform(2, -5.0, 5.0).unwrap(), |x: &[f64]| x[0] * x[0] + x[1] * x[1])
            .with_optimum(KnownOptimum {
                x: None,
                f: Some(0.0),
            });
        let cfg = DeConfig {
            population: 20,
            max_iter: 500,
            target_error: 1e-6,
            seed: 2,
            ..Default::default()
        };
        let rec = run_de(&obj, &cfg).unwrap();
        assert!(rec.reached_target());
        for w in rec.trace.windows(2) {
            assert!(w[1].best_cost <= w[0].best_cost);
        }
    }

    #[test]
    fn swarm_at_optimum_is_stationary() {
        let obj = FnObjective::new(Bounds::uniform(2, -2.0, 2.0).unwrap(), |x: &[f64]| {
            (x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)
        });
        let cfg = PsoConfig {
            population: 5,
            max_iter: 10,
            target_error: 0.0,
            ..Default::default()
        };
        let at_optimum = Ensemble::from_particles(&vec![DVector::from_vec(vec![1.0, 1.0]); 5]).unwrap();
        let rec = run_pso_from(&obj, &cfg, at_optimum).unwrap();
        assert_eq!(rec.final_mean, DVector::from_vec(vec![1.0, 1.0]));
    }
}
