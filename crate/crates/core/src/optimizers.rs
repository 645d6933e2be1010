//! Iteration drivers: greedy search with whole-particle scrambling,
//! element-wise scrambling with relaxation, the momentum driver over personal
//! and global bests, and the split-residual greedy variant.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    ensemble_mean, evaluate_ensemble, update_extremal_cost, Bounds, Ensemble, Evaluator, ExtremalCost,
    KnownOptimum, Objective, OptimizationSense, RngStream, TauGrid,
};
use crate::error::{Error, Result};
use crate::gain::{compute_gain, corrections, gain_numerator, innovation_covariance, DriftForm, GainState, NoiseIntensity};
use crate::innovation::{
    build_pso_innovation, build_split_innovation, greedy_coalescence_matrix, pair_difference_matrix,
    stack_innovation_matrix, BestMemory, InnovationMatrix, ResidualMode,
};
use crate::perturbation::{
    sample_derangement, sample_permutation, scramble_elementwise, scramble_whole, select, SelectionPolicy,
};
use crate::record::{RunRecord, Termination, Tracker};

const INIT_STREAM: u64 = 0;
const ITERATION_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Ensemble size N.
    pub population: usize,
    /// Iteration budget M.
    pub max_iter: usize,
    /// Weight of the sample innovation covariance against the noise block.
    pub alpha: f64,
    /// Constant factor of the random step size `β = β̂·ζ`.
    pub beta_hat: f64,
    /// Per-component acceptance probability of element-wise scrambling.
    pub acceptance_probability: f64,
    /// Noise intensity of the cost block.
    pub rho: f64,
    /// Noise intensity of the coalescence block.
    pub rho_c: f64,
    pub sense: OptimizationSense,
    pub tau0: f64,
    pub dtau: f64,
    pub target_error: f64,
    pub seed: u64,
    pub theta_max: f64,
    pub theta_min: f64,
    /// Draw ζ per particle instead of once per iteration.
    pub per_particle_beta: bool,
    /// Probability that the selection verdict is honoured.
    pub selection_probability: f64,
    pub drift_form: DriftForm,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 50,
            max_iter: 1000,
            alpha: 0.8,
            beta_hat: 1.0,
            acceptance_probability: 0.1,
            rho: 1e-2,
            rho_c: 1e-2,
            sense: OptimizationSense::Minimize,
            tau0: 1.0,
            dtau: 1e-7,
            target_error: 1e-5,
            seed: 0,
            theta_max: 1.0,
            theta_min: 0.1,
            per_particle_beta: false,
            selection_probability: 1.0,
            drift_form: DriftForm::Driver,
        }
    }
}

impl OptimizerConfig {
    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                out.push(msg);
            }
        };
        check(self.population >= 2, format!("population must be at least 2, got {}", self.population));
        check(self.max_iter >= 1, format!("max_iter must be at least 1, got {}", self.max_iter));
        check(self.alpha > 0.0 && self.alpha <= 1.0, format!("alpha must lie in (0, 1], got {}", self.alpha));
        check(
            self.beta_hat > 0.0 && self.beta_hat.is_finite(),
            format!("beta_hat must be positive, got {}", self.beta_hat),
        );
        check(
            self.acceptance_probability > 0.0 && self.acceptance_probability <= 1.0,
            format!("acceptance_probability must lie in (0, 1], got {}", self.acceptance_probability),
        );
        check(self.rho >= 0.0 && self.rho.is_finite(), format!("rho must be non-negative, got {}", self.rho));
        check(
            self.rho_c >= 0.0 && self.rho_c.is_finite(),
            format!("rho_c must be non-negative, got {}", self.rho_c),
        );
        check(self.tau0.is_finite(), format!("tau0 must be finite, got {}", self.tau0));
        check(self.dtau > 0.0 && self.dtau.is_finite(), format!("dtau must be positive, got {}", self.dtau));
        check(
            self.target_error >= 0.0,
            format!("target_error must be non-negative, got {}", self.target_error),
        );
        check(
            self.theta_min >= 0.0 && self.theta_min <= self.theta_max,
            format!(
                "theta bounds must satisfy 0 <= theta_min <= theta_max, got [{}, {}]",
                self.theta_min, self.theta_max
            ),
        );
        check(
            self.selection_probability > 0.0 && self.selection_probability <= 1.0,
            format!("selection_probability must lie in (0, 1], got {}", self.selection_probability),
        );
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }

    pub fn tau_grid(&self) -> Result<TauGrid> {
        TauGrid::new(self.tau0, self.dtau, self.max_iter)
    }

    fn selection_policy(&self) -> SelectionPolicy {
        SelectionPolicy {
            probability: self.selection_probability,
            sense: self.sense,
        }
    }

    fn betas(&self, n_particles: usize, rng: &mut RngStream) -> Vec<f64> {
        if self.per_particle_beta {
            (0..n_particles).map(|_| self.beta_hat * rng.uniform()).collect()
        } else {
            vec![self.beta_hat * rng.uniform(); n_particles]
        }
    }
}

/// Momentum weight at iteration `i` of `max_iter`: `θ_max − (θ_max − θ_min)·i/M`.
pub fn theta(i: usize, max_iter: usize, theta_max: f64, theta_min: f64) -> f64 {
    theta_max - (theta_max - theta_min) * i as f64 / max_iter as f64
}

/// Previous corrections carried by the momentum driver, one column per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Momentum(DMatrix<f64>);

impl Momentum {
    pub fn zeros(dim: usize, n_particles: usize) -> Self {
        Self(DMatrix::zeros(dim, n_particles))
    }

    /// `D ← θ·D + fresh`.
    pub fn advance(&mut self, theta: f64, fresh: &DMatrix<f64>) {
        self.0 *= theta;
        self.0 += fresh;
    }

    /// Replaces the stored corrections with the displacement actually taken,
    /// so a clamped component stops pushing against the wall.
    pub fn settle(&mut self, before: &Ensemble, after: &Ensemble) {
        self.0 = after.matrix() - before.matrix();
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `G = numerator · covariance⁻¹` for one innovation matrix, followed by the
/// per-particle corrections.
fn gain_corrections(
    ensemble: &Ensemble,
    innovations: &InnovationMatrix,
    state: &mut GainState,
    noise: &DMatrix<f64>,
    tau: f64,
    config: &OptimizerConfig,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    let cov = innovation_covariance(innovations, config.alpha, noise)?;
    let (num, f_hat) = gain_numerator(ensemble, innovations, state, tau, config.drift_form)?;
    let gain = compute_gain(&num, &cov)?;
    state.advance(ensemble_mean(ensemble), f_hat, tau);
    let betas = config.betas(ensemble.len(), rng);
    Ok(corrections(&gain, innovations, &betas))
}

struct Start<'a> {
    evaluator: Evaluator<'a>,
    ensemble: Ensemble,
    costs: Vec<f64>,
    tracker: Tracker,
    grid: TauGrid,
    rng: RngStream,
}

fn start<'a>(objective: &'a dyn Objective, config: &OptimizerConfig) -> Result<Start<'a>> {
    config.validate()?;
    let grid = config.tau_grid()?;
    let mut init_rng = RngStream::new(config.seed, INIT_STREAM);
    let ensemble = Ensemble::uniform(objective.bounds(), config.population, &mut init_rng)?;
    let mut evaluator = Evaluator::new(objective);
    let costs = evaluate_ensemble(&mut evaluator, &ensemble)?;
    let mut tracker = Tracker::new(config.sense, objective.optimum(), config.target_error, grid);
    tracker.offer_population(&ensemble, &costs);
    Ok(Start {
        evaluator,
        ensemble,
        costs,
        tracker,
        grid,
        rng: RngStream::new(config.seed, ITERATION_STREAM),
    })
}

/// Greedy extremal-cost innovation stacked on coalescence, whole-particle
/// scrambling, and index-aligned selection.
pub fn run_greedy_scramble(objective: &dyn Objective, config: &OptimizerConfig) -> Result<RunRecord> {
    let Start {
        mut evaluator,
        mut ensemble,
        mut costs,
        mut tracker,
        grid,
        mut rng,
    } = start(objective, config)?;
    let n = ensemble.dim();
    let n_particles = ensemble.len();
    let noise = NoiseIntensity::diagonal(1, config.rho, n, config.rho_c).block_covariance();
    let policy = config.selection_policy();
    let mut extremal = update_extremal_cost(ExtremalCost::initial(config.sense), &costs, config.sense)?;
    let mut state = GainState::new(ensemble_mean(&ensemble), config.tau0);

    if tracker.record_ensemble(0, &ensemble, &costs, evaluator.count()) {
        return Ok(tracker.finish(ensemble_mean(&ensemble), evaluator.count(), Termination::TargetReached));
    }
    for i in 1..=grid.max_iter {
        let tau = grid.tau(i);
        let sigma1 = sample_derangement(n_particles, &mut rng)?;
        let sigma2 = sample_permutation(n_particles, &mut rng);
        let innovations = greedy_coalescence_matrix(&ensemble, &costs, extremal, &sigma1)?;
        let d = gain_corrections(&ensemble, &innovations, &mut state, &noise, tau, config, &mut rng)?;
        let mut candidate = scramble_whole(&ensemble, &d, &sigma2)?;
        candidate.clamp_to(objective.bounds());
        let candidate_costs = evaluate_ensemble(&mut evaluator, &candidate)?;
        let selection = select(&ensemble, &candidate, &costs, &candidate_costs, policy, &mut rng)?;
        ensemble = selection.ensemble;
        costs = selection.costs;
        extremal = update_extremal_cost(extremal, &costs, config.sense)?;
        tracker.offer_population(&ensemble, &costs);
        if tracker.record_ensemble(i, &ensemble, &costs, evaluator.count()) {
            debug!("greedy-scramble reached target at iteration {i}");
            return Ok(tracker.finish(ensemble_mean(&ensemble), evaluator.count(), Termination::TargetReached));
        }
    }
    Ok(tracker.finish(ensemble_mean(&ensemble), evaluator.count(), Termination::MaxIterations))
}

/// Pair-difference innovation with per-component scrambling under relaxation,
/// then index-aligned selection.
pub fn run_elementwise_scramble(objective: &dyn Objective, config: &OptimizerConfig) -> Result<RunRecord> {
    let Start {
        mut evaluator,
        mut ensemble,
        mut costs,
        mut tracker,
        grid,
        mut rng,
    } = start(objective, config)?;
    let n = ensemble.dim();
    let n_particles = ensemble.len();
    let noise = NoiseIntensity::diagonal(0, config.rho, n, config.rho_c).block_covariance();
    let policy = config.selection_policy();
    let mut state = GainState::new(ensemble_mean(&ensemble), config.tau0);

    if tracker.record_ensemble(0, &ensemble, &costs, evaluator.count()) {
        return Ok(tracker.finish(ensemble_mean(&ensemble), evaluator.count(), Termination::TargetReached));
    }
    for i in 1..=grid.max_iter {
        let tau = grid.tau(i);
        let sigma1 = sample_derangement(n_particles, &mut rng)?;
        let sigma2 = sample_permutation(n_particles, &mut rng);
        let innovations = pair_difference_matrix(&ensemble, &sigma1)?;
        let d = gain_corrections(&ensemble, &innovations, &mut state, &noise, tau, config, &mut rng)?;
        let mut candidate =
            scramble_elementwise(&ensemble, &d, &sigma2, config.acceptance_probability, &mut rng)?;
        candidate.clamp_to(objective.bounds());
        let candidate_costs = evaluate_ensemble(&mut evaluator, &candidate)?;
        let selection = select(&ensemble, &candidate, &costs, &candidate_costs, policy, &mut rng)?;
        ensemble = selection.ensemble;
        costs = selection.costs;
        tracker.offer_population(&ensemble, &costs);
        if tracker.record_ensemble(i, &ensemble, &costs, evaluator.count()) {
            debug!("elementwise-scramble reached target at iteration {i}");
            return Ok(tracker.finish(ensemble_mean(&ensemble), evaluator.count(), Termination::TargetReached));
        }
    }
    Ok(tracker.finish(ensemble_mean(&ensemble), evaluator.count(), Termination::MaxIterations))
}

/// Personal/global-best innovation with a decaying momentum on the
/// corrections; no scrambling and no selection.
pub fn run_best_memory(objective: &dyn Objective, config: &OptimizerConfig) -> Result<RunRecord> {
    let Start {
        mut evaluator,
        mut ensemble,
        mut costs,
        mut tracker,
        grid,
        mut rng,
    } = start(objective, config)?;
    let n = ensemble.dim();
    let n_particles = ensemble.len();
    let noise = NoiseIntensity::diagonal(0, config.rho, 2 * n, config.rho_c).block_covariance();
    let mut memory = BestMemory::new(&ensemble, &costs, config.sense)?;
    let mut momentum = Momentum::zeros(n, n_particles);
    let mut state = GainState::new(ensemble_mean(&ensemble), config.tau0);

    if tracker.record_ensemble(0, &ensemble, &costs, evaluator.count()) {
        return Ok(tracker.finish(ensemble_mean(&ensemble), evaluator.count(), Termination::TargetReached));
    }
    for i in 1..=grid.max_iter {
        let tau = grid.tau(i);
        let columns: Vec<DVector<f64>> = (0..n_particles)
            .map(|j| build_pso_innovation(&memory, &ensemble.particle(j), j))
            .collect();
        let innovations = stack_innovation_matrix(&columns)?;
        let d = gain_corrections(&ensemble, &innovations, &mut state, &noise, tau, config, &mut rng)?;
        momentum.advance(theta(i, grid.max_iter, config.theta_max, config.theta_min), &d);
        let mut next = Ensemble::from_matrix(ensemble.matrix() + momentum.matrix())?;
        next.clamp_to(objective.bounds());
        momentum.settle(&ensemble, &next);
        ensemble = next;
        costs = evaluate_ensemble(&mut evaluator, &ensemble)?;
        memory.update(&ensemble, &costs);
        tracker.offer_population(&ensemble, &costs);
        if tracker.record_ensemble(i, &ensemble, &costs, evaluator.count()) {
            debug!("best-memory reached target at iteration {i}");
            return Ok(tracker.finish(ensemble_mean(&ensemble), evaluator.count(), Termination::TargetReached));
        }
    }
    Ok(tracker.finish(ensemble_mean(&ensemble), evaluator.count(), Termination::MaxIterations))
}

/// Maps a design vector to a vector of predictions.
pub trait ForwardModel {
    fn predict(&self, x: &[f64]) -> DVector<f64>;
}

impl<F: Fn(&[f64]) -> DVector<f64>> ForwardModel for F {
    fn predict(&self, x: &[f64]) -> DVector<f64> {
        self(x)
    }
}

/// Matching problem for [`run_split_greedy`].
pub struct SplitProblem<'a> {
    pub model: &'a dyn ForwardModel,
    pub observed: DVector<f64>,
    pub bounds: Bounds,
    pub mode: ResidualMode,
    /// Initial ensemble; drawn uniformly from `bounds` when absent.
    pub initial: Option<Ensemble>,
}

fn residuals(problem: &SplitProblem<'_>, ensemble: &Ensemble, evals: &mut u64) -> Result<Vec<DVector<f64>>> {
    (0..ensemble.len())
        .map(|j| {
            *evals += 1;
            let prediction = problem.model.predict(ensemble.particle_slice(j));
            if prediction.len() != problem.observed.len() {
                return Err(Error::DimensionMismatch {
                    context: "forward model output",
                    expected: problem.observed.len(),
                    actual: prediction.len(),
                });
            }
            let r = &problem.observed - prediction;
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteObjective {
                    particle: j,
                    value: r.norm(),
                });
            }
            Ok(r)
        })
        .collect()
}

/// Greedy search where every observation residual is its own innovation
/// component; whole-particle scrambling and selection on the residual norm.
/// `mean_error` in the trace is the best residual norm.
pub fn run_split_greedy(problem: &SplitProblem<'_>, config: &OptimizerConfig) -> Result<RunRecord> {
    config.validate()?;
    if problem.observed.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("observations must be finite".into()));
    }
    let grid = config.tau_grid()?;
    let mut ensemble = match &problem.initial {
        Some(e) => {
            if e.dim() != problem.bounds.dim() {
                return Err(Error::DimensionMismatch {
                    context: "split initial ensemble",
                    expected: problem.bounds.dim(),
                    actual: e.dim(),
                });
            }
            e.clone()
        }
        None => Ensemble::uniform(&problem.bounds, config.population, &mut RngStream::new(config.seed, INIT_STREAM))?,
    };
    let mut rng = RngStream::new(config.seed, ITERATION_STREAM);
    let n_particles = ensemble.len();
    let policy = SelectionPolicy::deterministic(OptimizationSense::Minimize);
    let noise = NoiseIntensity::diagonal(problem.observed.len(), config.rho, 0, config.rho_c).block_covariance();
    let optimum = KnownOptimum { x: None, f: Some(0.0) };
    let mut tracker = Tracker::new(OptimizationSense::Minimize, Some(optimum), config.target_error, grid);
    let mut evals = 0u64;

    let mut res = residuals(problem, &ensemble, &mut evals)?;
    let mut costs: Vec<f64> = res.iter().map(|r| r.norm()).collect();
    tracker.offer_population(&ensemble, &costs);
    let mut state = GainState::new(ensemble_mean(&ensemble), config.tau0);
    if tracker.record_ensemble(0, &ensemble, &costs, evals) {
        return Ok(tracker.finish(ensemble_mean(&ensemble), evals, Termination::TargetReached));
    }
    for i in 1..=grid.max_iter {
        let tau = grid.tau(i);
        let sigma2 = sample_permutation(n_particles, &mut rng);
        let columns: Vec<DVector<f64>> = res.iter().map(|r| build_split_innovation(r, problem.mode)).collect();
        let innovations = stack_innovation_matrix(&columns)?;
        let d = gain_corrections(&ensemble, &innovations, &mut state, &noise, tau, config, &mut rng)?;
        let mut candidate = scramble_whole(&ensemble, &d, &sigma2)?;
        candidate.clamp_to(&problem.bounds);
        let candidate_res = residuals(problem, &candidate, &mut evals)?;
        let candidate_costs: Vec<f64> = candidate_res.iter().map(|r| r.norm()).collect();
        let selection = select(&ensemble, &candidate, &costs, &candidate_costs, policy, &mut rng)?;
        for (j, kept) in selection.kept.iter().enumerate() {
            if *kept {
                res[j] = candidate_res[j].clone();
            }
        }
        ensemble = selection.ensemble;
        costs = selection.costs;
        tracker.offer_population(&ensemble, &costs);
        if tracker.record_ensemble(i, &ensemble, &costs, evals) {
            return Ok(tracker.finish(ensemble_mean(&ensemble), evals, Termination::TargetReached));
        }
    }
    Ok(tracker.finish(ensemble_mean(&ensemble), evals, Termination::MaxIterations))
}
