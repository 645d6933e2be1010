//! Population bookkeeping shared by every optimizer: design vectors, the
//! particle ensemble, the extremal cost process, the iteration clock and the
//! seeded random streams.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the search space.
pub type DesignVector = DVector<f64>;

/// Whether lower or higher objective values are preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizationSense {
    #[default]
    Minimize,
    Maximize,
}

impl OptimizationSense {
    /// `candidate` is strictly better than `incumbent`.
    pub fn is_better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Self::Minimize => candidate < incumbent,
            Self::Maximize => candidate > incumbent,
        }
    }

    /// `candidate` is at least as good as `incumbent`.
    pub fn is_not_worse(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Self::Minimize => candidate <= incumbent,
            Self::Maximize => candidate >= incumbent,
        }
    }

    /// Index and value of the best entry. Ties resolve to the lowest index.
    pub fn best_index(self, costs: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &c) in costs.iter().enumerate() {
            match best {
                Some((_, b)) if !self.is_better(c, b) => {}
                _ => best = Some((j, c)),
            }
        }
        best
    }

    /// The worst possible value, used to seed running bests.
    pub fn worst_value(self) -> f64 {
        match self {
            Self::Minimize => f64::INFINITY,
            Self::Maximize => f64::NEG_INFINITY,
        }
    }
}

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "bounds",
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidConfig("bounds must have at least one dimension".into()));
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "bounds for variable {k} are invalid: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` for each of `dim` variables.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn clamp_in_place(&self, x: &mut [f64]) {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[k], self.upper[k]);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .enumerate()
                .all(|(k, v)| *v >= self.lower[k] && *v <= self.upper[k])
    }

    pub fn sample(&self, rng: &mut RngStream) -> DesignVector {
        DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|k| self.lower[k] + rng.uniform() * self.width(k)),
        )
    }
}

/// Location and value of a known global optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub x: Option<DesignVector>,
    pub f: Option<f64>,
}

/// A black-box objective on a box domain.
pub trait Objective {
    fn dim(&self) -> usize;

    fn bounds(&self) -> &Bounds;

    fn value(&self, x: &[f64]) -> f64;

    fn optimum(&self) -> Option<KnownOptimum> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn bounds(&self) -> &Bounds {
        (**self).bounds()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn optimum(&self) -> Option<KnownOptimum> {
        (**self).optimum()
    }
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    bounds: Bounds,
    func: F,
    optimum: Option<KnownOptimum>,
}

impl<F: Fn(&[f64]) -> f64> FnObjective<F> {
    pub fn new(bounds: Bounds, func: F) -> Self {
        Self {
            bounds,
            func,
            optimum: None,
        }
    }

    pub fn with_optimum(mut self, optimum: KnownOptimum) -> Self {
        self.optimum = Some(optimum);
        self
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.func)(x)
    }
    fn optimum(&self) -> Option<KnownOptimum> {
        self.optimum.clone()
    }
}

/// Wraps an objective and counts evaluations.
pub struct Evaluator<'a> {
    objective: &'a dyn Objective,
    count: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(objective: &'a dyn Objective) -> Self {
        Self {
            objective,
            count: 0,
        }
    }

    pub fn objective(&self) -> &'a dyn Objective {
        self.objective
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Evaluates a single point; `particle` only labels the error.
    pub fn evaluate(&mut self, x: &[f64], particle: usize) -> Result<f64> {
        self.count += 1;
        let value = self.objective.value(x);
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective { particle, value });
        }
        Ok(value)
    }
}

/// N particles of dimension n, stored as the columns of an n×N matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    particles: DMatrix<f64>,
}

impl Ensemble {
    pub fn from_matrix(particles: DMatrix<f64>) -> Result<Self> {
        if particles.ncols() == 0 || particles.nrows() == 0 {
            return Err(Error::Contract("ensemble must be non-empty".into()));
        }
        if let Some(pos) = particles.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "ensemble entry {} of particle {} is not finite",
                pos % particles.nrows(),
                pos / particles.nrows()
            )));
        }
        Ok(Self { particles })
    }

    pub fn from_particles(particles: &[DesignVector]) -> Result<Self> {
        let first = particles
            .first()
            .ok_or_else(|| Error::Contract("ensemble must be non-empty".into()))?;
        let n = first.len();
        for p in particles {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "ensemble particles",
                    expected: n,
                    actual: p.len(),
                });
            }
        }
        Self::from_matrix(DMatrix::from_columns(particles))
    }

    /// Uniform random scatter over the box.
    pub fn uniform(bounds: &Bounds, size: usize, rng: &mut RngStream) -> Result<Self> {
        let columns: Vec<DesignVector> = (0..size).map(|_| bounds.sample(rng)).collect();
        Self::from_particles(&columns)
    }

    /// Design dimension n.
    pub fn dim(&self) -> usize {
        self.particles.nrows()
    }

    /// Population size N.
    pub fn len(&self) -> usize {
        self.particles.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.ncols() == 0
    }

    pub fn particle(&self, j: usize) -> DesignVector {
        self.particles.column(j).into_owned()
    }

    pub fn particle_slice(&self, j: usize) -> &[f64] {
        let n = self.dim();
        &self.particles.as_slice()[j * n..(j + 1) * n]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.particles
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.particles
    }

    pub fn set_particle(&mut self, j: usize, x: &DesignVector) {
        self.particles.set_column(j, x);
    }

    pub fn clamp_to(&mut self, bounds: &Bounds) {
        let n = self.dim();
        for column in self.particles.as_mut_slice().chunks_mut(n) {
            bounds.clamp_in_place(column);
        }
    }
}

/// f(x^(j)) for every particle; the counter advances by N.
pub fn evaluate_ensemble(evaluator: &mut Evaluator<'_>, ensemble: &Ensemble) -> Result<Vec<f64>> {
    if ensemble.dim() != evaluator.objective().dim() {
        return Err(Error::DimensionMismatch {
            context: "evaluate_ensemble",
            expected: evaluator.objective().dim(),
            actual: ensemble.dim(),
        });
    }
    (0..ensemble.len())
        .map(|j| evaluator.evaluate(ensemble.particle_slice(j), j))
        .collect()
}

/// Component-wise mean of the particles, the reported estimate.
pub fn ensemble_mean(ensemble: &Ensemble) -> DesignVector {
    ensemble.matrix().column_mean()
}

/// Running best objective value over all particles and iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalCost(pub f64);

impl ExtremalCost {
    pub fn initial(sense: OptimizationSense) -> Self {
        Self(sense.worst_value())
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn update_extremal_cost(
    current: ExtremalCost,
    costs: &[f64],
    sense: OptimizationSense,
) -> Result<ExtremalCost> {
    let (_, best) = sense
        .best_index(costs)
        .ok_or_else(|| Error::Contract("cannot update extremal cost from an empty cost vector".into()))?;
    Ok(if sense.is_better(best, current.0) {
        ExtremalCost(best)
    } else {
        current
    })
}

/// Fictitious iteration time `tau_i = tau0 + i * dtau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    pub tau0: f64,
    pub dtau: f64,
    pub max_iter: usize,
}

impl TauGrid {
    pub fn new(tau0: f64, dtau: f64, max_iter: usize) -> Result<Self> {
        if !(dtau > 0.0 && dtau.is_finite()) {
            return Err(Error::InvalidConfig(format!("dtau must be positive, got {dtau}")));
        }
        if !tau0.is_finite() {
            return Err(Error::InvalidConfig("tau0 must be finite".into()));
        }
        if max_iter == 0 {
            return Err(Error::InvalidConfig("iteration budget must be at least 1".into()));
        }
        Ok(Self {
            tau0,
            dtau,
            max_iter,
        })
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.tau0 + i as f64 * self.dtau
    }
}

impl Default for TauGrid {
    fn default() -> Self {
        Self {
            tau0: 1.0,
            dtau: 1e-7,
            max_iter: 1000,
        }
    }
}

/// A seeded, replayable random stream. Distinct `stream` ids drawn from the
/// same seed are independent.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on {0, .., n-1}.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::basic;

    fn sphere_objective(n: usize) -> FnObjective<impl Fn(&[f64]) -> f64> {
        FnObjective::new(Bounds::uniform(n, -100.0, 100.0).unwrap(), |x: &[f64]| {
            x.iter().map(|v| v * v).sum()
        })
    }

    #[test]
    fn sphere_on_origin_and_ones() {
        let obj = sphere_objective(2);
        let mut ev = Evaluator::new(&obj);
        let ens = Ensemble::from_particles(&[DVector::from_vec(vec![0.0, 0.0]), DVector::from_vec(vec![1.0, 1.0])]).unwrap();
        assert_eq!(evaluate_ensemble(&mut ev, &ens).unwrap(), vec![0.0, 2.0]);
        assert_eq!(ev.count(), 2);
    }

    #[test]
    fn identical_particles_give_identical_costs() {
        let obj = sphere_objective(3);
        let mut ev = Evaluator::new(&obj);
        let p = DVector::from_vec(vec![0.3, -1.2, 4.0]);
        let ens = Ensemble::from_particles(&vec![p; 5]).unwrap();
        let costs = evaluate_ensemble(&mut ev, &ens).unwrap();
        assert!(costs.iter().all(|c| *c == costs[0]));
        assert_eq!(ev.count(), 5);
    }

    #[test]
    fn schwefel_on_one_two_three() {
        let obj = FnObjective::new(Bounds::uniform(3, -100.0, 100.0).unwrap(), basic::schwefel_1_2);
        let mut ev = Evaluator::new(&obj);
        let ens = Ensemble::from_particles(&[DVector::from_vec(vec![1.0, 2.0, 3.0])]).unwrap();
        assert_eq!(evaluate_ensemble(&mut ev, &ens).unwrap(), vec![46.0]);
    }

    #[test]
    fn non_finite_value_names_particle() {
        let obj = FnObjective::new(Bounds::uniform(1, -1.0, 1.0).unwrap(), |x: &[f64]| {
            if x[0] > 0.5 {
                f64::NAN
            } else {
                x[0]
            }
        });
        let mut ev = Evaluator::new(&obj);
        let ens = Ensemble::from_particles(&[DVector::from_vec(vec![0.0]), DVector::from_vec(vec![0.9])]).unwrap();
        match evaluate_ensemble(&mut ev, &ens) {
            Err(Error::NonFiniteObjective { particle, .. }) => assert_eq!(particle, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extremal_cost_updates() {
        use OptimizationSense::*;
        let e = update_extremal_cost(ExtremalCost(5.0), &[3.0, 7.0], Minimize).unwrap();
        assert_eq!(e.value(), 3.0);
        let e = update_extremal_cost(ExtremalCost(3.0), &[4.0, 9.0], Minimize).unwrap();
        assert_eq!(e.value(), 3.0);
        let e = update_extremal_cost(ExtremalCost(3.0), &[4.0, 9.0], Maximize).unwrap();
        assert_eq!(e.value(), 9.0);
        assert!(update_extremal_cost(ExtremalCost(3.0), &[], Minimize).is_err());
    }

    #[test]
    fn means() {
        let v = |a: f64, b: f64| DVector::from_vec(vec![a, b]);
        let ens = Ensemble::from_particles(&[v(0.0, 0.0), v(2.0, 2.0)]).unwrap();
        assert_eq!(ensemble_mean(&ens), v(1.0, 1.0));
        let p = v(0.25, -3.5);
        let ens = Ensemble::from_particles(&vec![p.clone(); 4]).unwrap();
        assert_eq!(ensemble_mean(&ens), p);
        let ens = Ensemble::from_particles(&[v(1.0, 0.0), v(0.0, 1.0), v(2.0, 2.0)]).unwrap();
        assert_eq!(ensemble_mean(&ens), v(1.0, 1.0));
    }

    #[test]
    fn tau_grid_is_increasing() {
        let grid = TauGrid::default();
        assert_eq!(grid.tau(0), 1.0);
        assert!(grid.tau(1) > grid.tau(0));
        assert!(TauGrid::new(1.0, 0.0, 10).is_err());
    }

    #[test]
    fn rng_streams_replay() {
        let mut a = RngStream::new(9, 3);
        let mut b = RngStream::new(9, 3);
        let mut c = RngStream::new(9, 4);
        let xa: Vec<f64> = (0..8).map(|_| a.uniform()).collect();
        let xb: Vec<f64> = (0..8).map(|_| b.uniform()).collect();
        let xc: Vec<f64> = (0..8).map(|_| c.uniform()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }
}
