//! Per-particle innovation vectors and their stacking into the d×N matrix
//! consumed by the gain.
//!
//! Every innovation measures a mismatch that the search drives towards
//! zero-mean noise: the gap to the extremal cost, the gap to a randomly
//! chosen partner particle, or the gaps to remembered best locations.

use nalgebra::{DMatrix, DVector};

use crate::ensemble::{DesignVector, Ensemble, ExtremalCost, OptimizationSense};
use crate::error::{Error, Result};

/// Which mismatch the innovation vector is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnovationKind {
    /// `[f_best − f(x_j)]`.
    Greedy,
    /// `x_σ1(j) − x_j`.
    Coalescence,
    /// Greedy stacked on top of coalescence.
    GreedyPlusCoalescence,
    /// `[p_j − x_j; g − x_j]`.
    PersonalGlobalBest,
    /// One component per residual of a split objective.
    SplitComponents { components: usize },
    /// `x_σ1(j) − x_j` with σ1 a full derangement.
    PairDifference,
}

impl InnovationKind {
    /// Innovation dimension d for design dimension `n`.
    pub fn dim(self, n: usize) -> usize {
        match self {
            Self::Greedy => 1,
            Self::Coalescence | Self::PairDifference => n,
            Self::GreedyPlusCoalescence => 1 + n,
            Self::PersonalGlobalBest => 2 * n,
            Self::SplitComponents { components } => components,
        }
    }
}

/// How residuals enter a split innovation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualMode {
    /// Squared residual per component.
    #[default]
    Squared,
    /// The residual itself, keeping its sign.
    Signed,
}

/// d×N matrix whose column j is the innovation of particle j.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationMatrix(DMatrix<f64>);

impl InnovationMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn len(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.0.ncols() == 0
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.0.column(j).into_owned()
    }

    /// Row-wise mean over particles.
    pub fn mean(&self) -> DVector<f64> {
        self.0.column_mean()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub fn build_greedy_innovation(extremal: ExtremalCost, cost: f64) -> DVector<f64> {
    DVector::from_element(1, extremal.value() - cost)
}

/// `x_σ1(j) − x_j`. `partners[j]` holds σ1(j).
pub fn build_coalescence_innovation(ensemble: &Ensemble, j: usize, partners: &[usize]) -> Result<DVector<f64>> {
    let partner = *partners
        .get(j)
        .ok_or_else(|| Error::Contract(format!("no partner for particle {j}")))?;
    if partner == j {
        return Err(Error::Contract(format!("particle {j} is paired with itself")));
    }
    if partner >= ensemble.len() {
        return Err(Error::Contract(format!("partner {partner} out of range")));
    }
    Ok(ensemble.matrix().column(partner) - ensemble.matrix().column(j))
}

/// Personal and global best locations with their costs.
#[derive(Debug, Clone, PartialEq)]
pub struct BestMemory {
    personal: Vec<DesignVector>,
    personal_costs: Vec<f64>,
    global: DesignVector,
    global_cost: f64,
    sense: OptimizationSense,
}

impl BestMemory {
    /// Every particle starts as its own personal best.
    pub fn new(ensemble: &Ensemble, costs: &[f64], sense: OptimizationSense) -> Result<Self> {
        if costs.len() != ensemble.len() {
            return Err(Error::DimensionMismatch {
                context: "best memory costs",
                expected: ensemble.len(),
                actual: costs.len(),
            });
        }
        let (g, gc) = sense
            .best_index(costs)
            .ok_or_else(|| Error::Contract("best memory needs at least one particle".into()))?;
        Ok(Self {
            personal: (0..ensemble.len()).map(|j| ensemble.particle(j)).collect(),
            personal_costs: costs.to_vec(),
            global: ensemble.particle(g),
            global_cost: gc,
            sense,
        })
    }

    /// Folds a new population into the memory. A personal best moves when the
    /// particle is not worse than it; the global best moves when the
    /// population's best is not worse than it.
    pub fn update(&mut self, ensemble: &Ensemble, costs: &[f64]) {
        for (j, &c) in costs.iter().enumerate() {
            if self.sense.is_not_worse(c, self.personal_costs[j]) {
                self.personal[j] = ensemble.particle(j);
                self.personal_costs[j] = c;
            }
        }
        if let Some((g, gc)) = self.sense.best_index(costs) {
            if self.sense.is_not_worse(gc, self.global_cost) {
                self.global = ensemble.particle(g);
                self.global_cost = gc;
            }
        }
    }

    pub fn personal(&self, j: usize) -> &DesignVector {
        &self.personal[j]
    }

    pub fn personal_cost(&self, j: usize) -> f64 {
        self.personal_costs[j]
    }

    pub fn global(&self) -> &DesignVector {
        &self.global
    }

    pub fn global_cost(&self) -> f64 {
        self.global_cost
    }

    pub fn len(&self) -> usize {
        self.personal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.personal.is_empty()
    }
}

/// `[p_j − x_j; g − x_j]`, length 2n.
pub fn build_pso_innovation(memory: &BestMemory, particle: &DesignVector, j: usize) -> DVector<f64> {
    let n = particle.len();
    let mut out = DVector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&(memory.personal(j) - particle));
    out.rows_mut(n, n).copy_from(&(memory.global() - particle));
    out
}

pub fn build_split_innovation(residuals: &DVector<f64>, mode: ResidualMode) -> DVector<f64> {
    match mode {
        ResidualMode::Squared => residuals.map(|r| r * r),
        ResidualMode::Signed => residuals.clone(),
    }
}

pub fn stack_innovation_matrix(columns: &[DVector<f64>]) -> Result<InnovationMatrix> {
    let first = columns
        .first()
        .ok_or_else(|| Error::Contract("no innovations to stack".into()))?;
    let d = first.len();
    if let Some(bad) = columns.iter().find(|c| c.len() != d) {
        return Err(Error::DimensionMismatch {
            context: "stack_innovation_matrix",
            expected: d,
            actual: bad.len(),
        });
    }
    Ok(InnovationMatrix(DMatrix::from_columns(columns)))
}

/// Greedy-plus-coalescence innovations for the whole ensemble.
pub(crate) fn greedy_coalescence_matrix(
    ensemble: &Ensemble,
    costs: &[f64],
    extremal: ExtremalCost,
    partners: &[usize],
) -> Result<InnovationMatrix> {
    let n = ensemble.dim();
    let columns = (0..ensemble.len())
        .map(|j| {
            let coalesce = build_coalescence_innovation(ensemble, j, partners)?;
            let mut col = DVector::zeros(1 + n);
            col[0] = build_greedy_innovation(extremal, costs[j])[0];
            col.rows_mut(1, n).copy_from(&coalesce);
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;
    stack_innovation_matrix(&columns)
}

pub(crate) fn pair_difference_matrix(ensemble: &Ensemble, partners: &[usize]) -> Result<InnovationMatrix> {
    let columns = (0..ensemble.len())
        .map(|j| build_coalescence_innovation(ensemble, j, partners))
        .collect::<Result<Vec<_>>>()?;
    stack_innovation_matrix(&columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::RngStream;
    use crate::perturbation::sample_derangement;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn greedy_values() {
        assert_eq!(build_greedy_innovation(ExtremalCost(0.0), 0.0), v(&[0.0]));
        assert_eq!(build_greedy_innovation(ExtremalCost(1.0), 4.0), v(&[-3.0]));
    }

    #[test]
    fn coalescence_values() {
        let ens = Ensemble::from_particles(&[v(&[0.0, 0.0]), v(&[1.0, 2.0])]).unwrap();
        assert_eq!(build_coalescence_innovation(&ens, 0, &[1, 0]).unwrap(), v(&[1.0, 2.0]));
        assert!(build_coalescence_innovation(&ens, 0, &[0, 1]).is_err());

        let collapsed = Ensemble::from_particles(&vec![v(&[3.0, -1.0]); 3]).unwrap();
        assert_eq!(
            build_coalescence_innovation(&collapsed, 2, &[1, 2, 0]).unwrap(),
            v(&[0.0, 0.0])
        );
    }

    #[test]
    fn coalescence_matches_recomputed_difference() {
        let mut rng = RngStream::new(11, 0);
        let ens = Ensemble::from_particles(&[v(&[0.5, 1.0]), v(&[-2.0, 3.0]), v(&[4.0, 0.25])]).unwrap();
        let partners = sample_derangement(3, &mut rng).unwrap();
        for j in 0..3 {
            let got = build_coalescence_innovation(&ens, j, &partners).unwrap();
            let p = partners[j];
            let expect = v(&[
                ens.matrix()[(0, p)] - ens.matrix()[(0, j)],
                ens.matrix()[(1, p)] - ens.matrix()[(1, j)],
            ]);
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn pso_values() {
        let ens = Ensemble::from_particles(&[v(&[0.0])]).unwrap();
        let mut mem = BestMemory::new(&ens, &[5.0], OptimizationSense::Minimize).unwrap();
        assert_eq!(build_pso_innovation(&mem, &v(&[0.0]), 0), v(&[0.0, 0.0]));
        mem.personal[0] = v(&[1.0]);
        mem.global = v(&[2.0]);
        assert_eq!(build_pso_innovation(&mem, &v(&[0.0]), 0), v(&[1.0, 2.0]));
    }

    #[test]
    fn best_memory_tracks_best_ever() {
        let sense = OptimizationSense::Minimize;
        let e0 = Ensemble::from_particles(&[v(&[0.0]), v(&[1.0])]).unwrap();
        let mut mem = BestMemory::new(&e0, &[3.0, 2.0], sense).unwrap();
        assert_eq!(mem.global_cost(), 2.0);
        let e1 = Ensemble::from_particles(&[v(&[5.0]), v(&[6.0])]).unwrap();
        mem.update(&e1, &[1.0, 9.0]);
        assert_eq!(mem.personal(0), &v(&[5.0]));
        assert_eq!(mem.personal(1), &v(&[1.0]));
        assert_eq!(mem.personal_cost(1), 2.0);
        assert_eq!(mem.global(), &v(&[5.0]));
        assert_eq!(mem.global_cost(), 1.0);
    }

    #[test]
    fn split_values() {
        assert_eq!(build_split_innovation(&v(&[0.0, 0.0]), ResidualMode::Squared), v(&[0.0, 0.0]));
        assert_eq!(build_split_innovation(&v(&[1.0, -2.0]), ResidualMode::Squared), v(&[1.0, 4.0]));
        assert_eq!(build_split_innovation(&v(&[1.0, -2.0]), ResidualMode::Signed), v(&[1.0, -2.0]));
    }

    #[test]
    fn split_matches_forward_evaluation() {
        // Forward model y = A x evaluated independently of the builder.
        let a = [[1.0, 2.0], [-0.5, 3.0], [2.0, 0.0]];
        let x = [0.3, -0.7];
        let target = [1.0, 2.0, -1.0];
        let mut residuals = DVector::zeros(3);
        let mut expect = DVector::zeros(3);
        for k in 0..3 {
            let pred = a[k][0] * x[0] + a[k][1] * x[1];
            residuals[k] = target[k] - pred;
            expect[k] = (target[k] - pred) * (target[k] - pred);
        }
        assert_eq!(build_split_innovation(&residuals, ResidualMode::Squared), expect);
    }

    #[test]
    fn stacking() {
        let m = stack_innovation_matrix(&[v(&[1.0]), v(&[2.0])]).unwrap();
        assert_eq!(m.matrix(), &DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
        let z = stack_innovation_matrix(&vec![v(&[0.0, 0.0]); 3]).unwrap();
        assert!(z.matrix().iter().all(|x| *x == 0.0));
        assert!(stack_innovation_matrix(&[v(&[1.0]), v(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn stacked_columns_equal_builder_outputs() {
        let mut rng = RngStream::new(5, 1);
        let ens = Ensemble::from_particles(&[v(&[0.1, 0.2]), v(&[1.0, -1.0]), v(&[2.0, 0.5]), v(&[-3.0, 4.0])]).unwrap();
        let costs = [1.0, 0.5, 3.0, 2.0];
        let partners = sample_derangement(4, &mut rng).unwrap();
        let extremal = ExtremalCost(0.5);
        let m = greedy_coalescence_matrix(&ens, &costs, extremal, &partners).unwrap();
        assert_eq!(m.dim(), InnovationKind::GreedyPlusCoalescence.dim(2));
        for j in 0..4 {
            let col = m.column(j);
            assert_eq!(col[0], build_greedy_innovation(extremal, costs[j])[0]);
            let c = build_coalescence_innovation(&ens, j, &partners).unwrap();
            assert_eq!(col.rows(1, 2).into_owned(), c);
        }
    }

    #[test]
    fn pair_differences_sum_to_zero_under_full_permutation() {
        let mut rng = RngStream::new(17, 0);
        let ens = Ensemble::uniform(&crate::ensemble::Bounds::uniform(3, -4.0, 4.0).unwrap(), 7, &mut rng).unwrap();
        let partners = sample_derangement(7, &mut rng).unwrap();
        let m = pair_difference_matrix(&ens, &partners).unwrap();
        let sum = m.matrix().column_sum();
        assert!(sum.norm() < 1e-12, "sum {sum}");
    }

    #[test]
    fn collapsed_ensemble_gives_zero_innovations() {
        let p = v(&[1.5, -0.5]);
        let ens = Ensemble::from_particles(&vec![p.clone(); 4]).unwrap();
        let costs = [2.0; 4];
        let extremal = ExtremalCost(2.0);
        let m = greedy_coalescence_matrix(&ens, &costs, extremal, &[1, 2, 3, 0]).unwrap();
        assert!(m.matrix().iter().all(|x| *x == 0.0));
        let mem = BestMemory::new(&ens, &costs, OptimizationSense::Minimize).unwrap();
        for j in 0..4 {
            assert!(build_pso_innovation(&mem, &p, j).iter().all(|x| *x == 0.0));
        }
    }
}
