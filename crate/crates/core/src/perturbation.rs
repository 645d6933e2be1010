//! Random perturbation operators: permutation sampling, scrambling of base
//! particles (whole or per component, with relaxation) and index-aligned
//! selection.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::ensemble::{Ensemble, OptimizationSense, RngStream};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScrambleMode {
    WholeParticle,
    /// Per-component scrambling; each component's correction is accepted with
    /// the given probability.
    ElementWise { acceptance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionPolicy {
    /// Probability ς that the keep/revert verdict is honoured.
    pub probability: f64,
    pub sense: OptimizationSense,
}

impl SelectionPolicy {
    pub fn deterministic(sense: OptimizationSense) -> Self {
        Self {
            probability: 1.0,
            sense,
        }
    }

    /// `⌊1/(1−ς)⌋`, infinite (`None`) for deterministic selection.
    pub fn perturbation_index(&self) -> Option<u64> {
        (self.probability < 1.0).then(|| (1.0 / (1.0 - self.probability)).floor() as u64)
    }
}

/// Uniform random permutation of `0..n` (Fisher–Yates).
pub fn sample_permutation(n: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng.inner());
    p
}

/// Uniform random derangement of `0..n`, by rejection over uniform
/// permutations.
pub fn sample_derangement(n: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::Contract(format!("no derangement of {n} element(s)")));
    }
    loop {
        let p = sample_permutation(n, rng);
        if p.iter().enumerate().all(|(j, &k)| j != k) {
            return Ok(p);
        }
    }
}

fn check_permutation(sigma: &[usize], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::DimensionMismatch {
            context: "permutation length",
            expected: n,
            actual: sigma.len(),
        });
    }
    let mut seen = vec![false; n];
    for &k in sigma {
        if k >= n || seen[k] {
            return Err(Error::Contract("index map is not a permutation".into()));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Particle j becomes `base[σ2(j)] + D_j`.
pub fn scramble_whole(base: &Ensemble, corrections: &DMatrix<f64>, sigma2: &[usize]) -> Result<Ensemble> {
    check_permutation(sigma2, base.len())?;
    check_shape(base, corrections)?;
    let mut out = DMatrix::zeros(base.dim(), base.len());
    for (j, &k) in sigma2.iter().enumerate() {
        out.set_column(j, &(base.matrix().column(k) + corrections.column(j)));
    }
    Ensemble::from_matrix(out)
}

/// Particle j starts as `base[σ2(j)]`; then, sweeping the components from a
/// random start and wrapping around, each component independently takes
/// `base[σ2(j)]_r + D_j,r` with probability `acceptance`.
pub fn scramble_elementwise(
    base: &Ensemble,
    corrections: &DMatrix<f64>,
    sigma2: &[usize],
    acceptance: f64,
    rng: &mut RngStream,
) -> Result<Ensemble> {
    if !(acceptance > 0.0 && acceptance <= 1.0) {
        return Err(Error::Contract(format!("acceptance probability must lie in (0, 1], got {acceptance}")));
    }
    check_permutation(sigma2, base.len())?;
    check_shape(base, corrections)?;
    let n = base.dim();
    let mut out = DMatrix::zeros(n, base.len());
    for (j, &k) in sigma2.iter().enumerate() {
        out.set_column(j, &base.matrix().column(k));
        let start = rng.index(n);
        for step in 0..n {
            let r = (start + step) % n;
            if rng.uniform() < acceptance {
                out[(r, j)] += corrections[(r, j)];
            }
        }
    }
    Ensemble::from_matrix(out)
}

fn check_shape(base: &Ensemble, corrections: &DMatrix<f64>) -> Result<()> {
    if corrections.nrows() != base.dim() || corrections.ncols() != base.len() {
        return Err(Error::DimensionMismatch {
            context: "corrections shape",
            expected: base.dim() * base.len(),
            actual: corrections.nrows() * corrections.ncols(),
        });
    }
    Ok(())
}

/// Outcome of [`select`].
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub ensemble: Ensemble,
    pub costs: Vec<f64>,
    /// `kept[j]` is true when particle j took the candidate.
    pub kept: Vec<bool>,
}

/// Index-aligned keep/revert. With ς = 1 particle j keeps the candidate iff
/// it is not worse than the previous particle j; with ς < 1 that verdict is
/// flipped with probability 1 − ς.
pub fn select(
    previous: &Ensemble,
    candidate: &Ensemble,
    previous_costs: &[f64],
    candidate_costs: &[f64],
    policy: SelectionPolicy,
    rng: &mut RngStream,
) -> Result<Selection> {
    let n_particles = previous.len();
    if candidate.len() != n_particles || previous_costs.len() != n_particles || candidate_costs.len() != n_particles {
        return Err(Error::DimensionMismatch {
            context: "select",
            expected: n_particles,
            actual: candidate.len(),
        });
    }
    if !(policy.probability > 0.0 && policy.probability <= 1.0) {
        return Err(Error::Contract(format!(
            "selection probability must lie in (0, 1], got {}",
            policy.probability
        )));
    }
    let mut out = previous.matrix().clone();
    let mut costs = previous_costs.to_vec();
    let mut kept = vec![false; n_particles];
    for j in 0..n_particles {
        let mut keep = policy.sense.is_not_worse(candidate_costs[j], previous_costs[j]);
        if policy.probability < 1.0 && rng.uniform() >= policy.probability {
            keep = !keep;
        }
        if keep {
            out.set_column(j, &candidate.matrix().column(j));
            costs[j] = candidate_costs[j];
            kept[j] = true;
        }
    }
    Ok(Selection {
        ensemble: Ensemble::from_matrix(out)?,
        costs,
        kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn ens(cols: &[&[f64]]) -> Ensemble {
        Ensemble::from_particles(&cols.iter().map(|c| DVector::from_vec(c.to_vec())).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn permutation_basics() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(sample_permutation(1, &mut rng), vec![0]);
        for n in [2, 5, 17] {
            let mut p = sample_permutation(n, &mut rng);
            p.sort_unstable();
            assert_eq!(p, (0..n).collect::<Vec<_>>());
        }
        let a = sample_permutation(4, &mut RngStream::new(42, 7));
        let b = sample_permutation(4, &mut RngStream::new(42, 7));
        assert_eq!(a, b);
    }

    #[test]
    fn derangement_basics() {
        let mut rng = RngStream::new(2, 0);
        assert_eq!(sample_derangement(2, &mut rng).unwrap(), vec![1, 0]);
        assert!(sample_derangement(1, &mut rng).is_err());
        for _ in 0..200 {
            let d = sample_derangement(6, &mut rng).unwrap();
            assert!(d.iter().enumerate().all(|(j, &k)| j != k));
        }
        let a = sample_derangement(5, &mut RngStream::new(5, 1)).unwrap();
        let b = sample_derangement(5, &mut RngStream::new(5, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn whole_scramble_cases() {
        let base = ens(&[&[0.0, 1.0], &[2.0, 3.0], &[4.0, 5.0]]);
        let zero = DMatrix::zeros(2, 3);
        assert_eq!(scramble_whole(&base, &zero, &[0, 1, 2]).unwrap(), base);
        let out = scramble_whole(&base, &zero, &[2, 0, 1]).unwrap();
        assert_eq!(out.particle(0), base.particle(2));
        assert_eq!(out.particle(1), base.particle(0));

        let d = DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, -1.0, -2.0, -3.0]);
        let sigma = sample_permutation(3, &mut RngStream::new(3, 0));
        let out = scramble_whole(&base, &d, &sigma).unwrap();
        for j in 0..3 {
            for r in 0..2 {
                assert_eq!(out.matrix()[(r, j)], base.matrix()[(r, sigma[j])] + d[(r, j)]);
            }
        }
        assert!(scramble_whole(&base, &zero, &[0, 0, 1]).is_err());
    }

    #[test]
    fn elementwise_full_acceptance_is_additive_update() {
        let base = ens(&[&[0.0, 1.0, 2.0], &[2.0, 3.0, -1.0]]);
        let d = DMatrix::from_row_slice(3, 2, &[0.5, 1.0, -0.5, 2.0, 0.25, 0.0]);
        let mut rng = RngStream::new(4, 0);
        let out = scramble_elementwise(&base, &d, &[0, 1], 1.0, &mut rng).unwrap();
        assert_eq!(out.matrix(), &(base.matrix() + &d));
        let whole = scramble_whole(&base, &d, &[0, 1]).unwrap();
        assert_eq!(out, whole);
    }

    #[test]
    fn elementwise_zero_corrections_is_permutation() {
        let base = ens(&[&[0.0, 1.0], &[2.0, 3.0], &[4.0, 5.0]]);
        let mut rng = RngStream::new(4, 0);
        let out = scramble_elementwise(&base, &DMatrix::zeros(2, 3), &[1, 2, 0], 0.3, &mut rng).unwrap();
        assert_eq!(out.particle(0), base.particle(1));
        assert_eq!(out.particle(2), base.particle(0));
        assert!(scramble_elementwise(&base, &DMatrix::zeros(2, 3), &[0, 1, 2], 0.0, &mut rng).is_err());
    }

    #[test]
    fn elementwise_replays_bernoulli_draws() {
        let n = 4;
        let base = ens(&[&[0.0; 4], &[0.0; 4]]);
        let d = DMatrix::from_element(n, 2, 1.0);
        let c = 0.1;
        let out = scramble_elementwise(&base, &d, &[0, 1], c, &mut RngStream::new(99, 2)).unwrap();

        let mut replay = RngStream::new(99, 2);
        for j in 0..2 {
            let start = replay.index(n);
            let mut accepted = vec![false; n];
            for step in 0..n {
                accepted[(start + step) % n] = replay.uniform() < c;
            }
            for r in 0..n {
                assert_eq!(out.matrix()[(r, j)], if accepted[r] { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn selection_cases() {
        let sense = OptimizationSense::Minimize;
        let policy = SelectionPolicy::deterministic(sense);
        let mut rng = RngStream::new(0, 0);
        let prev = ens(&[&[0.0], &[1.0]]);
        let cand = ens(&[&[10.0], &[11.0]]);

        let s = select(&prev, &cand, &[5.0, 5.0], &[1.0, 2.0], policy, &mut rng).unwrap();
        assert_eq!(s.ensemble, cand);
        let s = select(&prev, &cand, &[1.0, 2.0], &[5.0, 5.0], policy, &mut rng).unwrap();
        assert_eq!(s.ensemble, prev);
        let s = select(&prev, &cand, &[1.0, 5.0], &[2.0, 3.0], policy, &mut rng).unwrap();
        assert_eq!(s.costs, vec![1.0, 3.0]);
        assert_eq!(s.kept, vec![false, true]);
        assert_eq!(s.ensemble.particle(0), prev.particle(0));
        assert_eq!(s.ensemble.particle(1), cand.particle(1));

        let max = SelectionPolicy::deterministic(OptimizationSense::Maximize);
        let s = select(&prev, &cand, &[1.0, 5.0], &[2.0, 3.0], max, &mut rng).unwrap();
        assert_eq!(s.costs, vec![2.0, 5.0]);
    }

    #[test]
    fn stochastic_selection_flips_sometimes() {
        let policy = SelectionPolicy {
            probability: 0.5,
            sense: OptimizationSense::Minimize,
        };
        assert_eq!(policy.perturbation_index(), Some(2));
        assert_eq!(SelectionPolicy::deterministic(OptimizationSense::Minimize).perturbation_index(), None);
        let prev = ens(&[&[0.0][..]; 64]);
        let cand = ens(&[&[1.0][..]; 64]);
        let mut rng = RngStream::new(1, 1);
        let s = select(&prev, &cand, &[0.0; 64], &[1.0; 64], policy, &mut rng).unwrap();
        let flips = s.kept.iter().filter(|k| **k).count();
        assert!(flips > 0 && flips < 64);
    }
}
