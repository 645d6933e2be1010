//! The gain-like coefficient matrix that maps innovations to additive particle
//! corrections, together with the blended innovation covariance it inverts.
//!
//! The cross moment between particles and innovations is taken against the
//! *negated* innovation: an innovation `target − h(x)` is the mismatch of an
//! observation `h(x)`, and only the centred part of `h` enters the moment.
//! With that orientation `β·G·I_j` moves particle j so as to cancel its
//! innovation, e.g. a greedy innovation pulls f(x_j) towards the extremal
//! cost.

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::ensemble::{ensemble_mean, DesignVector, Ensemble};
use crate::error::{Error, Result};
use crate::innovation::InnovationMatrix;

/// Innovation noise intensities ρ (cost block) and ρ^c (coalescence block).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIntensity {
    rho: DMatrix<f64>,
    rho_c: DMatrix<f64>,
}

impl NoiseIntensity {
    pub fn new(rho: DMatrix<f64>, rho_c: DMatrix<f64>) -> Result<Self> {
        if !rho.is_square() || !rho_c.is_square() {
            return Err(Error::Contract("noise intensities must be square".into()));
        }
        if rho.iter().chain(rho_c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Contract("noise intensities must be finite".into()));
        }
        Ok(Self { rho, rho_c })
    }

    /// `ρ = r·I` over `cost_dim` rows and `ρ^c = r_c·I` over `coalescence_dim` rows.
    pub fn diagonal(cost_dim: usize, r: f64, coalescence_dim: usize, r_c: f64) -> Self {
        Self {
            rho: DMatrix::identity(cost_dim, cost_dim) * r,
            rho_c: DMatrix::identity(coalescence_dim, coalescence_dim) * r_c,
        }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows() + self.rho_c.nrows()
    }

    /// Block-diagonal `γγᵀ = diag(ρρᵀ, ρ^c ρ^cᵀ)`.
    pub fn block_covariance(&self) -> DMatrix<f64> {
        let a = self.rho.nrows();
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        out.view_mut((0, 0), (a, a)).copy_from(&(&self.rho * self.rho.transpose()));
        out.view_mut((a, a), (d - a, d - a))
            .copy_from(&(&self.rho_c * self.rho_c.transpose()));
        out
    }

    /// Inverse perturbation intensity `⌊‖(γγᵀ)⁻¹‖₂⌋`; `None` when singular.
    pub fn perturbation_index(&self) -> Option<u64> {
        let eig = self.block_covariance().symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        // Absorb round-off such as 0.1² = 0.010000000000000002.
        (min > 0.0).then(|| ((1.0 / min) * (1.0 + 1e-12)).floor() as u64)
    }
}

/// n×d gain matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix(DMatrix<f64>);

impl GainMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }
}

/// Which previous-iteration quantities enter the τ-weighted differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftForm {
    /// `X̂_i τ_i − X̂_{i−1} τ_{i−1}` and `F̂_{i−1}` from the previous iteration.
    Generic,
    /// The driver form: `X̂ τ_i − X̂ τ_{i−1}` and `F̂ τ_{i−1}` both taken at the
    /// current iteration, with `ΔF̂` still against the previous iteration.
    #[default]
    Driver,
}

/// Previous-iteration means carried between gain evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct GainState {
    pub prev_mean: DesignVector,
    pub prev_innovation_mean: Option<DVector<f64>>,
    pub prev_tau: f64,
}

impl GainState {
    /// Bootstrap: `X̂_0` is the initial mean and the first innovation mean
    /// doubles as its own predecessor, so `ΔF̂_1 = 0`.
    pub fn new(initial_mean: DesignVector, tau0: f64) -> Self {
        Self {
            prev_mean: initial_mean,
            prev_innovation_mean: None,
            prev_tau: tau0,
        }
    }

    /// Shifts the current means into the previous slots.
    pub fn advance(&mut self, mean: DesignVector, innovation_mean: DVector<f64>, tau: f64) {
        self.prev_mean = mean;
        self.prev_innovation_mean = Some(innovation_mean);
        self.prev_tau = tau;
    }
}

/// `α/(N−1)·(F̂−F)(F̂−F)ᵀ + (1−α)·γγᵀ`.
pub fn innovation_covariance(
    innovations: &InnovationMatrix,
    alpha: f64,
    noise_covariance: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n_particles = innovations.len();
    if n_particles < 2 {
        return Err(Error::Contract(format!(
            "innovation covariance needs at least two particles, got {n_particles}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Contract(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let d = innovations.dim();
    if noise_covariance.nrows() != d || noise_covariance.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "innovation_covariance noise block",
            expected: d,
            actual: noise_covariance.nrows(),
        });
    }
    let mean = innovations.mean();
    let mut centred = innovations.matrix().clone();
    for mut col in centred.column_iter_mut() {
        col -= &mean;
    }
    let sample = &centred * centred.transpose();
    let mut cov = sample * (alpha / (n_particles as f64 - 1.0)) + noise_covariance * (1.0 - alpha);
    // Symmetrize away round-off.
    let t = cov.transpose();
    cov = (cov + t) * 0.5;
    Ok(cov)
}

/// Cross moment between particles and (negated) innovations with the
/// τ-weighted drift corrections:
///
/// `(1/N)[(X−X̂)(Yᵀτ_i − Ŷ_prevᵀτ_prev − ΔŶᵀτ_i) + (X̂τ_i − X̂_prevτ_prev)(Y−Ŷ)ᵀ]`
///
/// with `Y = −F`. Returns the n×d numerator together with the current
/// innovation mean, which the caller feeds back into [`GainState::advance`].
pub fn gain_numerator(
    ensemble: &Ensemble,
    innovations: &InnovationMatrix,
    state: &GainState,
    tau: f64,
    form: DriftForm,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n_particles = ensemble.len();
    if innovations.len() != n_particles {
        return Err(Error::DimensionMismatch {
            context: "gain_numerator particles",
            expected: n_particles,
            actual: innovations.len(),
        });
    }
    if state.prev_mean.len() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            context: "gain_numerator previous mean",
            expected: ensemble.dim(),
            actual: state.prev_mean.len(),
        });
    }
    let d = innovations.dim();
    let x_hat = ensemble_mean(ensemble);
    let f_hat = innovations.mean();
    let f_hat_before = state.prev_innovation_mean.clone().unwrap_or_else(|| f_hat.clone());
    if f_hat_before.len() != d {
        return Err(Error::DimensionMismatch {
            context: "gain_numerator previous innovation mean",
            expected: d,
            actual: f_hat_before.len(),
        });
    }

    // Observations Y = −F and their means.
    let y = -innovations.matrix();
    let y_hat = -&f_hat;
    let delta_y_hat = -(&f_hat - &f_hat_before);
    let (y_hat_prev, tau_prev, x_hat_prev) = match form {
        DriftForm::Generic => (-&f_hat_before, state.prev_tau, state.prev_mean.clone()),
        DriftForm::Driver => (y_hat.clone(), state.prev_tau, x_hat.clone()),
    };

    let mut x_centred = ensemble.matrix().clone();
    for mut col in x_centred.column_iter_mut() {
        col -= &x_hat;
    }
    // (X−X̂)·Yᵀτ_i
    let mut numerator = (&x_centred * y.transpose()) * tau;
    // (X−X̂)·rᵀ(Ŷ_prevᵀτ_prev + ΔŶᵀτ_i); (X−X̂)rᵀ is the row sum of the centred particles.
    let centred_sum = x_centred.column_sum();
    let rank_one = &y_hat_prev * tau_prev + &delta_y_hat * tau;
    numerator -= &centred_sum * rank_one.transpose();
    // (X̂τ_i − X̂_prevτ_prev)·r·(Y−Ŷr)ᵀ
    let drift = &x_hat * tau - &x_hat_prev * tau_prev;
    let mut y_centred_sum = y.column_sum();
    y_centred_sum -= &y_hat * n_particles as f64;
    numerator += &drift * y_centred_sum.transpose();

    Ok((numerator / n_particles as f64, f_hat))
}

/// `G = numerator · covariance⁻¹`.
pub fn compute_gain(numerator: &DMatrix<f64>, covariance: &DMatrix<f64>) -> Result<GainMatrix> {
    if numerator.iter().all(|v| *v == 0.0) {
        return Ok(GainMatrix(DMatrix::zeros(numerator.nrows(), numerator.ncols())));
    }
    spd_solve(covariance, numerator).map(GainMatrix)
}

/// `β·G·I_j`.
pub fn apply_correction(gain: &GainMatrix, innovation: &DVector<f64>, beta: f64) -> DVector<f64> {
    (&gain.0 * innovation) * beta
}

/// Corrections for every particle, one column per particle, with a scaling
/// factor per particle.
pub fn corrections(gain: &GainMatrix, innovations: &InnovationMatrix, betas: &[f64]) -> DMatrix<f64> {
    let mut out = &gain.0 * innovations.matrix();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= betas[j];
    }
    out
}

/// Solves `X·A = B` for symmetric positive semi-definite `A`.
///
/// A jitter `λI` with `λ = 1e−12·tr(A)/d` is added before a Cholesky solve; if
/// that fails or leaves a relative residual above 1e−8 the pseudo-inverse is
/// used instead.
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    if !a.is_square() {
        return Err(Error::Contract("spd_solve needs a square matrix".into()));
    }
    if b.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "spd_solve right-hand side",
            expected: d,
            actual: b.ncols(),
        });
    }
    let scale = a.norm();
    let asymmetry = (a - a.transpose()).norm();
    let tolerance = 1e-10 * scale;
    if asymmetry > tolerance {
        return Err(Error::NotSymmetric { asymmetry, tolerance });
    }
    let lambda = 1e-12 * a.trace() / d as f64;
    let jittered = a + DMatrix::identity(d, d) * lambda.max(0.0);
    let bt = b.transpose();

    if let Some(chol) = jittered.clone().cholesky() {
        let xt = chol.solve(&bt);
        let residual = (&jittered * &xt - &bt).norm();
        if xt.iter().all(|v| v.is_finite()) && residual <= 1e-8 * bt.norm().max(f64::MIN_POSITIVE) {
            return Ok(xt.transpose());
        }
    }
    debug!("spd_solve: Cholesky failed or inaccurate, using pseudo-inverse (d = {d})");
    let pinv = jittered
        .pseudo_inverse(1e-14 * scale.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Contract(format!("pseudo-inverse failed: {e}")))?;
    Ok(b * pinv)
}
