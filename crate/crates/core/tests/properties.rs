use combeo::benchmarks::basic::{rosenbrock, schwefel_1_2};
use combeo::gain::{compute_gain, corrections, gain_numerator, innovation_covariance, GainState};
use combeo::innovation::{build_coalescence_innovation, stack_innovation_matrix};
use combeo::perturbation::{sample_derangement, sample_permutation, scramble_whole};
use combeo::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn ensemble_from(values: &[f64], n: usize) -> Ensemble {
    Ensemble::from_matrix(DMatrix::from_column_slice(n, values.len() / n, values)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn collapsed_ensemble_has_zero_numerator_and_corrections(
        point in prop::collection::vec(-50.0f64..50.0, 1..6),
        n_particles in 2usize..8,
        innov in prop::collection::vec(-10.0f64..10.0, 1..4),
        tau in 1.0f64..2.0,
    ) {
        let x = DVector::from_vec(point.clone());
        let ens = Ensemble::from_particles(&vec![x.clone(); n_particles]).unwrap();
        let f = stack_innovation_matrix(&vec![DVector::from_vec(innov.clone()); n_particles]).unwrap();
        let state = GainState::new(x, tau);
        let (num, _) = gain_numerator(&ens, &f, &state, tau, DriftForm::Driver).unwrap();
        prop_assert!(num.amax() <= 1e-10);
        let noise = NoiseIntensity::diagonal(innov.len(), 1e-2, 0, 1e-2).block_covariance();
        let cov = innovation_covariance(&f, 0.8, &noise).unwrap();
        let gain = compute_gain(&num, &cov).unwrap();
        let d = corrections(&gain, &f, &vec![1.0; n_particles]);
        prop_assert!(d.amax() <= 1e-10);
    }

    #[test]
    fn coalescence_vanishes_on_collapsed_ensemble(
        point in prop::collection::vec(-5.0f64..5.0, 1..5),
        n_particles in 2usize..7,
        seed in any::<u64>(),
    ) {
        let ens = Ensemble::from_particles(&vec![DVector::from_vec(point); n_particles]).unwrap();
        let sigma1 = sample_derangement(n_particles, &mut RngStream::new(seed, 0)).unwrap();
        for j in 0..n_particles {
            let c = build_coalescence_innovation(&ens, j, &sigma1).unwrap();
            prop_assert!(c.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn permutations_are_bijections(n in 1usize..40, seed in any::<u64>()) {
        let mut p = sample_permutation(n, &mut RngStream::new(seed, 3));
        p.sort_unstable();
        prop_assert_eq!(p, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn derangements_have_no_fixed_points(n in 2usize..40, seed in any::<u64>()) {
        let d = sample_derangement(n, &mut RngStream::new(seed, 4)).unwrap();
        prop_assert!(d.iter().enumerate().all(|(j, &k)| j != k));
        let mut s = d.clone();
        s.sort_unstable();
        prop_assert_eq!(s, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn whole_scramble_with_zero_corrections_permutes_columns(
        values in prop::collection::vec(-1.0f64..1.0, 12),
        seed in any::<u64>(),
    ) {
        let base = ensemble_from(&values, 3);
        let sigma2 = sample_permutation(base.len(), &mut RngStream::new(seed, 5));
        let out = scramble_whole(&base, &DMatrix::zeros(3, base.len()), &sigma2).unwrap();
        for (j, &k) in sigma2.iter().enumerate() {
            prop_assert_eq!(out.particle(j), base.particle(k));
        }
    }

    #[test]
    fn covariance_blend_endpoints(
        innov in prop::collection::vec(-3.0f64..3.0, 2..5),
        n_particles in 2usize..6,
        noise_diag in prop::collection::vec(1e-3f64..1.0, 4),
        alpha in 0.01f64..1.0,
    ) {
        let d = innov.len();
        let noise = DMatrix::from_diagonal(&DVector::from_iterator(d, noise_diag.iter().cycle().copied().take(d)));
        // Constant innovations leave only (1−α)γγᵀ.
        let constant = stack_innovation_matrix(&vec![DVector::from_vec(innov.clone()); n_particles]).unwrap();
        let cov = innovation_covariance(&constant, alpha, &noise).unwrap();
        prop_assert!((cov - &noise * (1.0 - alpha)).amax() <= 1e-10);

        // α → 0 recovers γγᵀ.
        let varied: Vec<DVector<f64>> =
            (0..n_particles).map(|j| DVector::from_vec(innov.iter().map(|v| v * j as f64).collect())).collect();
        let f = stack_innovation_matrix(&varied).unwrap();
        let tiny = 1e-12;
        let cov = innovation_covariance(&f, tiny, &noise).unwrap();
        prop_assert!((cov - &noise).amax() <= 1e-10);
    }

    #[test]
    fn composite_optima_vanish(idx in 0usize..11, seed in 0u64..1000) {
        let id = BenchmarkId::ALL[9 + idx];
        let inst = make_instance(id, 16, 4, seed).unwrap();
        let opt = known_optimum(&inst);
        let x = match opt.as_ref().and_then(|o| o.x.clone()) {
            Some(x) => x,
            None => {
                // F7 has no recorded optimum.
                prop_assert_eq!(id, BenchmarkId::F7);
                return Ok(());
            }
        };
        prop_assert!(inst.evaluate(x.as_slice()).abs() <= 1e-10);
    }

    #[test]
    fn identity_rotation_matches_unrotated(
        x in prop::collection::vec(-5.0f64..5.0, 6),
        pair in 0usize..3,
    ) {
        let (plain, rotated) = [
            (BenchmarkId::B2, BenchmarkId::B3),
            (BenchmarkId::B6, BenchmarkId::B7),
            (BenchmarkId::B8, BenchmarkId::B9),
        ][pair];
        let eye = DMatrix::identity(6, 6);
        let a = eval_basic(plain, &x, None, AckleyForm::AsPrinted);
        let b = eval_basic(rotated, &x, Some(&eye), AckleyForm::AsPrinted);
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn best_cost_never_worsens_on_seeded_runs(seed in 0u64..10_000, which in 0usize..5) {
        let inst = make_instance(BenchmarkId::B6, 3, 3, seed).unwrap();
        let cfg = OptimizerConfig { population: 8, max_iter: 15, seed, acceptance_probability: 0.5, ..Default::default() };
        let rec = match which {
            0 => run_greedy_scramble(&inst, &cfg),
            1 => run_elementwise_scramble(&inst, &cfg),
            2 => run_best_memory(&inst, &cfg),
            3 => run_de(&inst, &DeConfig { population: 8, max_iter: 15, seed, ..Default::default() }),
            _ => run_pso(&inst, &PsoConfig { population: 8, max_iter: 15, seed, ..Default::default() }),
        }
        .unwrap();
        for w in rec.trace.windows(2) {
            prop_assert!(w[1].best_cost <= w[0].best_cost);
            prop_assert_eq!(w[1].evals, w[0].evals + 8);
        }
        prop_assert_eq!(rec.trace[0].evals, 8);
        let (lo, hi) = BenchmarkId::B6.domain();
        prop_assert!(rec.final_mean.iter().all(|v| *v >= lo && *v <= hi));
    }

    #[test]
    fn theta_is_affine(m in 1usize..500, i in 0usize..500) {
        let i = i % m;
        let expected = 1.0 - 0.9 * i as f64 / m as f64;
        prop_assert!((combeo::optimizers::theta(i, m, 1.0, 0.1) - expected).abs() <= 1e-15);
    }
}

#[test]
fn basic_identities() {
    assert_eq!(schwefel_1_2(&[1.0, 2.0, 3.0]), 46.0);
    assert_eq!(rosenbrock(&[1.0; 7]), 0.0);
    for id in BenchmarkId::BASIC {
        let inst = make_instance(id, 6, 6, 0).unwrap();
        let at = if id == BenchmarkId::B5 { vec![1.0; 6] } else { vec![0.0; 6] };
        assert!(inst.evaluate(&at).abs() <= 1e-10, "{id}");
    }
}

#[test]
fn rotations_are_orthogonal() {
    for m in [1, 2, 5, 12] {
        let q = gen_rotation(m, 17);
        assert!(combeo::benchmarks::orthogonality_residual(&q) <= 1e-10);
    }
}
