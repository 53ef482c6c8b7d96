mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sinfreq::baselines::{crb, dominant_svd, subspace_estimate, SVD_MAX_ITERS, SVD_TOL};
use sinfreq::dft::{correlation_surface_2d, SignalFrame, SignalFrame2D};
use sinfreq::ml::{refine_2d, NewtonConfig};
use sinfreq::simkit::{synthesize, trial_rng};

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SignalFrame2D {
    let data = (0..m * n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    SignalFrame2D::new(m, n, data).unwrap()
}

fn frame_2d(m: usize, n: usize, f: [f64; 2], snr_db: f64, rng: &mut ChaCha8Rng) -> SignalFrame2D {
    match synthesize(2, m, n, f, snr_db, rng).unwrap() {
        SignalFrame::TwoD(x) => x,
        _ => unreachable!(),
    }
}

#[test]
fn sigma_matches_dense_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(86);
    for (m, n) in [(8, 6), (6, 8), (12, 12), (3, 17)] {
        for _ in 0..5 {
            let z = random_matrix(&mut rng, m, n);
            let dense = DMatrix::from_row_slice(m, n, z.data());
            let want = dense.singular_values().max();
            let got = dominant_svd(&z, SVD_TOL, SVD_MAX_ITERS).unwrap();
            assert!((got.sigma1 - want).abs() < 1e-9 * want, "{m}x{n}: {} vs {want}", got.sigma1);
        }
    }
}

#[test]
fn singular_vectors_satisfy_both_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let z = random_matrix(&mut rng, 10, 7);
    let svd = dominant_svd(&z, SVD_TOL, SVD_MAX_ITERS).unwrap();
    let dense = DMatrix::from_row_slice(10, 7, z.data());
    let v = nalgebra::DVector::from_vec(svd.v1.clone());
    let u = nalgebra::DVector::from_vec(svd.u1.clone());
    let forward = (&dense * &v - &u * Complex64::new(svd.sigma1, 0.0)).norm();
    let backward = (dense.adjoint() * &u - &v * Complex64::new(svd.sigma1, 0.0)).norm();
    assert!(forward <= 10.0 * SVD_TOL * svd.sigma1);
    assert!(backward <= 10.0 * SVD_TOL * svd.sigma1);
    assert!((u.norm() - 1.0).abs() < 1e-12 && (v.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn unit_phase_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = NewtonConfig::default();
    for _ in 0..10 {
        let z = frame_2d(16, 20, [0.31, -0.2], 10.0, &mut rng);
        let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        let rotated = SignalFrame2D::new(16, 20, z.data().iter().map(|x| x * phase).collect()).unwrap();
        let a = subspace_estimate(&z, [32, 64], &cfg).unwrap();
        let b = subspace_estimate(&rotated, [32, 64], &cfg).unwrap();
        for i in 0..2 {
            assert!(common::wrapped_diff(a.freqs[i], b.freqs[i]).abs() < 1e-9);
        }
        let sa = dominant_svd(&z, SVD_TOL, SVD_MAX_ITERS).unwrap().sigma1;
        let sb = dominant_svd(&rotated, SVD_TOL, SVD_MAX_ITERS).unwrap().sigma1;
        assert!((sa - sb).abs() < 1e-9 * sa);
    }
}

#[test]
fn noise_free_reference_frequencies_keep_their_signs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let truth = [0.234452, -0.143254];
    let z = frame_2d(40, 52, truth, f64::INFINITY, &mut rng);
    let e = subspace_estimate(&z, [128, 128], &NewtonConfig::default()).unwrap();
    assert!(e.converged);
    assert!((e.freqs[0] - truth[0]).abs() < 1e-8);
    assert!((e.freqs[1] - truth[1]).abs() < 1e-8);
}

#[test]
fn pure_noise_does_not_error() {
    for t in 0..20 {
        let mut rng = trial_rng(31, 0, t);
        let m = rng.random_range(4..20);
        let n = rng.random_range(4..20);
        let z = random_matrix(&mut rng, m, n);
        let e = subspace_estimate(&z, [64, 64], &NewtonConfig::default()).unwrap();
        assert!(e.freqs.iter().all(|f| (-0.5..0.5).contains(f)));
    }
}

#[test]
fn crb_scaling_across_sizes() {
    let reference = crb(16, 16, 3.0).unwrap();
    let k = reference.var_f1 * 16.0 * (16.0 * 16.0 - 1.0) * 16.0;
    for m in [16usize, 32, 64] {
        for n in [8usize, 16, 64] {
            let c = crb(m, n, 3.0).unwrap();
            let mf = m as f64;
            let got = c.var_f1 * mf * (mf * mf - 1.0) * n as f64;
            assert!((got - k).abs() < 1e-14 * k);
        }
    }
    assert!(crb(1, 5, 1.0).is_err());
    assert!(crb(5, 5, 0.0).is_err());
    assert!(crb(5, 5, f64::INFINITY).is_err());
}

#[test]
fn ml_attains_bound_at_20_db() {
    let (m, n, trials) = (64, 64, 300);
    let truth = [0.234452, -0.143254];
    let cfg = NewtonConfig::default();
    let mut sq = [0.0; 2];
    for t in 0..trials {
        let mut rng = trial_rng(20, 0, t);
        let z = frame_2d(m, n, truth, 20.0, &mut rng);
        let e = refine_2d(&correlation_surface_2d(&z, [128, 128]).unwrap(), &cfg).unwrap();
        for a in 0..2 {
            sq[a] += common::wrapped_diff(e.freqs[a], truth[a]).powi(2);
        }
    }
    let bound = crb(m, n, 100.0).unwrap();
    for (a, var) in [bound.var_f1, bound.var_f2].into_iter().enumerate() {
        let ratio = (sq[a] / trials as f64).sqrt() / var.sqrt();
        assert!((ratio - 1.0).abs() < 0.15, "axis {a}: RMSE/sqrt(CRB) = {ratio}");
    }
}
