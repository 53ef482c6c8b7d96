//! Comparison apparatus: the SVD-subspace estimator and the Cramér–Rao bound.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dft::{correlation_surface_1d, SignalFrame1D, SignalFrame2D};
use crate::error::{invalid, Error, Result};
use crate::ml::{refine_1d, Estimate2D, NewtonConfig};

/// Dominant singular triplet of a data matrix, `Z v1 = sigma1 u1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceVectors {
    pub u1: Vec<Complex64>,
    pub v1: Vec<Complex64>,
    pub sigma1: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    pub var_f1: f64,
    pub var_f2: f64,
    pub snr_linear: f64,
    pub m: usize,
    pub n: usize,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn scale(v: &mut [Complex64], s: f64) {
    for z in v {
        *z *= s;
    }
}

/// `Z x`
fn mul(z: &SignalFrame2D, x: &[Complex64], out: &mut [Complex64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = z.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// `Zᴴ y`
fn mul_adjoint(z: &SignalFrame2D, y: &[Complex64], out: &mut [Complex64]) {
    out.fill(Complex64::new(0.0, 0.0));
    for (i, yi) in y.iter().enumerate() {
        for (o, a) in out.iter_mut().zip(z.row(i)) {
            *o += a.conj() * yi;
        }
    }
}

/// Power iteration on `(Z, Zᴴ)` from the normalized all-ones vector.
///
/// Stops when successive singular value estimates agree to `tol` relative and
/// the adjoint residual `‖Zᴴu1 - sigma1 v1‖` is below `10 tol sigma1`.
pub fn dominant_svd(z: &SignalFrame2D, tol: f64, max_iters: usize) -> Result<SubspaceVectors> {
    if !(tol > 0.0) || max_iters == 0 {
        return invalid("tolerance must be positive and max_iters at least 1");
    }
    let (rows, cols) = (z.rows(), z.cols());
    if z.data().iter().all(|c| c.norm_sqr() == 0.0) {
        return Err(Error::Degenerate("data matrix is zero".into()));
    }
    let mut u = vec![Complex64::new(1.0 / (rows as f64).sqrt(), 0.0); rows];
    let mut v = vec![Complex64::new(0.0, 0.0); cols];
    let mut zv = vec![Complex64::new(0.0, 0.0); rows];

    mul_adjoint(z, &u, &mut v);
    if norm(&v) <= 1e-300 {
        // All-ones start is orthogonal to the row space: restart at random.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for c in u.iter_mut() {
            *c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        let n = norm(&u);
        scale(&mut u, 1.0 / n);
        mul_adjoint(z, &u, &mut v);
    }

    let mut adj = vec![Complex64::new(0.0, 0.0); cols];
    let mut sigma_prev = 0.0;
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iters {
        let nv = norm(&v);
        scale(&mut v, 1.0 / nv);
        mul(z, &v, &mut zv);
        let sigma = norm(&zv);
        u.copy_from_slice(&zv);
        scale(&mut u, 1.0 / sigma);
        // The next adjoint product doubles as the residual check.
        mul_adjoint(z, &u, &mut adj);
        residual = v
            .iter()
            .zip(&adj)
            .map(|(vi, ai)| (ai - vi * sigma).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if (sigma - sigma_prev).abs() < tol * sigma && residual <= 10.0 * tol * sigma {
            return Ok(SubspaceVectors {
                u1: u,
                v1: v,
                sigma1: sigma,
                iters: iter,
            });
        }
        sigma_prev = sigma;
        std::mem::swap(&mut v, &mut adj);
    }
    Err(Error::NotConverged {
        iters: max_iters,
        residual,
    })
}

/// Default power-iteration settings used by [`subspace_estimate`].
pub const SVD_TOL: f64 = 1e-10;
pub const SVD_MAX_ITERS: usize = 20_000;

/// Runs the 1-D ML estimator on the dominant left singular vector (axis 1)
/// and on the conjugated dominant right singular vector (axis 2).
///
/// With `Z = σ u vᴴ` a rank-one tone `e^{j2π(f1 m + f2 n)}` gives
/// `v ∝ e^{-j2π f2 n}`, so `v` is conjugated before the search.
/// `iters` is the sum of both Newton runs; `cost` is the 2-D cost of the
/// rank-one approximation at the estimate, `σ² |c_u(f1)|² |c_v(f2)|²`.
pub fn subspace_estimate(frame: &SignalFrame2D, sizes: [usize; 2], config: &NewtonConfig) -> Result<Estimate2D> {
    let svd = dominant_svd(frame, SVD_TOL, SVD_MAX_ITERS)?;
    let left = SignalFrame1D::new(svd.u1)?;
    let right = SignalFrame1D::new(svd.v1.iter().map(|z| z.conj()).collect())?;
    let e1 = refine_1d(&correlation_surface_1d(&left, sizes[0])?, config)?;
    let cfg2 = NewtonConfig { p1: config.p2, ..*config };
    let e2 = refine_1d(&correlation_surface_1d(&right, sizes[1])?, &cfg2)?;
    Ok(Estimate2D {
        freqs: [e1.freq, e2.freq],
        coarse_freqs: [e1.coarse_freq, e2.coarse_freq],
        coarse_index: (e1.coarse_index, e2.coarse_index),
        cost: svd.sigma1 * svd.sigma1 * e1.cost * e2.cost,
        iters: e1.iters + e2.iters,
        converged: e1.converged && e2.converged,
    })
}

/// Frequency variance bound of one axis with `len` samples per line and
/// `lines` independent lines, amplitude and phase unknown.
fn frequency_bound(len: usize, lines: usize, snr_linear: f64) -> f64 {
    let l = len as f64;
    6.0 / ((2.0 * PI).powi(2) * snr_linear * lines as f64 * l * (l * l - 1.0))
}

fn check_snr(snr_linear: f64) -> Result<()> {
    if !(snr_linear > 0.0) || !snr_linear.is_finite() {
        return invalid(format!("SNR must be positive and finite, got {snr_linear}"));
    }
    Ok(())
}

/// Cramér–Rao bound for `(f1, f2)` of a unit-amplitude 2-D tone in white
/// circular Gaussian noise, `snr_linear = |a|²/σ²`.
pub fn crb(m: usize, n: usize, snr_linear: f64) -> Result<CrbReport> {
    if m < 2 || n < 2 {
        return invalid(format!("CRB needs M, N >= 2, got {m}x{n}"));
    }
    check_snr(snr_linear)?;
    Ok(CrbReport {
        var_f1: frequency_bound(m, n, snr_linear),
        var_f2: frequency_bound(n, m, snr_linear),
        snr_linear,
        m,
        n,
    })
}

/// 1-D bound; reported with `n = 1` and `var_f2 = 0`.
pub fn crb_1d(m: usize, snr_linear: f64) -> Result<CrbReport> {
    if m < 2 {
        return invalid(format!("CRB needs M >= 2, got {m}"));
    }
    check_snr(snr_linear)?;
    Ok(CrbReport {
        var_f1: frequency_bound(m, 1, snr_linear),
        var_f2: 0.0,
        snr_linear,
        m,
        n: 1,
    })
}
