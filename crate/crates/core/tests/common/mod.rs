//! Independent reference computations shared by the integration tests.
//! Nothing here touches the FFT or the barycentric interpolator.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use sinfreq::dft::{start_index, SignalFrame1D, SignalFrame2D};

/// `Σ_m z(m) e^{-j2πfm}` by direct summation.
pub fn direct_corr_1d(data: &[Complex64], f: f64) -> Complex64 {
    let m1 = start_index(data.len());
    data.iter()
        .enumerate()
        .map(|(i, z)| z * Complex64::from_polar(1.0, -2.0 * PI * f * (m1 + i as i64) as f64))
        .sum()
}

pub fn direct_corr_2d(rows: usize, cols: usize, data: &[Complex64], f1: f64, f2: f64) -> Complex64 {
    let (m1, n1) = (start_index(rows), start_index(cols));
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..rows {
        for j in 0..cols {
            let ph = f1 * (m1 + i as i64) as f64 + f2 * (n1 + j as i64) as f64;
            acc += data[i * cols + j] * Complex64::from_polar(1.0, -2.0 * PI * ph);
        }
    }
    acc
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Dense scan of `|c(f)|²` over `[-1/2, 1/2)` at spacing `step`, using
/// phasor recurrences, then golden-section refinement around the best point.
pub fn oracle_ml_1d(frame: &SignalFrame1D, step: f64) -> f64 {
    let data = frame.data();
    let m1 = start_index(data.len());
    let count = (1.0 / step).round() as usize;
    // Per-sample rotating terms z(m) e^{-j2π f m}, advanced by e^{-j2π step m}.
    let mut terms: Vec<Complex64> = data
        .iter()
        .enumerate()
        .map(|(i, z)| z * Complex64::from_polar(1.0, 2.0 * PI * 0.5 * (m1 + i as i64) as f64))
        .collect();
    let rot: Vec<Complex64> = (0..data.len())
        .map(|i| Complex64::from_polar(1.0, -2.0 * PI * step * (m1 + i as i64) as f64))
        .collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for k in 0..count {
        if k % 4096 == 0 {
            // Re-anchor to stop the recurrence drifting.
            let f = -0.5 + k as f64 * step;
            for (i, (t, z)) in terms.iter_mut().zip(data).enumerate() {
                *t = z * Complex64::from_polar(1.0, -2.0 * PI * f * (m1 + i as i64) as f64);
            }
        }
        let v = terms.iter().sum::<Complex64>().norm_sqr();
        if v > best.0 {
            best = (v, k);
        }
        for (t, r) in terms.iter_mut().zip(&rot) {
            *t *= r;
        }
    }
    let centre = -0.5 + best.1 as f64 * step;
    golden_max(|f| direct_corr_1d(data, f).norm_sqr(), centre - step, centre + step, 1e-13)
}

/// 2-D reference maximizer: scan on a grid of `per_lobe` points per main
/// lobe half-width, then alternate golden-section searches per axis around
/// the best few candidates until the point stops moving.
pub fn oracle_ml_2d(frame: &SignalFrame2D, per_lobe: usize) -> [f64; 2] {
    let (rows, cols) = (frame.rows(), frame.cols());
    let data = frame.data();
    let cost = |f1: f64, f2: f64| direct_corr_2d(rows, cols, data, f1, f2).norm_sqr();
    let s1 = 1.0 / (rows * per_lobe) as f64;
    let s2 = 1.0 / (cols * per_lobe) as f64;
    let (n1, n2) = ((1.0 / s1) as usize, (1.0 / s2) as usize);
    let mut scored = Vec::with_capacity(n1 * n2);
    for a in 0..n1 {
        for b in 0..n2 {
            let (f1, f2) = (-0.5 + a as f64 * s1, -0.5 + b as f64 * s2);
            scored.push((cost(f1, f2), f1, f2));
        }
    }
    scored.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let mut best = (f64::NEG_INFINITY, [0.0; 2]);
    for &(_, f1, f2) in scored.iter().take(4) {
        let mut p = [f1, f2];
        for _ in 0..60 {
            let prev = p;
            p[0] = golden_max(|x| cost(x, p[1]), p[0] - 2.0 * s1, p[0] + 2.0 * s1, 1e-13);
            p[1] = golden_max(|y| cost(p[0], y), p[1] - 2.0 * s2, p[1] + 2.0 * s2, 1e-13);
            if (p[0] - prev[0]).abs() < 1e-12 && (p[1] - prev[1]).abs() < 1e-12 {
                break;
            }
        }
        let v = cost(p[0], p[1]);
        if v > best.0 {
            best = (v, p);
        }
    }
    best.1
}

/// Circular wrap of a frequency difference into `[-1/2, 1/2)`.
pub fn wrapped_diff(a: f64, b: f64) -> f64 {
    sinfreq::dft::wrap_frequency(a - b)
}

/// Fitted slope of `ys` against `xs` by least squares.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
