//! Barycentric interpolation of band-limited signals.
//!
//! A signal with two-sided bandwidth `B`, sampled with period `T` (`BT < 1`),
//! is reconstructed near `t = nT + u` from the `2P + 1` samples
//! `s((n + p)T)`, `p = -P..=P`, using the rational form
//!
//! ```text
//!            Σ_p s((n+p)T) w_p / (u - pT)
//! s(t) ≈  ---------------------------------
//!                 Σ_p w_p / (u - pT)
//! ```
//!
//! The weights are samples `w_p = W(pT)` of a windowed weight function whose
//! window is a Kaiser-like pulse with shape parameter `π(1 - BT)(P + 1)`.
//! The truncation error decays roughly like `exp(-π(1 - BT)P)`.
//!
//! The kernel is linear in the samples, so every evaluation is expressed as
//! three coefficient vectors (value, first and second derivative). This form
//! is reused by the separable 2-D evaluator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Precomputed barycentric weights for one `(P, T, B)` configuration.
///
/// Immutable after construction; share freely between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct BaryKernel {
    half_width: usize,
    period: f64,
    bandwidth: f64,
    /// Indexed by `p + P`, normalized so that `max |w_p| = 1`.
    weights: Vec<f64>,
}

/// `t = n T + u` with `n = floor(t / T + 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuloDecomposition {
    pub index: i64,
    pub offset: f64,
}

/// Interpolated value and its first two derivatives with respect to the
/// interpolation variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpValue {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

/// Linear coefficients of the interpolant at a fixed offset: the value is
/// `Σ value[i] s_i`, and likewise for the derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Coefficients {
    pub fn apply(&self, samples: &[Complex64]) -> InterpValue {
        let dot = |c: &[f64]| {
            c.iter()
                .zip(samples)
                .fold(Complex64::new(0.0, 0.0), |acc, (&w, &s)| acc + s * w)
        };
        InterpValue {
            value: dot(&self.value),
            d1: dot(&self.d1),
            d2: dot(&self.d2),
        }
    }
}

/// `ln(sinh(πx) / (πx))` for `x ≥ 0`, stable for large `x`.
fn ln_sinhc(x: f64) -> f64 {
    let y = PI * x;
    if y < 1e-4 {
        // sinh(y)/y = 1 + y²/6 + y⁴/120 + ...
        let y2 = y * y;
        return (y2 / 6.0 + y2 * y2 / 120.0).ln_1p();
    }
    // ln sinh y = y + ln(1 - e^{-2y}) - ln 2
    y + (-(-2.0 * y).exp()).ln_1p() - std::f64::consts::LN_2 - y.ln()
}

impl BaryKernel {
    /// Builds the kernel for truncation index `half_width` (P), sampling
    /// period `period` (T) and two-sided bandwidth `bandwidth` (B).
    pub fn new(half_width: usize, period: f64, bandwidth: f64) -> Result<Self> {
        if half_width < 1 {
            return invalid("truncation index P must be at least 1");
        }
        if !period.is_finite() || period <= 0.0 {
            return invalid(format!("sampling period must be finite and positive, got {period}"));
        }
        if !bandwidth.is_finite() || bandwidth < 0.0 {
            return invalid(format!("bandwidth must be finite and non-negative, got {bandwidth}"));
        }
        let bt = bandwidth * period;
        if bt >= 1.0 {
            return invalid(format!("Nyquist condition violated: BT = {bt} >= 1"));
        }

        // At t = pT the Gamma product equals (P+p)!(P-p)! and
        // L'(pT) = T^{2P} (-1)^{P-p} (P+p)!(P-p)!, so the factorials cancel
        // and w_p = (-1)^{P-p} g(pT) up to the common factor T^{-2P}.
        let big_p = half_width as i64;
        let shape = 1.0 - bt;
        let edge = (big_p + 1) as f64;
        let ln_norm = ln_sinhc(shape * edge);
        let mut weights: Vec<f64> = (-big_p..=big_p)
            .map(|p| {
                let pf = p as f64;
                let arg = shape * (edge * edge - pf * pf).sqrt();
                let pulse = (ln_sinhc(arg) - ln_norm).exp();
                if (big_p - p) % 2 == 0 {
                    pulse
                } else {
                    -pulse
                }
            })
            .collect();
        let scale = weights.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        for w in &mut weights {
            *w /= scale;
        }
        if weights.iter().any(|w| !w.is_finite() || *w == 0.0) {
            return invalid("weight generation produced a zero or non-finite weight");
        }
        Ok(Self {
            half_width,
            period,
            bandwidth,
            weights,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Number of taps, `2P + 1`.
    pub fn taps(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Weights ordered from `p = -P` to `p = P`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, p: i64) -> f64 {
        self.weights[(p + self.half_width as i64) as usize]
    }

    pub fn decompose(&self, t: f64) -> ModuloDecomposition {
        let index = (t / self.period + 0.5).floor();
        ModuloDecomposition {
            index: index as i64,
            offset: t - index * self.period,
        }
    }

    /// Coefficients at offset `u` measured from the centre node. Valid for
    /// any `u` inside the stencil span `[-PT, PT]`; [`Self::interpolate`]
    /// additionally enforces `|u| ≤ T/2`.
    ///
    /// The quotient is regularized around the nearest node `x_j`:
    /// with `δ = u - x_j` and `D̂ = w_j + δ Σ_{k≠j} w_k/(u - x_k)`,
    /// `s(u) = s_j + δ Σ_{k≠j} (s_k - s_j) w_k / ((u - x_k) D̂)`.
    /// Nothing in this form is singular, and at `δ = 0` the value
    /// coefficients are exactly the unit vector `e_j`.
    pub fn coefficients(&self, u: f64) -> Coefficients {
        let taps = self.taps();
        let big_p = self.half_width as f64;
        let t = self.period;
        let j = ((u / t).round().clamp(-big_p, big_p) + big_p) as usize;
        let node = |k: usize| (k as f64 - big_p) * t;
        let delta = u - node(j);

        // b_k = w_k/(u - x_k) and its u-derivatives for k != j.
        let mut b = vec![0.0; taps];
        let mut b1 = vec![0.0; taps];
        let mut b2 = vec![0.0; taps];
        let (mut rest, mut rest1, mut rest2) = (0.0, 0.0, 0.0);
        for k in (0..taps).filter(|&k| k != j) {
            let inv = 1.0 / (u - node(k));
            let w = self.weights[k];
            b[k] = w * inv;
            b1[k] = -w * inv * inv;
            b2[k] = 2.0 * w * inv * inv * inv;
            rest += b[k];
            rest1 += b1[k];
            rest2 += b2[k];
        }
        let dhat = self.weights[j] + delta * rest;
        let dhat1 = rest + delta * rest1;
        let dhat2 = 2.0 * rest1 + delta * rest2;

        // F = Σ_{k≠j} (s_k - s_j) φ_k with φ_k = b_k / D̂.
        let mut phi = vec![0.0; taps];
        let mut phi1 = vec![0.0; taps];
        let mut phi2 = vec![0.0; taps];
        for k in (0..taps).filter(|&k| k != j) {
            phi[k] = b[k] / dhat;
            phi1[k] = (b1[k] - phi[k] * dhat1) / dhat;
            phi2[k] = (b2[k] - 2.0 * phi1[k] * dhat1 - phi[k] * dhat2) / dhat;
        }
        let sum_excl = |v: &[f64]| -> f64 { v.iter().sum() };
        phi[j] = -sum_excl(&phi);
        phi1[j] = -sum_excl(&phi1);
        phi2[j] = -sum_excl(&phi2);

        // s = s_j + δF, s' = F + δF', s'' = 2F' + δF''.
        let mut value: Vec<f64> = phi.iter().map(|&c| delta * c).collect();
        value[j] = if delta == 0.0 { 1.0 } else { 1.0 + delta * phi[j] };
        let d1 = phi
            .iter()
            .zip(&phi1)
            .map(|(&c, &c1)| c + delta * c1)
            .collect();
        let d2 = phi1
            .iter()
            .zip(&phi2)
            .map(|(&c1, &c2)| 2.0 * c1 + delta * c2)
            .collect();
        Coefficients { value, d1, d2 }
    }

    /// Evaluates at offset `u` anywhere inside the stencil span; `samples[i]`
    /// holds `s((n + i - P)T)`.
    pub fn evaluate(&self, samples: &[Complex64], u: f64) -> Result<InterpValue> {
        if samples.len() != self.taps() {
            return invalid(format!(
                "expected {} samples, got {}",
                self.taps(),
                samples.len()
            ));
        }
        if !u.is_finite() {
            return invalid("offset must be finite");
        }
        Ok(self.coefficients(u).apply(samples))
    }

    /// Interpolates at `nT + u` from `samples[i] = s((n + i - P)T)`, with
    /// `|u| ≤ T/2` as produced by [`Self::decompose`].
    pub fn interpolate(&self, samples: &[Complex64], u: f64) -> Result<InterpValue> {
        // Slack for offsets produced by decompose() rounding.
        if !(u.abs() <= 0.5 * self.period * (1.0 + 1e-12)) {
            return invalid(format!(
                "offset {u} outside [-T/2, T/2] with T = {}",
                self.period
            ));
        }
        self.evaluate(samples, u)
    }
}

/// For each frequency in `freqs`, the largest error `|e^{j2πfu} - φ(f, u)|`
/// over `offsets`, where `φ` interpolates exact exponential samples.
pub fn error_spectrum(kernel: &BaryKernel, freqs: &[f64], offsets: &[f64]) -> Result<Vec<f64>> {
    if freqs.is_empty() || offsets.is_empty() {
        return invalid("frequency and offset grids must be non-empty");
    }
    let half_band = 0.5 * kernel.bandwidth() * (1.0 + 1e-12);
    if let Some(f) = freqs.iter().find(|f| !(f.abs() <= half_band)) {
        return invalid(format!("frequency {f} outside [-B/2, B/2]"));
    }
    let half_period = 0.5 * kernel.period() * (1.0 + 1e-12);
    if let Some(u) = offsets.iter().find(|u| !(u.abs() <= half_period)) {
        return invalid(format!("offset {u} outside [-T/2, T/2]"));
    }

    let big_p = kernel.half_width() as i64;
    let coefs: Vec<Coefficients> = offsets.iter().map(|&u| kernel.coefficients(u)).collect();
    let t = kernel.period();
    Ok(freqs
        .iter()
        .map(|&f| {
            let samples: Vec<Complex64> = (-big_p..=big_p)
                .map(|p| Complex64::from_polar(1.0, 2.0 * PI * f * p as f64 * t))
                .collect();
            offsets
                .iter()
                .zip(&coefs)
                .map(|(&u, c)| {
                    let exact = Complex64::from_polar(1.0, 2.0 * PI * f * u);
                    (exact - c.apply(&samples).value).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

/// `n` points evenly spaced over `[lo, hi]`, both ends included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
