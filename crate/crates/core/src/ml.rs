//! Newton refinement of the coarse FFT peak on the barycentrically
//! interpolated cost `L̃(f) = |c̃(f)|²`.
//!
//! Derivatives carry the `2/M` (or `2/(MN)`) normalization, the value does
//! not; the Newton step is unaffected by either. Interpolation runs on the
//! correlation demodulated by the midpoint of the sample instants, which
//! narrows its bandwidth to `M - 1` without changing `|c|²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft::{
    centre_twice, coarse_peak_1d, coarse_peak_2d, demodulation, grid_frequency, wrap_frequency, CostSurface1D,
    CostSurface2D,
};
use crate::error::{invalid, Result};
use crate::interp::{BaryKernel, InterpValue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Truncation index on axis 1 (and the only one used in 1-D).
    pub p1: usize,
    pub p2: usize,
    pub max_iters: usize,
    /// Stop once the Newton step is below `grad_tol * Δf` on every axis.
    pub grad_tol: f64,
    /// Largest step, and largest distance from the coarse peak, in cells.
    pub step_clamp: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            p1: 8,
            p2: 8,
            max_iters: 12,
            grad_tol: 1e-10,
            step_clamp: 1.0,
        }
    }
}

impl NewtonConfig {
    pub fn with_truncation(p: usize) -> Self {
        Self {
            p1: p,
            p2: p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p1 < 1 || self.p2 < 1 {
            return invalid("truncation indices must be at least 1");
        }
        if self.max_iters < 1 {
            return invalid("max_iters must be at least 1");
        }
        if !(self.grad_tol > 0.0) || !self.grad_tol.is_finite() {
            return invalid("grad_tol must be positive");
        }
        if !(self.step_clamp > 0.0) || !self.step_clamp.is_finite() {
            return invalid("step_clamp must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate1D {
    /// Refined frequency in `[-1/2, 1/2)`.
    pub freq: f64,
    pub coarse_freq: f64,
    pub coarse_index: usize,
    /// `|c̃|²` at the refined frequency.
    pub cost: f64,
    pub iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate2D {
    pub freqs: [f64; 2],
    pub coarse_freqs: [f64; 2],
    pub coarse_index: (usize, usize),
    pub cost: f64,
    pub iters: usize,
    pub converged: bool,
}

/// `L̃`, `L̃'`, `L̃''` at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost1D {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `L̃`, its gradient and Hessian at one frequency pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost2D {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

fn check_kernel(kernel: &BaryKernel, delta_f: f64, axis: usize) -> Result<()> {
    if (kernel.period() - delta_f).abs() > 1e-15 * delta_f {
        return invalid(format!(
            "kernel period {} on axis {axis} does not match the grid spacing {delta_f}",
            kernel.period()
        ));
    }
    Ok(())
}

/// `-j2πμ` for the midpoint `μ` of the sample instants.
fn centre_rate(len: usize) -> Complex64 {
    Complex64::new(0.0, -PI * centre_twice(len) as f64)
}

/// Interpolates the centred correlation `g(f) = c(f) e^{j2πμ(f - kΔf)}`,
/// `k` the stencil centre, whose bandwidth is `M - 1`; `|g|² = |c|²` and
/// `g = c` on node `k`.
fn interp_centred_1d(surface: &CostSurface1D, kernel: &BaryKernel, f: f64) -> Result<InterpValue> {
    check_kernel(kernel, surface.delta_f(), 1)?;
    if !f.is_finite() {
        return invalid("frequency must be finite");
    }
    let d = kernel.decompose(f);
    let big_p = kernel.half_width() as i64;
    let (len, size) = (surface.frame_len(), surface.size());
    let samples: Vec<Complex64> = (-big_p..=big_p)
        .map(|p| surface.at(d.index + p) * demodulation(p, len, size))
        .collect();
    kernel.interpolate(&samples, d.offset)
}

/// Interpolated correlation `c̃(f)` with derivatives.
pub fn interp_correlation_1d(surface: &CostSurface1D, kernel: &BaryKernel, f: f64) -> Result<InterpValue> {
    let g = interp_centred_1d(surface, kernel, f)?;
    let a = centre_rate(surface.frame_len());
    let e = (a * kernel.decompose(f).offset).exp();
    Ok(InterpValue {
        value: g.value * e,
        d1: (g.d1 + a * g.value) * e,
        d2: (g.d2 + 2.0 * a * g.d1 + a * a * g.value) * e,
    })
}

pub fn interp_cost_1d(surface: &CostSurface1D, kernel: &BaryKernel, f: f64) -> Result<Cost1D> {
    let c = interp_centred_1d(surface, kernel, f)?;
    let scale = 2.0 / surface.frame_len() as f64;
    Ok(Cost1D {
        value: c.value.norm_sqr(),
        d1: scale * (c.d1 * c.value.conj()).re,
        d2: scale * ((c.d2 * c.value.conj()).re + c.d1.norm_sqr()),
    })
}

type Partials2D = (Complex64, [Complex64; 2], [[Complex64; 2]; 2]);

fn interp_centred_2d(surface: &CostSurface2D, kernels: &[BaryKernel; 2], f1: f64, f2: f64) -> Result<Partials2D> {
    let d = surface.delta_f();
    check_kernel(&kernels[0], d[0], 1)?;
    check_kernel(&kernels[1], d[1], 2)?;
    if !f1.is_finite() || !f2.is_finite() {
        return invalid("frequencies must be finite");
    }
    let a = kernels[0].decompose(f1);
    let b = kernels[1].decompose(f2);
    for (k, off) in [(&kernels[0], a.offset), (&kernels[1], b.offset)] {
        if !(off.abs() <= 0.5 * k.period() * (1.0 + 1e-12)) {
            return invalid("offset outside half a grid cell");
        }
    }
    let ca = kernels[0].coefficients(a.offset);
    let cb = kernels[1].coefficients(b.offset);
    let (p1, p2) = (kernels[0].half_width() as i64, kernels[1].half_width() as i64);
    let [m, n] = surface.frame_lens();
    let [k1, k2] = surface.sizes();
    let twist2: Vec<Complex64> = (-p2..=p2).map(|q2| demodulation(q2, n, k2)).collect();

    // Interpolate along axis 2 for each stencil row, then along axis 1.
    let mut rows = [
        Vec::with_capacity(kernels[0].taps()),
        Vec::with_capacity(kernels[0].taps()),
        Vec::with_capacity(kernels[0].taps()),
    ];
    for q1 in -p1..=p1 {
        let t1 = demodulation(q1, m, k1);
        let stencil: Vec<Complex64> = (-p2..=p2)
            .zip(&twist2)
            .map(|(q2, t2)| surface.at(a.index + q1, b.index + q2) * t1 * t2)
            .collect();
        let v = cb.apply(&stencil);
        rows[0].push(v.value);
        rows[1].push(v.d1);
        rows[2].push(v.d2);
    }
    let r0 = ca.apply(&rows[0]);
    let r1 = ca.apply(&rows[1]);
    let r2 = ca.apply(&rows[2]);
    Ok((
        r0.value,
        [r0.d1, r1.value],
        [[r0.d2, r1.d1], [r1.d1, r2.value]],
    ))
}

/// Interpolated 2-D correlation: value, `[∂1, ∂2]`, `[[∂11, ∂12], [∂12, ∂22]]`.
pub fn interp_correlation_2d(surface: &CostSurface2D, kernels: &[BaryKernel; 2], f1: f64, f2: f64) -> Result<Partials2D> {
    let (g, gd, gh) = interp_centred_2d(surface, kernels, f1, f2)?;
    let [m, n] = surface.frame_lens();
    let a = [centre_rate(m), centre_rate(n)];
    let e = (a[0] * kernels[0].decompose(f1).offset + a[1] * kernels[1].decompose(f2).offset).exp();
    let mut hess = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            hess[i][j] = (gh[i][j] + a[i] * gd[j] + a[j] * gd[i] + a[i] * a[j] * g) * e;
        }
    }
    Ok((g * e, [(gd[0] + a[0] * g) * e, (gd[1] + a[1] * g) * e], hess))
}

pub fn interp_cost_2d(surface: &CostSurface2D, kernels: &[BaryKernel; 2], f1: f64, f2: f64) -> Result<Cost2D> {
    let (c, g, h) = interp_centred_2d(surface, kernels, f1, f2)?;
    let [m, n] = surface.frame_lens();
    let scale = 2.0 / (m * n) as f64;
    let cc = c.conj();
    let mut hess = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            hess[i][j] = scale * ((h[i][j] * cc).re + (g[i] * g[j].conj()).re);
        }
    }
    Ok(Cost2D {
        value: c.norm_sqr(),
        grad: [scale * (g[0] * cc).re, scale * (g[1] * cc).re],
        hess,
    })
}

/// Newton ascent from the coarse FFT peak.
pub fn refine_1d(surface: &CostSurface1D, config: &NewtonConfig) -> Result<Estimate1D> {
    config.validate()?;
    let kernel = surface.kernel(config.p1)?;
    let coarse_index = coarse_peak_1d(surface)?;
    let df = surface.delta_f();
    let centre = grid_frequency(coarse_index, surface.size());
    let reach = config.step_clamp * df;

    let mut f = centre;
    let mut iters = 0;
    let mut stopped = false;
    while iters < config.max_iters {
        let cost = interp_cost_1d(surface, &kernel, f)?;
        iters += 1;
        let newton = -cost.d1 / cost.d2;
        let step = if cost.d2 < 0.0 && newton.is_finite() {
            newton.clamp(-reach, reach)
        } else {
            // Not locally concave: move uphill by half the clamp.
            0.5 * reach * cost.d1.signum()
        };
        let next = (f + step).clamp(centre - reach, centre + reach);
        let small = step.abs() < config.grad_tol * df;
        f = next;
        if small {
            stopped = true;
            break;
        }
    }
    let last = interp_cost_1d(surface, &kernel, f)?;
    Ok(Estimate1D {
        freq: wrap_frequency(f),
        coarse_freq: centre,
        coarse_index,
        cost: last.value,
        iters,
        converged: stopped && last.d2 < 0.0,
    })
}

fn negative_definite(h: &[[f64; 2]; 2]) -> bool {
    h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0
}

pub fn refine_2d(surface: &CostSurface2D, config: &NewtonConfig) -> Result<Estimate2D> {
    config.validate()?;
    let kernels = surface.kernels([config.p1, config.p2])?;
    let coarse_index = coarse_peak_2d(surface)?;
    let sizes = surface.sizes();
    let df = surface.delta_f();
    let centre = [
        grid_frequency(coarse_index.0, sizes[0]),
        grid_frequency(coarse_index.1, sizes[1]),
    ];
    let reach = [config.step_clamp * df[0], config.step_clamp * df[1]];

    let mut f = centre;
    let mut iters = 0;
    let mut stopped = false;
    let mut singular = false;
    while iters < config.max_iters {
        let cost = interp_cost_2d(surface, &kernels, f[0], f[1])?;
        iters += 1;
        let h = cost.hess;
        let g = cost.grad;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let scale = h[0][0].abs().max(h[1][1].abs()).max(h[0][1].abs());
        if !(det.abs() > 1e-300 * scale * scale) {
            singular = true;
            break;
        }
        let mut step = if negative_definite(&h) {
            // -H⁻¹∇
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ]
        } else {
            [0.5 * reach[0] * g[0].signum(), 0.5 * reach[1] * g[1].signum()]
        };
        for a in 0..2 {
            if !step[a].is_finite() {
                step[a] = 0.0;
            }
            step[a] = step[a].clamp(-reach[a], reach[a]);
        }
        let small = (0..2).all(|a| step[a].abs() < config.grad_tol * df[a]);
        for a in 0..2 {
            f[a] = (f[a] + step[a]).clamp(centre[a] - reach[a], centre[a] + reach[a]);
        }
        if small {
            stopped = true;
            break;
        }
    }
    let last = interp_cost_2d(surface, &kernels, f[0], f[1])?;
    Ok(Estimate2D {
        freqs: [wrap_frequency(f[0]), wrap_frequency(f[1])],
        coarse_freqs: centre,
        coarse_index,
        cost: last.value,
        iters,
        converged: stopped && !singular && negative_definite(&last.hess),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::{correlation_direct_1d, correlation_surface_1d, correlation_surface_2d, start_index, SignalFrame1D, SignalFrame2D};
    use std::f64::consts::PI;

    fn tone(len: usize, f: f64) -> SignalFrame1D {
        let m1 = start_index(len);
        SignalFrame1D::new(
            (0..len)
                .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * (m1 + i as i64) as f64))
                .collect(),
        )
        .unwrap()
    }

    fn tone2(rows: usize, cols: usize, f1: f64, f2: f64) -> SignalFrame2D {
        let (m1, n1) = (start_index(rows), start_index(cols));
        let data = (0..rows * cols)
            .map(|idx| {
                let (i, j) = ((idx / cols) as i64, (idx % cols) as i64);
                Complex64::from_polar(1.0, 2.0 * PI * (f1 * (m1 + i) as f64 + f2 * (n1 + j) as f64))
            })
            .collect();
        SignalFrame2D::new(rows, cols, data).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(NewtonConfig::default().validate().is_ok());
        let bad = NewtonConfig { max_iters: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = NewtonConfig { grad_tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = NewtonConfig { p1: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn on_grid_cost_is_the_sample() {
        let frame = tone(20, 0.137);
        let s = correlation_surface_1d(&frame, 64).unwrap();
        let k = s.kernel(8).unwrap();
        for idx in [0i64, 5, 9, 63, -3] {
            let c = interp_cost_1d(&s, &k, idx as f64 / 64.0).unwrap();
            assert_eq!(c.value, s.at(idx).norm_sqr());
        }
    }

    #[test]
    fn stationary_at_true_frequency() {
        let f0 = 0.1234;
        let frame = tone(40, f0);
        let s = correlation_surface_1d(&frame, 128).unwrap();
        let k = s.kernel(8).unwrap();
        let c = interp_cost_1d(&s, &k, f0).unwrap();
        let m = 40.0;
        assert!(c.d1.abs() < 1e-6 * m * m * (2.0 / m), "{}", c.d1);
        assert!(c.d2 < 0.0);
        let direct = correlation_direct_1d(&frame, f0).norm_sqr();
        assert!((c.value - direct).abs() < 1e-6 * direct);
    }

    #[test]
    fn on_grid_tone_converges_in_one_iteration() {
        let f0 = 13.0 / 128.0;
        let s = correlation_surface_1d(&tone(50, f0), 128).unwrap();
        let e = refine_1d(&s, &NewtonConfig::default()).unwrap();
        assert_eq!(e.iters, 1);
        assert!(e.converged);
        assert!((e.freq - f0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_kernel_is_rejected() {
        let s = correlation_surface_1d(&tone(10, 0.1), 32).unwrap();
        let k = BaryKernel::new(4, 1.0 / 64.0, 10.0).unwrap();
        assert!(interp_cost_1d(&s, &k, 0.1).is_err());
    }

    #[test]
    fn noise_free_off_grid_tone() {
        let f0 = -0.3712;
        let s = correlation_surface_1d(&tone(33, f0), 128).unwrap();
        let e = refine_1d(&s, &NewtonConfig::default()).unwrap();
        assert!(e.converged);
        assert!((e.freq - f0).abs() < 1e-9, "{}", e.freq - f0);
    }

    #[test]
    fn wraps_near_half() {
        let f0 = 0.4995;
        let s = correlation_surface_1d(&tone(32, f0), 64).unwrap();
        let e = refine_1d(&s, &NewtonConfig::default()).unwrap();
        assert!((wrap_frequency(e.freq - f0)).abs() < 1e-9);
        let f0 = -0.4999;
        let s = correlation_surface_1d(&tone(32, f0), 64).unwrap();
        let e = refine_1d(&s, &NewtonConfig::default()).unwrap();
        assert!((e.freq - f0).abs() < 1e-9);
    }

    #[test]
    fn two_d_on_grid_cost_and_one_iteration() {
        let frame = tone2(8, 6, 3.0 / 16.0, -5.0 / 16.0);
        let s = correlation_surface_2d(&frame, [16, 16]).unwrap();
        let ks = s.kernels([8, 8]).unwrap();
        let c = interp_cost_2d(&s, &ks, 3.0 / 16.0, -5.0 / 16.0).unwrap();
        assert_eq!(c.value, s.at(3, -5).norm_sqr());
        let e = refine_2d(&s, &NewtonConfig::default()).unwrap();
        assert_eq!(e.iters, 1);
        assert!(e.converged);
        assert!((e.freqs[0] - 3.0 / 16.0).abs() < 1e-12);
        assert!((e.freqs[1] + 5.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn two_d_noise_free_off_grid() {
        let (f1, f2) = (0.2113, -0.0771);
        let s = correlation_surface_2d(&tone2(24, 19, f1, f2), [64, 64]).unwrap();
        let ks = s.kernels([8, 8]).unwrap();
        let c = interp_cost_2d(&s, &ks, f1, f2).unwrap();
        assert!(c.grad[0].hypot(c.grad[1]) < 1e-6 * (24.0 * 19.0));
        let e = refine_2d(&s, &NewtonConfig::default()).unwrap();
        assert!(e.converged);
        assert!((e.freqs[0] - f1).abs() < 1e-9);
        assert!((e.freqs[1] - f2).abs() < 1e-9);
    }
}
