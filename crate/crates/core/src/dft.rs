//! Zero-padded DFT sampling of the correlation `c(f) = Σ_m z(m) e^{-j2πfm}`
//! and its 2-D analogue, plus the coarse peak search.
//!
//! Samples are indexed symmetrically: `data[i]` is the sample at instant
//! `m1 + i` with `m1 = -ceil(M/2)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::interp::BaryKernel;

/// `-ceil(len / 2)`.
pub fn start_index(len: usize) -> i64 {
    -(len.div_ceil(2) as i64)
}

/// Smallest accepted ratio `K / M` between FFT size and frame length.
pub const MIN_PADDING: f64 = 1.5;

/// Smallest power of two that is at least `2 * len`. Explicit sizes down to
/// `MIN_PADDING * len` are accepted (e.g. 1024 for `len = 651`), at the cost
/// of a larger `BT` in the interpolation kernel.
pub fn default_fft_size(len: usize) -> usize {
    (2 * len).next_power_of_two()
}

/// Maps a grid index to its frequency in `[-1/2, 1/2)`.
pub fn grid_frequency(k: usize, size: usize) -> f64 {
    let k = k % size;
    if 2 * k >= size {
        (k as f64 - size as f64) / size as f64
    } else {
        k as f64 / size as f64
    }
}

/// Wraps any frequency into `[-1/2, 1/2)`.
pub fn wrap_frequency(f: f64) -> f64 {
    let w = f - (f + 0.5).floor();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Twice the midpoint of the sample instants, `2 m1 + M - 1` (always an
/// integer: -1 for even `M`, -2 for odd `M`).
pub fn centre_twice(len: usize) -> i64 {
    2 * start_index(len) + len as i64 - 1
}

/// Two-sided bandwidth of `c(f)` seen as a signal in `f` once the midpoint
/// of the sample instants is demodulated out: `M - 1`.
pub fn correlation_bandwidth(len: usize) -> f64 {
    (len - 1) as f64
}

/// `e^{+jπ k c2 / size}` with `c2 = centre_twice(len)`: moves grid sample `k`
/// of `c(f)` onto the centred correlation `c(f) e^{j2π μ f}`.
pub fn demodulation(k: i64, len: usize, size: usize) -> Complex64 {
    let period = 2 * size as i64;
    let r = (k.rem_euclid(period) * centre_twice(len)).rem_euclid(period) as f64;
    Complex64::from_polar(1.0, PI * r / size as f64)
}

/// A 1-D frame of complex samples at instants `m1, m1 + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame1D {
    data: Vec<Complex64>,
}

impl SignalFrame1D {
    pub fn new(data: Vec<Complex64>) -> Result<Self> {
        if data.len() < 2 {
            return invalid(format!("a frame needs at least 2 samples, got {}", data.len()));
        }
        if data.iter().any(|z| !z.is_finite()) {
            return invalid("frame contains non-finite samples");
        }
        Ok(Self { data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn m1(&self) -> i64 {
        start_index(self.data.len())
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }
}

/// An `M × N` frame, row-major; row `i` is instant `m1 + i`, column `j` is
/// instant `n1 + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame2D {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl SignalFrame2D {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return invalid(format!("a 2-D frame needs M, N >= 2, got {rows}x{cols}"));
        }
        if data.len() != rows * cols {
            return invalid(format!(
                "expected {} samples for a {rows}x{cols} frame, got {}",
                rows * cols,
                data.len()
            ));
        }
        if data.iter().any(|z| !z.is_finite()) {
            return invalid("frame contains non-finite samples");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn m1(&self) -> i64 {
        start_index(self.rows)
    }

    pub fn n1(&self) -> i64 {
        start_index(self.cols)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }
}

/// Either kind of frame.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalFrame {
    OneD(SignalFrame1D),
    TwoD(SignalFrame2D),
}

/// Samples `c(k/K)`, `k = 0..K`, of the 1-D correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSurface1D {
    samples: Vec<Complex64>,
    m1: i64,
    len: usize,
}

impl CostSurface1D {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn size(&self) -> usize {
        self.samples.len()
    }

    pub fn delta_f(&self) -> f64 {
        1.0 / self.samples.len() as f64
    }

    pub fn m1(&self) -> i64 {
        self.m1
    }

    pub fn frame_len(&self) -> usize {
        self.len
    }

    /// Sample at any integer index, using the 1-periodicity of `c(f)`.
    pub fn at(&self, k: i64) -> Complex64 {
        self.samples[k.rem_euclid(self.samples.len() as i64) as usize]
    }

    /// Kernel with `T = Δf` and the correlation's bandwidth.
    pub fn kernel(&self, half_width: usize) -> Result<BaryKernel> {
        BaryKernel::new(half_width, self.delta_f(), correlation_bandwidth(self.len))
    }
}

/// Samples `c(k1/K1, k2/K2)` of the 2-D correlation, row-major `K1 × K2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSurface2D {
    samples: Vec<Complex64>,
    sizes: [usize; 2],
    m1: i64,
    n1: i64,
    lens: [usize; 2],
}

impl CostSurface2D {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sizes(&self) -> [usize; 2] {
        self.sizes
    }

    pub fn delta_f(&self) -> [f64; 2] {
        [1.0 / self.sizes[0] as f64, 1.0 / self.sizes[1] as f64]
    }

    pub fn m1(&self) -> i64 {
        self.m1
    }

    pub fn n1(&self) -> i64 {
        self.n1
    }

    pub fn frame_lens(&self) -> [usize; 2] {
        self.lens
    }

    pub fn at(&self, k1: i64, k2: i64) -> Complex64 {
        let i = k1.rem_euclid(self.sizes[0] as i64) as usize;
        let j = k2.rem_euclid(self.sizes[1] as i64) as usize;
        self.samples[i * self.sizes[1] + j]
    }

    pub fn kernels(&self, half_widths: [usize; 2]) -> Result<[BaryKernel; 2]> {
        let d = self.delta_f();
        Ok([
            BaryKernel::new(half_widths[0], d[0], correlation_bandwidth(self.lens[0]))?,
            BaryKernel::new(half_widths[1], d[1], correlation_bandwidth(self.lens[1]))?,
        ])
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(size: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(size))
}

fn check_size(size: usize, len: usize, axis: &str) -> Result<()> {
    if !size.is_power_of_two() {
        return invalid(format!("FFT size {size} on {axis} is not a power of two"));
    }
    if 2 * size < 3 * len {
        return invalid(format!(
            "FFT size {size} on {axis} is below {MIN_PADDING} x {len}: the frame needs at least {MIN_PADDING}x zero padding"
        ));
    }
    Ok(())
}

/// `e^{-j2π k start / size}` with the phase reduced exactly in integers.
fn twist(k: usize, start: i64, size: usize) -> Complex64 {
    let r = ((k as i64 * start).rem_euclid(size as i64)) as f64;
    Complex64::from_polar(1.0, -2.0 * PI * r / size as f64)
}

pub fn correlation_surface_1d(frame: &SignalFrame1D, size: usize) -> Result<CostSurface1D> {
    check_size(size, frame.len(), "axis 1")?;
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    buf[..frame.len()].copy_from_slice(frame.data());
    forward_plan(size).process(&mut buf);
    let m1 = frame.m1();
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= twist(k, m1, size);
    }
    Ok(CostSurface1D {
        samples: buf,
        m1,
        len: frame.len(),
    })
}

pub fn correlation_surface_2d(frame: &SignalFrame2D, sizes: [usize; 2]) -> Result<CostSurface2D> {
    let [k1, k2] = sizes;
    check_size(k1, frame.rows(), "axis 1")?;
    check_size(k2, frame.cols(), "axis 2")?;
    let mut buf = vec![Complex64::new(0.0, 0.0); k1 * k2];
    let row_fft = forward_plan(k2);
    for i in 0..frame.rows() {
        let row = &mut buf[i * k2..(i + 1) * k2];
        row[..frame.cols()].copy_from_slice(frame.row(i));
        row_fft.process(row);
    }
    let col_fft = forward_plan(k1);
    let mut col = vec![Complex64::new(0.0, 0.0); k1];
    for j in 0..k2 {
        for (i, c) in col.iter_mut().enumerate() {
            *c = buf[i * k2 + j];
        }
        col_fft.process(&mut col);
        for (i, c) in col.iter().enumerate() {
            buf[i * k2 + j] = *c;
        }
    }
    let (m1, n1) = (frame.m1(), frame.n1());
    let col_twist: Vec<Complex64> = (0..k2).map(|j| twist(j, n1, k2)).collect();
    for i in 0..k1 {
        let row_twist = twist(i, m1, k1);
        for (c, t) in buf[i * k2..(i + 1) * k2].iter_mut().zip(&col_twist) {
            *c *= row_twist * t;
        }
    }
    Ok(CostSurface2D {
        samples: buf,
        sizes,
        m1,
        n1,
        lens: [frame.rows(), frame.cols()],
    })
}

/// Grid indices in order of increasing mapped frequency.
fn mapped_order(size: usize) -> impl Iterator<Item = usize> {
    (size / 2..size).chain(0..size / 2)
}

/// Index of the largest `|c|²`; ties go to the lowest mapped frequency.
pub fn coarse_peak_1d(surface: &CostSurface1D) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for k in mapped_order(surface.size()) {
        let v = surface.samples[k].norm_sqr();
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    match best {
        Some((k, v)) if v > 0.0 => Ok(k),
        _ => Err(Error::Degenerate("cost surface is identically zero".into())),
    }
}

/// 2-D coarse peak; ties go to the lowest mapped `f1`, then `f2`.
pub fn coarse_peak_2d(surface: &CostSurface2D) -> Result<(usize, usize)> {
    let [k1, k2] = surface.sizes;
    let mut best: Option<((usize, usize), f64)> = None;
    for i in mapped_order(k1) {
        for j in mapped_order(k2) {
            let v = surface.samples[i * k2 + j].norm_sqr();
            if best.is_none_or(|(_, b)| v > b) {
                best = Some(((i, j), v));
            }
        }
    }
    match best {
        Some((idx, v)) if v > 0.0 => Ok(idx),
        _ => Err(Error::Degenerate("cost surface is identically zero".into())),
    }
}

/// Direct evaluation of the 1-D correlation at an arbitrary frequency.
pub fn correlation_direct_1d(frame: &SignalFrame1D, f: f64) -> Complex64 {
    let m1 = frame.m1();
    frame
        .data()
        .iter()
        .enumerate()
        .map(|(i, &z)| z * Complex64::from_polar(1.0, -2.0 * PI * f * (m1 + i as i64) as f64))
        .sum()
}

/// Direct evaluation of the 2-D correlation at an arbitrary frequency pair.
pub fn correlation_direct_2d(frame: &SignalFrame2D, f1: f64, f2: f64) -> Complex64 {
    let (m1, n1) = (frame.m1(), frame.n1());
    let e2: Vec<Complex64> = (0..frame.cols())
        .map(|j| Complex64::from_polar(1.0, -2.0 * PI * f2 * (n1 + j as i64) as f64))
        .collect();
    (0..frame.rows())
        .map(|i| {
            let inner: Complex64 = frame.row(i).iter().zip(&e2).map(|(z, e)| z * e).sum();
            inner * Complex64::from_polar(1.0, -2.0 * PI * f1 * (m1 + i as i64) as f64)
        })
        .sum()
}
