//! Signal synthesis and Monte-Carlo sweeps.
//!
//! Every trial draws its noise from a ChaCha stream keyed by
//! `(seed, snr index, trial index)`, so results do not depend on the set of
//! methods run or on how trials are scheduled across threads.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{crb, crb_1d, subspace_estimate, CrbReport};
use crate::dft::{
    correlation_surface_1d, correlation_surface_2d, default_fft_size, start_index, wrap_frequency,
    CostSurface2D, SignalFrame, SignalFrame1D, SignalFrame2D,
};
use crate::error::{invalid, Result};
use crate::interp::linspace;
use crate::ml::{interp_cost_2d, refine_1d, refine_2d, NewtonConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ml,
    Subspace,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ml => "ml",
            Method::Subspace => "subspace",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ml" => Ok(Method::Ml),
            "subspace" => Ok(Method::Subspace),
            other => Err(format!("unknown method '{other}' (expected ml or subspace)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub dims: usize,
    pub m: usize,
    /// Ignored when `dims == 1`.
    pub n: usize,
    /// Only the first component is used when `dims == 1`.
    pub f_true: [f64; 2],
    pub snr_db_grid: Vec<f64>,
    pub trials_per_point: usize,
    pub rng_seed: u64,
    pub newton: NewtonConfig,
    pub methods: Vec<Method>,
    /// Defaults to the smallest power of two `>= 2M` (and `>= 2N`).
    pub fft_size: Option<[usize; 2]>,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims != 1 && self.dims != 2 {
            return invalid(format!("dims must be 1 or 2, got {}", self.dims));
        }
        if self.m < 2 || (self.dims == 2 && self.n < 2) {
            return invalid("frame dimensions must be at least 2");
        }
        if self.trials_per_point < 1 {
            return invalid("trials_per_point must be at least 1");
        }
        if self.snr_db_grid.is_empty() || self.snr_db_grid.iter().any(|s| s.is_nan()) {
            return invalid("SNR grid must be non-empty and free of NaN");
        }
        let axes = if self.dims == 2 { 2 } else { 1 };
        if self.f_true[..axes].iter().any(|f| !(-0.5..0.5).contains(f)) {
            return invalid("true frequencies must lie in [-1/2, 1/2)");
        }
        if self.methods.is_empty() {
            return invalid("at least one method is required");
        }
        if self.dims == 1 && self.methods.contains(&Method::Subspace) {
            return invalid("the subspace estimator needs 2-D data");
        }
        self.newton.validate()
    }

    pub fn fft_sizes(&self) -> [usize; 2] {
        self.fft_size
            .unwrap_or([default_fft_size(self.m), default_fft_size(self.n.max(1))])
    }
}

/// Noise stream for one trial.
pub fn trial_rng(seed: u64, snr_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 32) | trial as u64);
    rng
}

/// Noise variance for a unit-amplitude tone at the given SNR in dB.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn phasor(cycles: f64) -> Complex64 {
    // Reduce before scaling by 2π to keep large-index phases accurate.
    Complex64::from_polar(1.0, 2.0 * PI * (cycles - cycles.round()))
}

fn noise_sample<R: Rng>(rng: &mut R, std: f64) -> Complex64 {
    if std == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * std, im * std)
}

/// Unit-amplitude tone at the symmetric sample instants plus circular white
/// Gaussian noise of variance `10^{-snr_db/10}` (`+inf` dB gives no noise).
pub fn synthesize<R: Rng>(dims: usize, m: usize, n: usize, f_true: [f64; 2], snr_db: f64, rng: &mut R) -> Result<SignalFrame> {
    let std = (0.5 * noise_variance(snr_db)).sqrt();
    match dims {
        1 => {
            let m1 = start_index(m);
            let data = (0..m)
                .map(|i| phasor(f_true[0] * (m1 + i as i64) as f64) + noise_sample(rng, std))
                .collect();
            Ok(SignalFrame::OneD(SignalFrame1D::new(data)?))
        }
        2 => {
            let (m1, n1) = (start_index(m), start_index(n));
            let mut data = Vec::with_capacity(m * n);
            for i in 0..m {
                for j in 0..n {
                    let cycles = f_true[0] * (m1 + i as i64) as f64 + f_true[1] * (n1 + j as i64) as f64;
                    data.push(phasor(cycles) + noise_sample(rng, std));
                }
            }
            Ok(SignalFrame::TwoD(SignalFrame2D::new(m, n, data)?))
        }
        d => invalid(format!("dims must be 1 or 2, got {d}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    pub freqs: [f64; 2],
    pub sq_err: [f64; 2],
    pub iters: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Over converged trials only.
    pub rmse: [f64; 2],
    pub mean_iters: f64,
    /// Trials that errored or did not converge.
    pub failures: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub crb: Option<CrbReport>,
    pub summaries: Vec<MethodSummary>,
    pub records: Vec<TrialRecord>,
}

impl SnrPoint {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// `sqrt` of the bound per axis; `None` at infinite SNR.
    pub fn crb_rms(&self) -> Option<[f64; 2]> {
        self.crb.map(|c| [c.var_f1.sqrt(), c.var_f2.sqrt()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: TrialConfig,
    pub points: Vec<SnrPoint>,
}

fn run_method(config: &TrialConfig, frame: &SignalFrame, method: Method) -> Result<([f64; 2], usize, bool)> {
    let sizes = config.fft_sizes();
    match (frame, method) {
        (SignalFrame::OneD(f), Method::Ml) => {
            let e = refine_1d(&correlation_surface_1d(f, sizes[0])?, &config.newton)?;
            Ok(([e.freq, 0.0], e.iters, e.converged))
        }
        (SignalFrame::TwoD(f), Method::Ml) => {
            let e = refine_2d(&correlation_surface_2d(f, sizes)?, &config.newton)?;
            Ok((e.freqs, e.iters, e.converged))
        }
        (SignalFrame::TwoD(f), Method::Subspace) => {
            let e = subspace_estimate(f, sizes, &config.newton)?;
            Ok((e.freqs, e.iters, e.converged))
        }
        (SignalFrame::OneD(_), Method::Subspace) => invalid("the subspace estimator needs 2-D data"),
    }
}

fn run_trial(config: &TrialConfig, snr_index: usize, trial: usize) -> Vec<TrialRecord> {
    let snr_db = config.snr_db_grid[snr_index];
    let mut rng = trial_rng(config.rng_seed, snr_index, trial);
    let frame = synthesize(config.dims, config.m, config.n, config.f_true, snr_db, &mut rng);
    let axes = config.dims;
    config
        .methods
        .iter()
        .map(|&method| {
            let outcome = frame.as_ref().map_err(|e| e.clone()).and_then(|f| run_method(config, f, method));
            match outcome {
                Ok((freqs, iters, converged)) => {
                    let mut sq_err = [0.0; 2];
                    for a in 0..axes {
                        sq_err[a] = wrap_frequency(freqs[a] - config.f_true[a]).powi(2);
                    }
                    TrialRecord {
                        trial,
                        method,
                        freqs,
                        sq_err,
                        iters,
                        converged,
                        error: None,
                    }
                }
                Err(e) => TrialRecord {
                    trial,
                    method,
                    freqs: [f64::NAN; 2],
                    sq_err: [f64::NAN; 2],
                    iters: 0,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Aggregates per-trial records of one method.
pub fn summarize(method: Method, records: &[TrialRecord]) -> MethodSummary {
    let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.method == method).collect();
    let good: Vec<&&TrialRecord> = mine.iter().filter(|r| r.converged && r.error.is_none()).collect();
    let count = good.len() as f64;
    let mut rmse = [f64::NAN; 2];
    let mut mean_iters = f64::NAN;
    if !good.is_empty() {
        for (a, slot) in rmse.iter_mut().enumerate() {
            *slot = (good.iter().map(|r| r.sq_err[a]).sum::<f64>() / count).sqrt();
        }
        mean_iters = good.iter().map(|r| r.iters as f64).sum::<f64>() / count;
    }
    MethodSummary {
        method,
        rmse,
        mean_iters,
        failures: mine.len() - good.len(),
        trials: mine.len(),
    }
}

pub fn run_sweep(config: &TrialConfig) -> Result<TrialReport> {
    config.validate()?;
    let mut points = Vec::with_capacity(config.snr_db_grid.len());
    for (s, &snr_db) in config.snr_db_grid.iter().enumerate() {
        let records: Vec<TrialRecord> = (0..config.trials_per_point)
            .into_par_iter()
            .map(|t| run_trial(config, s, t))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        let snr_linear = 1.0 / noise_variance(snr_db);
        let crb = if snr_linear.is_finite() {
            Some(if config.dims == 2 {
                crb(config.m, config.n, snr_linear)?
            } else {
                crb_1d(config.m, snr_linear)?
            })
        } else {
            None
        };
        let summaries = config.methods.iter().map(|&m| summarize(m, &records)).collect();
        points.push(SnrPoint {
            snr_db,
            crb,
            summaries,
            records,
        });
    }
    Ok(TrialReport {
        config: config.clone(),
        points,
    })
}

/// Sampling of the cost-interpolation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePlan {
    /// Probes per axis inside each cell; a cell gets `per_axis²` probes.
    pub per_axis: usize,
    /// Half-width, in cells, of the block around the coarse peak.
    pub peak_radius: usize,
    pub random_cells: usize,
    pub seed: u64,
}

impl Default for ProbePlan {
    fn default() -> Self {
        Self {
            per_axis: 8,
            peak_radius: 1,
            random_cells: 32,
            seed: 0,
        }
    }
}

/// Probe frequencies: a regular sub-grid in each of the cells around the
/// coarse peak and in `random_cells` random cells.
fn probe_points(surface: &CostSurface2D, plan: &ProbePlan) -> Result<Vec<(f64, f64)>> {
    let sizes = surface.sizes();
    let df = surface.delta_f();
    let (pk1, pk2) = crate::dft::coarse_peak_2d(surface)?;
    let mut cells: Vec<(i64, i64)> = Vec::new();
    let r = plan.peak_radius as i64;
    for a in -r..=r {
        for b in -r..=r {
            cells.push((pk1 as i64 + a, pk2 as i64 + b));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    for _ in 0..plan.random_cells {
        cells.push((
            rng.random_range(0..sizes[0] as i64),
            rng.random_range(0..sizes[1] as i64),
        ));
    }
    let step = 1.0 / plan.per_axis as f64;
    let offsets: Vec<f64> = (0..plan.per_axis).map(|i| (i as f64 + 0.5) * step - 0.5).collect();
    let mut points = Vec::with_capacity(cells.len() * offsets.len() * offsets.len());
    for (c1, c2) in cells {
        for &o1 in &offsets {
            for &o2 in &offsets {
                points.push(((c1 as f64 + o1) * df[0], (c2 as f64 + o2) * df[1]));
            }
        }
    }
    Ok(points)
}

/// Direct `|c(f1, f2)|²` at many points, reusing per-axis phasor tables.
fn direct_costs(frame: &SignalFrame2D, points: &[(f64, f64)]) -> Vec<f64> {
    let (m1, n1) = (frame.m1(), frame.n1());
    points
        .par_iter()
        .map(|&(f1, f2)| {
            let e2: Vec<Complex64> = (0..frame.cols())
                .map(|j| phasor(-f2 * (n1 + j as i64) as f64))
                .collect();
            let c: Complex64 = (0..frame.rows())
                .map(|i| {
                    let inner: Complex64 = frame.row(i).iter().zip(&e2).map(|(z, e)| z * e).sum();
                    inner * phasor(-f1 * (m1 + i as i64) as f64)
                })
                .sum();
            c.norm_sqr()
        })
        .collect()
}

/// `(P, log10 ε)` for each truncation index, where
/// `ε = max |L - L̃| / max L` over the probe plan, `L` summed directly.
pub fn interp_error_sweep(
    p_grid: &[usize],
    frame: &SignalFrame2D,
    sizes: [usize; 2],
    plan: &ProbePlan,
) -> Result<Vec<(usize, f64)>> {
    if p_grid.is_empty() {
        return invalid("truncation grid must be non-empty");
    }
    if plan.per_axis < 1 {
        return invalid("at least one probe per axis is required");
    }
    let surface = correlation_surface_2d(frame, sizes)?;
    let points = probe_points(&surface, plan)?;
    let exact = direct_costs(frame, &points);
    let peak = exact.iter().cloned().fold(0.0, f64::max);
    p_grid
        .iter()
        .map(|&p| {
            let kernels = surface.kernels([p, p])?;
            let worst = points
                .iter()
                .zip(&exact)
                .map(|(&(f1, f2), &l)| interp_cost_2d(&surface, &kernels, f1, f2).map(|c| (c.value - l).abs()))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((p, (worst / peak).log10()))
        })
        .collect()
}

/// Frequency grid of `count` points spanning the kernel band `[-B/2, B/2]`
/// and the matching offsets over `[-T/2, T/2]`, for `error_spectrum`.
pub fn spectrum_grids(bandwidth: f64, period: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    (
        linspace(-0.5 * bandwidth, 0.5 * bandwidth, count),
        linspace(-0.5 * period, 0.5 * period, count),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_2d(methods: Vec<Method>) -> TrialConfig {
        TrialConfig {
            dims: 2,
            m: 12,
            n: 10,
            f_true: [0.2, -0.31],
            snr_db_grid: vec![0.0, 10.0],
            trials_per_point: 4,
            rng_seed: 11,
            newton: NewtonConfig::default(),
            methods,
            fft_size: None,
        }
    }

    #[test]
    fn noise_free_frames_have_unit_modulus() {
        let mut rng = trial_rng(1, 0, 0);
        let f = synthesize(1, 17, 0, [0.3, 0.0], f64::INFINITY, &mut rng).unwrap();
        let SignalFrame::OneD(f) = f else { panic!() };
        assert!(f.data().iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        assert_eq!(f.data()[0], phasor(0.3 * -9.0));
    }

    #[test]
    fn seeded_frames_are_identical() {
        let a = synthesize(2, 5, 4, [0.1, 0.2], 3.0, &mut trial_rng(7, 2, 9)).unwrap();
        let b = synthesize(2, 5, 4, [0.1, 0.2], 3.0, &mut trial_rng(7, 2, 9)).unwrap();
        assert_eq!(a, b);
        let c = synthesize(2, 5, 4, [0.1, 0.2], 3.0, &mut trial_rng(7, 2, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_power_matches_snr() {
        let snr_db = 4.0;
        let sigma2 = noise_variance(snr_db);
        let mut rng = trial_rng(3, 0, 0);
        let n = 1_000_000;
        let std = (0.5 * sigma2).sqrt();
        let mean: f64 = (0..n).map(|_| noise_sample(&mut rng, std).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean / sigma2 - 1.0).abs() < 0.01, "{}", mean / sigma2);
    }

    #[test]
    fn config_validation() {
        assert!(config_2d(vec![Method::Ml]).validate().is_ok());
        let mut c = config_2d(vec![Method::Ml]);
        c.f_true = [0.5, 0.0];
        assert!(c.validate().is_err());
        let mut c = config_2d(vec![Method::Subspace]);
        c.dims = 1;
        assert!(c.validate().is_err());
        let mut c = config_2d(vec![]);
        c.methods.clear();
        assert!(c.validate().is_err());
        let mut c = config_2d(vec![Method::Ml]);
        c.trials_per_point = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn noise_free_sweep_is_exact() {
        let mut c = config_2d(vec![Method::Ml, Method::Subspace]);
        c.trials_per_point = 1;
        c.snr_db_grid = vec![f64::INFINITY];
        let r = run_sweep(&c).unwrap();
        for s in &r.points[0].summaries {
            assert_eq!(s.failures, 0);
            assert!(s.rmse[0] < 1e-8 && s.rmse[1] < 1e-8, "{s:?}");
        }
        assert!(r.points[0].crb.is_none());
    }

    #[test]
    fn method_subset_does_not_change_ml_trials() {
        let both = run_sweep(&config_2d(vec![Method::Subspace, Method::Ml])).unwrap();
        let ml = run_sweep(&config_2d(vec![Method::Ml])).unwrap();
        for (a, b) in both.points.iter().zip(&ml.points) {
            let pick = |p: &SnrPoint| -> Vec<TrialRecord> {
                p.records.iter().filter(|r| r.method == Method::Ml).cloned().collect()
            };
            assert_eq!(pick(a), pick(b));
        }
    }

    #[test]
    fn summary_recomputes_from_records() {
        let r = run_sweep(&config_2d(vec![Method::Ml])).unwrap();
        for p in &r.points {
            let again = summarize(Method::Ml, &p.records);
            assert_eq!(&again, p.summary(Method::Ml).unwrap());
        }
    }

    #[test]
    fn error_sweep_rejects_empty_grid() {
        let mut rng = trial_rng(0, 0, 0);
        let SignalFrame::TwoD(f) = synthesize(2, 8, 8, [0.1, 0.1], 5.0, &mut rng).unwrap() else {
            panic!()
        };
        assert!(interp_error_sweep(&[], &f, [16, 16], &ProbePlan::default()).is_err());
    }
}
