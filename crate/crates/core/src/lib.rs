//! Maximum-likelihood frequency estimation of a complex sinusoid in 1-D and
//! 2-D data at the cost of one zero-padded FFT.
//!
//! The pipeline is: sample the correlation `c(f)` with an FFT
//! ([`dft`]), pick the strongest bin, then run Newton's method on
//! `|c̃(f)|²`, where `c̃` is a barycentric band-limited interpolant of the
//! FFT samples ([`interp`], [`ml`]). Because `c(f)` is itself band-limited in
//! `f`, a handful of neighbouring bins determine it to high accuracy.
//!
//! [`baselines`] holds the SVD-subspace estimator and the Cramér–Rao bound;
//! [`simkit`] synthesizes data and runs Monte-Carlo sweeps.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dft;
pub mod error;
pub mod interp;
pub mod ml;
pub mod simkit;

pub use baselines::{crb, crb_1d, dominant_svd, subspace_estimate, CrbReport, SubspaceVectors};
pub use dft::{
    coarse_peak_1d, coarse_peak_2d, correlation_surface_1d, correlation_surface_2d, default_fft_size,
    CostSurface1D, CostSurface2D, SignalFrame, SignalFrame1D, SignalFrame2D,
};
pub use error::{Error, Result};
pub use interp::{error_spectrum, BaryKernel, InterpValue, ModuloDecomposition};
pub use ml::{interp_cost_1d, interp_cost_2d, refine_1d, refine_2d, Estimate1D, Estimate2D, NewtonConfig};
pub use simkit::{interp_error_sweep, run_sweep, synthesize, Method, TrialConfig, TrialReport};
