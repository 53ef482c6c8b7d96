//! Row types of the emitted tables. Field order is column order.

use serde::Serialize;
use sinfreq::TrialReport;

/// `estimate --json` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateOutput {
    pub dims: usize,
    pub method: String,
    /// FFT size per axis (one entry in 1-D).
    pub fft_size: Vec<usize>,
    pub truncation: Vec<usize>,
    pub coarse: Vec<f64>,
    pub freqs: Vec<f64>,
    pub cost: f64,
    pub iters: usize,
    pub converged: bool,
}

impl EstimateOutput {
    /// `key value...` lines.
    pub fn to_lines(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" ");
        let sizes = self.fft_size.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
        let taps = self.truncation.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
        format!(
            "dims {}\nmethod {}\nfft_size {sizes}\ntruncation {taps}\ncoarse {}\nfreq {}\ncost {:e}\niters {}\nconverged {}\n",
            self.dims,
            self.method,
            join(&self.coarse),
            join(&self.freqs),
            self.cost,
            self.iters,
            self.converged
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub snr_db: f64,
    pub method: String,
    pub rmse_f1: f64,
    pub rmse_f2: f64,
    pub crb_rms_f1: f64,
    pub crb_rms_f2: f64,
    pub mean_iters: f64,
    pub failures: usize,
    pub trials: usize,
}

/// One row per (SNR, method). Unavailable values (no converged trials, or
/// no bound at infinite SNR) are NaN.
pub fn bench_rows(report: &TrialReport) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for p in &report.points {
        let crb = p.crb_rms().unwrap_or([f64::NAN; 2]);
        for s in &p.summaries {
            rows.push(BenchRow {
                snr_db: p.snr_db,
                method: s.method.name().to_string(),
                rmse_f1: s.rmse[0],
                rmse_f2: s.rmse[1],
                crb_rms_f1: crb[0],
                crb_rms_f2: crb[1],
                mean_iters: s.mean_iters,
                failures: s.failures,
                trials: s.trials,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    #[serde(rename = "P")]
    pub p: usize,
    pub f: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsRow {
    #[serde(rename = "P")]
    pub p: usize,
    pub log10_eps: f64,
}
