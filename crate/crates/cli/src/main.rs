use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sinfreq::dft::{correlation_surface_1d, correlation_surface_2d, default_fft_size, SignalFrame};
use sinfreq::simkit::{spectrum_grids, trial_rng, ProbePlan};
use sinfreq::{
    error_spectrum, interp_error_sweep, refine_1d, refine_2d, run_sweep, subspace_estimate, synthesize, BaryKernel,
    Method, NewtonConfig, TrialConfig,
};
use sinfreq_cli::tables::{bench_rows, EpsRow, EstimateOutput, SpectrumRow};
use sinfreq_cli::{parse_f64_list, parse_pair, parse_usize_list, SampleFile};

#[derive(Parser)]
#[command(name = "sinfreq", version, about = "Maximum-likelihood frequency estimation of complex sinusoids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the tone frequency of a sample file.
    Estimate(EstimateArgs),
    /// Monte-Carlo RMSE / CRB sweep.
    Bench(BenchArgs),
    /// Interpolator error spectrum E(f) per truncation index.
    Spectrum(SpectrumArgs),
    /// Cost-function interpolation error per truncation index.
    Eps(EpsArgs),
    /// Write a synthetic tone (plus noise) as a sample file.
    Synth(SynthArgs),
}

#[derive(Args)]
struct EstimateArgs {
    path: PathBuf,
    /// Must match the file header when given.
    #[arg(long)]
    dims: Option<usize>,
    /// K or K1,K2 (default: smallest power of two >= 2x the length).
    #[arg(long)]
    fft_size: Option<String>,
    #[command(flatten)]
    newton: NewtonArgs,
    #[arg(long, default_value = "ml")]
    method: Method,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct NewtonArgs {
    /// Truncation index p or p1,p2.
    #[arg(long = "P", default_value = "8")]
    p: String,
    #[arg(long, default_value_t = 12)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    step_clamp: f64,
}

impl NewtonArgs {
    fn config(&self) -> Result<NewtonConfig> {
        let [p1, p2] = parse_pair(&self.p).map_err(|e| anyhow!("--P: {e}"))?;
        let cfg = NewtonConfig {
            p1,
            p2,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            step_clamp: self.step_clamp,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long = "M", default_value_t = 64)]
    m: usize,
    #[arg(long = "N", default_value_t = 64)]
    n: usize,
    /// f1 or f1,f2.
    #[arg(long, default_value = "0.234452,-0.143254", allow_hyphen_values = true)]
    freq: String,
    /// Comma list of values and start:stop:step ranges, in dB.
    #[arg(long, default_value = "-10:20:2", allow_hyphen_values = true)]
    snr: String,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Comma list of ml, subspace.
    #[arg(long, default_value = "ml")]
    methods: String,
    #[arg(long)]
    fft_size: Option<String>,
    #[command(flatten)]
    newton: NewtonArgs,
    /// Default: json when --out ends in .json, csv otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long = "BT", default_value_t = 0.25)]
    bt: f64,
    #[arg(long = "P", default_value = "4,6,8")]
    p: String,
    /// Points per axis of the frequency and offset grids.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EpsArgs {
    #[arg(long = "P", default_value = "2,4,6,8,10,12")]
    p: String,
    #[arg(long = "M", default_value_t = 64)]
    m: usize,
    #[arg(long = "N", default_value_t = 64)]
    n: usize,
    #[arg(long, default_value = "0.234452,-0.143254", allow_hyphen_values = true)]
    freq: String,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long, default_value_t = 5)]
    seed: u64,
    #[arg(long)]
    fft_size: Option<String>,
    /// Probes per axis inside each probed cell.
    #[arg(long, default_value_t = 8)]
    per_axis: usize,
    #[arg(long, default_value_t = 32)]
    random_cells: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    dims: usize,
    #[arg(long = "M", default_value_t = 64)]
    m: usize,
    #[arg(long = "N", default_value_t = 1)]
    n: usize,
    #[arg(long, default_value = "0.25", allow_hyphen_values = true)]
    freq: String,
    /// In dB; inf for a noise-free tone.
    #[arg(long, default_value_t = f64::INFINITY, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_freqs(text: &str, dims: usize) -> Result<[f64; 2]> {
    let v = parse_f64_list(text).map_err(|e| anyhow!("--freq: {e}"))?;
    match (dims, v.as_slice()) {
        (1, [a]) => Ok([*a, 0.0]),
        (2, [a, b]) => Ok([*a, *b]),
        _ => bail!("--freq needs {dims} value(s), got '{text}'"),
    }
}

fn fft_sizes(flag: &Option<String>, m: usize, n: usize) -> Result<[usize; 2]> {
    match flag {
        Some(text) => parse_pair(text).map_err(|e| anyhow!("--fft-size: {e}")),
        None => Ok([default_fft_size(m), default_fft_size(n.max(1))]),
    }
}

fn emit(out: &Option<PathBuf>, content: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| format!("cannot write {}", path.display())),
        None => std::io::stdout().write_all(content).context("cannot write to standard output"),
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| anyhow!("{e}"))
}

fn estimate(args: EstimateArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.path).with_context(|| format!("cannot read {}", args.path.display()))?;
    let file: SampleFile = text.parse().with_context(|| format!("{}", args.path.display()))?;
    if let Some(d) = args.dims {
        if d != file.dims {
            bail!("--dims {d} does not match the file header (dims={})", file.dims);
        }
    }
    let [k1, k2] = fft_sizes(&args.fft_size, file.m, file.n)?;
    let cfg = args.newton.config()?;
    let (p1, p2) = (cfg.p1, cfg.p2);
    let out = match file.to_frame()? {
        SignalFrame::OneD(frame) => {
            if matches!(args.method, Method::Subspace) {
                bail!("the subspace method needs 2-D data");
            }
            let e = refine_1d(&correlation_surface_1d(&frame, k1)?, &cfg)?;
            EstimateOutput {
                dims: 1,
                method: args.method.name().into(),
                fft_size: vec![k1],
                truncation: vec![p1],
                coarse: vec![e.coarse_freq],
                freqs: vec![e.freq],
                cost: e.cost,
                iters: e.iters,
                converged: e.converged,
            }
        }
        SignalFrame::TwoD(frame) => {
            let e = match args.method {
                Method::Ml => refine_2d(&correlation_surface_2d(&frame, [k1, k2])?, &cfg)?,
                Method::Subspace => subspace_estimate(&frame, [k1, k2], &cfg)?,
            };
            EstimateOutput {
                dims: 2,
                method: args.method.name().into(),
                fft_size: vec![k1, k2],
                truncation: vec![p1, p2],
                coarse: e.coarse_freqs.to_vec(),
                freqs: e.freqs.to_vec(),
                cost: e.cost,
                iters: e.iters,
                converged: e.converged,
            }
        }
    };
    if args.json {
        println!("{}", serde_json::to_string(&out)?);
    } else {
        print!("{}", out.to_lines());
    }
    Ok(if out.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let methods = args
        .methods
        .split(',')
        .map(|s| s.trim().parse::<Method>().map_err(|e| anyhow!("--methods: {e}")))
        .collect::<Result<Vec<_>>>()?;
    let snr_db_grid = parse_f64_list(&args.snr).map_err(|e| anyhow!("--snr: {e}"))?;
    let config = TrialConfig {
        dims: args.dims,
        m: args.m,
        n: if args.dims == 1 { 1 } else { args.n },
        f_true: parse_freqs(&args.freq, args.dims)?,
        snr_db_grid,
        trials_per_point: args.trials,
        rng_seed: args.seed,
        newton: args.newton.config()?,
        methods,
        fft_size: args.fft_size.as_ref().map(|_| fft_sizes(&args.fft_size, args.m, args.n)).transpose()?,
    };
    let format = args.format.unwrap_or(match &args.out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => Format::Json,
        _ => Format::Csv,
    });
    if let Some(path) = &args.out {
        // Fail before the sweep rather than after it.
        check_writable(path)?;
    }
    let report = run_sweep(&config)?;
    let rows = bench_rows(&report);
    let bytes = match format {
        Format::Csv => csv_bytes(&rows)?,
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&rows)?;
            b.push(b'\n');
            b
        }
    };
    emit(&args.out, &bytes)?;
    Ok(ExitCode::SUCCESS)
}

fn check_writable(path: &Path) -> Result<()> {
    fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map(|_| ())
        .with_context(|| format!("cannot write {}", path.display()))
}

fn spectrum(args: SpectrumArgs) -> Result<ExitCode> {
    let ps = parse_usize_list(&args.p).map_err(|e| anyhow!("--P: {e}"))?;
    if ps.is_empty() {
        bail!("--P needs at least one truncation index");
    }
    if args.grid < 2 {
        bail!("--grid must be at least 2");
    }
    let mut rows = Vec::new();
    for p in ps {
        let kernel = BaryKernel::new(p, 1.0, args.bt)?;
        let (freqs, offsets) = spectrum_grids(args.bt, 1.0, args.grid);
        let errors = error_spectrum(&kernel, &freqs, &offsets)?;
        rows.extend(freqs.iter().zip(errors).map(|(&f, error)| SpectrumRow { p, f, error }));
    }
    emit(&args.out, &csv_bytes(&rows)?)?;
    Ok(ExitCode::SUCCESS)
}

fn eps(args: EpsArgs) -> Result<ExitCode> {
    let ps = parse_usize_list(&args.p).map_err(|e| anyhow!("--P: {e}"))?;
    if ps.is_empty() {
        bail!("--P needs at least one truncation index");
    }
    let f = parse_freqs(&args.freq, 2)?;
    let SignalFrame::TwoD(frame) = synthesize(2, args.m, args.n, f, args.snr, &mut trial_rng(args.seed, 0, 0))? else {
        unreachable!("2-D synthesis returns a 2-D frame")
    };
    let plan = ProbePlan {
        per_axis: args.per_axis,
        random_cells: args.random_cells,
        ..ProbePlan::default()
    };
    let sizes = fft_sizes(&args.fft_size, args.m, args.n)?;
    let rows: Vec<EpsRow> = interp_error_sweep(&ps, &frame, sizes, &plan)?
        .into_iter()
        .map(|(p, log10_eps)| EpsRow { p, log10_eps })
        .collect();
    emit(&args.out, &csv_bytes(&rows)?)?;
    Ok(ExitCode::SUCCESS)
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let f = parse_freqs(&args.freq, args.dims)?;
    let n = if args.dims == 1 { 1 } else { args.n };
    let frame = synthesize(args.dims, args.m, n, f, args.snr, &mut trial_rng(args.seed, 0, 0))?;
    emit(&args.out, SampleFile::from_frame(&frame).render().as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Bench(a) => bench(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Eps(a) => eps(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
