//! The `qf` command line.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::appendix::appendix_trials;
use crate::channels::{monotonicity_scan, ChannelKind, ScanOptions, StateMeasure};
use crate::correlations::{covariance, f_correlation, f_covariance, masi, Observable};
use crate::error::{Error, Result};
use crate::fops::FOpSpec;
use crate::hermitian::{random_pure_state, real_diag, DensityMatrix, RngStream, Side};
use crate::io::{read_observable, read_state, state_to_json};
use crate::qfcorr::{equispaced_spectrum, qf_optimize, qf_two_qubit, OptimizeOptions};
use crate::thermal::{site_pauli, thermal_report, tfi_hamiltonian, SpinChainSpec};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_MISSING_FILE: u8 = 3;
pub const EXIT_TOLERANCE: u8 = 4;

pub const THERMAL_TOL: f64 = 1e-5;

#[derive(Parser, Debug, Serialize)]
#[command(name = "qf", version, about = "Metric-adjusted skew informations and quantum f-correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// MASIs, covariances and the f-correlation of a state and two observables
    Compute(ComputeArgs),
    /// The quantum f-correlation of a bipartite state
    Quantify(QuantifyArgs),
    /// Monotonicity scan under random local channels
    Scan(ScanArgs),
    /// Thermal and spectral routes to the quantum covariance of a spin chain
    Thermal(ThermalArgs),
    /// Dilation contraction checks on random states and unital channels
    AppendixCheck(AppendixArgs),
    /// Write a random state file
    RandomState(RandomStateArgs),
}

fn as_display<T: Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn as_display_opt<T: Display, S: Serializer>(
    v: &Option<T>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.collect_str(x),
        None => s.serialize_none(),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ComputeArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long = "f", default_value = "wy")]
    #[serde(serialize_with = "as_display")]
    pub f: FOpSpec,
    /// Observable on A (local dimension) or on the whole system
    #[arg(long)]
    pub obs_a: Option<PathBuf>,
    /// Observable on B (local dimension) or on the whole system
    #[arg(long)]
    pub obs_b: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Auto,
    Closed,
    Opt,
}

#[derive(Args, Debug, Serialize)]
pub struct QuantifyArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long = "f", default_value = "wy")]
    #[serde(serialize_with = "as_display")]
    pub f: FOpSpec,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long = "f", default_value = "wy")]
    #[serde(serialize_with = "as_display")]
    pub f: FOpSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination for the per-sample records
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "unital", value_parser = parse_channel)]
    pub channel: ChannelKind,
    /// Random-state measure for the inputs (hs|bures)
    #[arg(long, default_value = "bures", value_parser = parse_measure)]
    pub measure: StateMeasure,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    /// Write every record instead of at most 10⁴
    #[arg(long)]
    pub full: bool,
}

fn parse_channel(s: &str) -> std::result::Result<ChannelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_measure(s: &str) -> std::result::Result<StateMeasure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Tfi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliArg {
    X,
    Y,
    Z,
}

impl PauliArg {
    fn index(self) -> usize {
        match self {
            PauliArg::X => 1,
            PauliArg::Y => 2,
            PauliArg::Z => 3,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ThermalArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Tfi)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0)]
    pub site_a: usize,
    #[arg(long, default_value_t = 1)]
    pub site_b: usize,
    #[arg(long, value_enum, default_value_t = PauliArg::Z)]
    pub op_a: PauliArg,
    #[arg(long, value_enum, default_value_t = PauliArg::Z)]
    pub op_b: PauliArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct AppendixArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// One f for every trial; default cycles through bu, wy, wyd:0.25, qvar
    #[arg(long = "f")]
    #[serde(serialize_with = "as_display_opt")]
    pub f: Option<FOpSpec>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct RandomStateArgs {
    /// Subsystem dimensions, comma separated
    #[arg(long, value_delimiter = ',', default_value = "2,2")]
    pub dims: Vec<usize>,
    #[arg(long, default_value = "hs", value_parser = parse_measure)]
    pub measure: StateMeasure,
    /// Draw a Haar-random pure state instead
    #[arg(long)]
    pub pure: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Hex SHA-256 of the canonical JSON form of the parsed command.
pub fn config_digest(cli: &Cli) -> String {
    let canonical = serde_json::to_string(cli).expect("config serializes");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

enum Outcome {
    Ok,
    ToleranceFailure,
}

fn with_digest<T: Serialize>(report: &T, digest: &str) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    if let Value::Object(map) = &mut v {
        map.insert("config_digest".into(), Value::String(digest.into()));
    }
    v
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Embeds a local observable on `side`, or accepts a full-dimensional one.
fn place_observable(o: Observable, side: Side, rho: &DensityMatrix) -> Result<Observable> {
    if o.dim() == rho.dim() {
        Ok(o)
    } else {
        o.embed(side, rho.dims())
    }
}

fn default_observable(rho: &DensityMatrix, side: Side) -> Result<Observable> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(crate::error::dim_err(format!(
            "default observables need a bipartite state, got dims {dims:?}"
        )));
    }
    let spec = equispaced_spectrum(dims[0], dims[1])?;
    let values = spec.values(side);
    Observable::with_spectrum(real_diag(values), values.to_vec())?.embed(side, dims)
}

fn run_compute(args: &ComputeArgs, digest: &str) -> Result<Outcome> {
    let rho = read_state(&args.state)?;
    let load = |path: &Option<PathBuf>, side| match path {
        Some(p) => place_observable(read_observable(p)?, side, &rho),
        None => default_observable(&rho, side),
    };
    let a = load(&args.obs_a, Side::A)?;
    let b = load(&args.obs_b, Side::B)?;
    let report = json!({
        "masi_a": masi(&rho, &a, &args.f)?,
        "masi_b": masi(&rho, &b, &args.f)?,
        "covariance": covariance(&rho, &a, &b)?,
        "f_covariance": f_covariance(&rho, &a, &b, &args.f)?,
        "f_correlation": f_correlation(&rho, &a, &b, &args.f)?,
        "f": args.f.to_string(),
    });
    emit(&with_digest(&report, digest), args.out.as_deref())?;
    Ok(Outcome::Ok)
}

fn run_quantify(args: &QuantifyArgs, digest: &str) -> Result<Outcome> {
    let rho = read_state(&args.state)?;
    let opts = OptimizeOptions {
        restarts: args.restarts,
        max_iters: args.max_iters,
        tol: args.tol,
        seed: args.seed,
    };
    let result = match args.method {
        MethodArg::Closed => qf_two_qubit(&rho, &args.f)?,
        MethodArg::Opt => qf_optimize(&rho, &args.f, &opts)?,
        MethodArg::Auto if rho.dims() == [2, 2] => qf_two_qubit(&rho, &args.f)?,
        MethodArg::Auto => qf_optimize(&rho, &args.f, &opts)?,
    };
    emit(&with_digest(&result, digest), args.out.as_deref())?;
    Ok(Outcome::Ok)
}

fn run_scan(args: &ScanArgs, digest: &str) -> Result<Outcome> {
    let opts = ScanOptions {
        channel: args.channel,
        measure: args.measure,
        side: Side::A,
        epsilon: args.epsilon,
    };
    let report = monotonicity_scan(args.samples, &args.f, args.seed, &opts)?;
    if let Some(path) = &args.out {
        report.write_csv(fs::File::create(path)?, args.full)?;
    }
    let mut summary = with_digest(&report, digest);
    summary["options"] = serde_json::to_value(opts)?;
    emit(&summary, None)?;
    Ok(Outcome::Ok)
}

fn run_thermal(args: &ThermalArgs, digest: &str) -> Result<Outcome> {
    let ModelArg::Tfi = args.model;
    let spec = SpinChainSpec {
        n: args.n,
        j: args.j,
        h: args.h,
    };
    let h = tfi_hamiltonian(&spec)?;
    let a = Observable::new(site_pauli(args.op_a.index(), args.site_a, args.n)?)?;
    let b = Observable::new(site_pauli(args.op_b.index(), args.site_b, args.n)?)?;
    let report = thermal_report(&h, &spec.dims(), args.t, &a, &b)?;
    let passed = report.delta < THERMAL_TOL;
    let mut v = with_digest(&report, digest);
    v["passed"] = Value::Bool(passed);
    emit(&v, args.out.as_deref())?;
    Ok(if passed { Outcome::Ok } else { Outcome::ToleranceFailure })
}

fn run_appendix(args: &AppendixArgs, digest: &str) -> Result<Outcome> {
    let fs_list: Vec<FOpSpec> = match args.f {
        Some(f) => vec![f],
        None => FOpSpec::registry().to_vec(),
    };
    let summary = appendix_trials(args.trials, &fs_list, args.seed)?;
    let passed = summary.passes();
    let mut v = with_digest(&summary, digest);
    v["passed"] = Value::Bool(passed);
    emit(&v, args.out.as_deref())?;
    Ok(if passed { Outcome::Ok } else { Outcome::ToleranceFailure })
}

fn run_random_state(args: &RandomStateArgs) -> Result<Outcome> {
    if args.dims.is_empty() || args.dims.contains(&0) {
        return Err(crate::error::dim_err(format!("invalid dims {:?}", args.dims)));
    }
    let mut rng = RngStream::new(args.seed, 0).rng();
    let rho = if args.pure {
        let d = args.dims.iter().product();
        DensityMatrix::from_pure(&random_pure_state(d, &mut rng), &args.dims)?
    } else {
        args.measure.sample(&args.dims, &mut rng)
    };
    let text = state_to_json(&rho) + "\n";
    match &args.out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(Outcome::Ok)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(e) if e.kind() == io::ErrorKind::NotFound => EXIT_MISSING_FILE,
        Error::Parse(_) | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("QF_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    configure_threads();
    let digest = config_digest(cli);
    let outcome = match &cli.command {
        Command::Compute(a) => run_compute(a, &digest)?,
        Command::Quantify(a) => run_quantify(a, &digest)?,
        Command::Scan(a) => run_scan(a, &digest)?,
        Command::Thermal(a) => run_thermal(a, &digest)?,
        Command::AppendixCheck(a) => run_appendix(a, &digest)?,
        Command::RandomState(a) => run_random_state(a)?,
    };
    Ok(match outcome {
        Outcome::Ok => ExitCode::SUCCESS,
        Outcome::ToleranceFailure => ExitCode::from(EXIT_TOLERANCE),
    })
}

pub fn main_entry() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qf: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
