//! `mor-sim`: parameter sweeps and self-verification for magneto-optical
//! rotation with coherent and down-converted light.

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mor_core::detection::default_geometry;
use mor_core::fock::Mode;
use mor_core::sources::{DEFAULT_EPSILON, DEFAULT_N_MAX_CAP};
use mor_core::sweep::{
    self, EnvelopeConfig, Estimator, EvalMode, FringeConfig, GridSpec, SensitivityConfig, SensitivitySource,
    VisibilityConfig,
};
use mor_core::{verify, Error, Evaluator, Geometry, MediumSpec, ObservableSpec, Occupation, SourceSpec, Truncation};
use num_complex::Complex64;

#[derive(Parser)]
#[command(
    name = "mor-sim",
    version,
    about = "Magneto-optical rotation with coherent and PDC light"
)]
struct Cli {
    /// Worker threads for grid evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Observable versus rotation angle theta.
    Fringe(FringeArgs),
    /// Fringe visibility versus interaction parameter r (collinear PDC).
    Visibility(VisibilityArgs),
    /// Four-photon projection at theta = 0 versus r.
    Envelope(EnvelopeArgs),
    /// Minimum detectable angle versus mean photon number.
    Sensitivity(SensitivityArgs),
    /// Check the numerical engine against the closed forms.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Run against a channel that rotates beam b the wrong way (self-test of the checks).
    #[arg(long, hide = true)]
    inject_unreversed_b: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Coherent,
    Collinear,
    Noncollinear,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Numeric,
    Exact,
    Both,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Numeric => EvalMode::Numeric,
            ModeArg::Exact => EvalMode::Exact,
            ModeArg::Both => EvalMode::Both,
        }
    }
}

#[derive(Args)]
struct TruncationArgs {
    /// Fixed number of pairs kept in the source state.
    #[arg(long, conflicts_with = "resum")]
    n_max: Option<u32>,
    /// Evaluate collinear moment observables without a pair cutoff.
    #[arg(long)]
    resum: bool,
    /// Truncation error target for automatic n_max.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Largest n_max automatic selection may use.
    #[arg(long, default_value_t = DEFAULT_N_MAX_CAP)]
    n_max_cap: u32,
}

impl TruncationArgs {
    fn truncation(&self) -> Truncation {
        match (self.resum, self.n_max) {
            (true, _) => Truncation::Resummed,
            (false, Some(n)) => Truncation::Fixed(n),
            (false, None) => Truncation::Auto {
                epsilon: self.epsilon,
                cap: self.n_max_cap,
            },
        }
    }
}

#[derive(Args)]
struct FringeArgs {
    #[arg(long, value_enum, default_value = "collinear")]
    source: SourceArg,
    /// Interaction parameter of the PDC sources.
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    /// Coherent amplitude modulus.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Pump phase of the collinear source, or phase of alpha.
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long, default_value_t = 0.0)]
    theta_min: f64,
    #[arg(long, default_value_t = TAU)]
    theta_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// intensity[:MODE], coincidence[:M1,M2], glauber4[:M1,M2], projection:a,b,c,d or nd-variance[:M1,M2].
    /// Defaults to the source's headline observable.
    #[arg(long)]
    observable: Option<String>,
    /// collinear or noncollinear; defaults to the source's own geometry.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long, value_enum, default_value = "numeric")]
    mode: ModeArg,
    /// Common circular phase theta_+.
    #[arg(long)]
    theta_plus: Option<f64>,
    /// Medium parameters; theta_+ = k l chi_+ when --theta-plus is absent.
    #[arg(long, requires_all = ["chi_minus", "k", "l"])]
    chi_plus: Option<f64>,
    #[arg(long, requires_all = ["chi_plus", "k", "l"])]
    chi_minus: Option<f64>,
    #[arg(long, requires_all = ["chi_plus", "chi_minus", "l"])]
    k: Option<f64>,
    #[arg(long, requires_all = ["chi_plus", "chi_minus", "k"])]
    l: Option<f64>,
    #[command(flatten)]
    truncation: TruncationArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VisibilityArgs {
    #[arg(long, default_value_t = 0.01)]
    r_min: f64,
    #[arg(long, default_value_t = 1.3)]
    r_max: f64,
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// coincidence or glauber4 (optionally with modes, see `fringe --help`).
    #[arg(long, default_value = "coincidence")]
    observable: String,
    /// Theta samples per fringe period (at least 257 are used).
    #[arg(long, default_value_t = 257)]
    points_per_period: usize,
    #[arg(long, value_enum, default_value = "numeric")]
    mode: ModeArg,
    #[command(flatten)]
    truncation: TruncationArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnvelopeArgs {
    #[arg(long, default_value = "noncollinear")]
    geometry: String,
    #[arg(long, default_value_t = 0.0)]
    r_min: f64,
    #[arg(long, default_value_t = 3.0)]
    r_max: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
    #[arg(long, value_enum, default_value = "numeric")]
    mode: ModeArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SensitivitySourceArg {
    Coherent,
    Collinear,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    NoiseFloor,
    ErrorPropagation,
}

#[derive(Args)]
struct SensitivityArgs {
    #[arg(long, value_enum, default_value = "collinear")]
    source: SensitivitySourceArg,
    #[arg(long, default_value_t = 10.0)]
    mean_n_min: f64,
    #[arg(long, default_value_t = 1e4)]
    mean_n_max: f64,
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long, value_enum, default_value = "noise-floor")]
    estimator: EstimatorArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_observable(source: SourceArg) -> ObservableSpec {
    match source {
        SourceArg::Coherent => ObservableSpec::Intensity(Mode::AH),
        SourceArg::Collinear => ObservableSpec::TwoPhotonCoincidence(Mode::AH, Mode::AV),
        SourceArg::Noncollinear => ObservableSpec::FourPhotonProjection(Occupation::new(1, 1, 1, 1)),
    }
}

fn grid(min: f64, max: f64, points: usize) -> Result<GridSpec, Error> {
    if points < 2 {
        return Err(Error::Validation(format!("need at least 2 grid points, got {points}")));
    }
    if min.partial_cmp(&max) != Some(std::cmp::Ordering::Less) {
        return Err(Error::Validation(format!(
            "grid minimum {min} must be below maximum {max}"
        )));
    }
    Ok(GridSpec::new(min, max, points))
}

fn fringe(args: &FringeArgs, ev: &Evaluator) -> Result<String, Error> {
    let truncation = args.truncation.truncation();
    let source = match args.source {
        SourceArg::Coherent => SourceSpec::coherent(Complex64::from_polar(args.alpha, args.phi)),
        SourceArg::Collinear => SourceSpec::collinear_with_phase(args.r, args.phi).with_truncation(truncation),
        SourceArg::Noncollinear => SourceSpec::noncollinear(args.r).with_truncation(truncation),
    };
    let geometry = match &args.geometry {
        Some(g) => g.parse()?,
        None => default_geometry(&source),
    };
    let observable = match &args.observable {
        Some(o) => o.parse()?,
        None => default_observable(args.source),
    };
    let raw = match (args.chi_plus, args.chi_minus, args.k, args.l) {
        (Some(chi_plus), Some(chi_minus), Some(k), Some(l)) => Some(mor_core::channel::Susceptibilities {
            chi_plus,
            chi_minus,
            k,
            l,
        }),
        _ => None,
    };
    let theta_plus = if let Some(s) = raw {
        let angles = args.theta_plus.map(|tp| (0.0, tp));
        let (medium, warning) = MediumSpec::resolve(Some(s), angles)?;
        if let Some(w) = warning {
            eprintln!("warning: {w}");
        }
        medium.theta_plus
    } else {
        args.theta_plus.unwrap_or(0.0)
    };
    let cfg = FringeConfig {
        source,
        geometry,
        observable,
        theta_plus,
        grid: grid(args.theta_min, args.theta_max, args.points)?,
        mode: args.mode.into(),
    };
    sweep::run_fringe(&cfg, ev)
}

fn visibility(args: &VisibilityArgs, ev: &Evaluator) -> Result<String, Error> {
    let cfg = VisibilityConfig {
        observable: args.observable.parse()?,
        r_grid: grid(args.r_min, args.r_max, args.points)?,
        truncation: args.truncation.truncation(),
        points_per_period: args.points_per_period,
        mode: args.mode.into(),
    };
    sweep::run_visibility(&cfg, ev)
}

fn envelope(args: &EnvelopeArgs, ev: &Evaluator) -> Result<String, Error> {
    let geometry: Geometry = args.geometry.parse()?;
    let cfg = EnvelopeConfig {
        geometry,
        r_grid: grid(args.r_min, args.r_max, args.points)?,
        mode: args.mode.into(),
    };
    sweep::run_envelope(&cfg, ev)
}

fn sensitivity(args: &SensitivityArgs, ev: &Evaluator) -> Result<String, Error> {
    let cfg = SensitivityConfig {
        source: match args.source {
            SensitivitySourceArg::Coherent => SensitivitySource::Coherent,
            SensitivitySourceArg::Collinear => SensitivitySource::Collinear,
        },
        mean_n: grid(args.mean_n_min, args.mean_n_max, args.points)?,
        estimator: match args.estimator {
            EstimatorArg::NoiseFloor => Estimator::NoiseFloor,
            EstimatorArg::ErrorPropagation => Estimator::ErrorPropagation,
        },
    };
    sweep::run_sensitivity(&cfg, ev)
}

fn emit(csv: &str, out: Option<&PathBuf>) -> ExitCode {
    match out {
        Some(path) => match std::fs::write(path, csv) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                ExitCode::from(1)
            }
        },
        None => {
            print!("{csv}");
            ExitCode::SUCCESS
        }
    }
}

fn run(cli: &Cli) -> ExitCode {
    let ev = Evaluator::default();
    let (result, out) = match &cli.command {
        Command::Fringe(a) => (fringe(a, &ev), a.out.as_ref()),
        Command::Visibility(a) => (visibility(a, &ev), a.out.as_ref()),
        Command::Envelope(a) => (envelope(a, &ev), a.out.as_ref()),
        Command::Sensitivity(a) => (sensitivity(a, &ev), a.out.as_ref()),
        Command::Verify(a) => {
            let ev = if a.inject_unreversed_b {
                Evaluator::with_propagator(mor_core::channel::apply_mor_unreversed)
            } else {
                ev
            };
            let report = verify::run(&ev);
            print!("{}", report.render());
            return if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            };
        }
    };
    match result {
        Ok(csv) => emit(&csv, out),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build();
    match pool {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            ExitCode::from(1)
        }
    }
}
