//! Batch driver for the fractional-dynamics toolkit. Every subcommand
//! reads its inputs from flags/files, writes CSV/JSON artifacts plus a
//! manifest echoing the resolved configuration, and is deterministic
//! for a fixed argv + seed. Exit codes: 0 success, 1 validation error,
//! 2 numerical-accuracy failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracq::diffusion::{fractional_msd, solve_l1_stepping, solve_mode_exact, DiffusionProblem};
use fracq::export::{
    read_ensemble_csv, write_bands_csv, write_ensemble_csv, write_field_csv, write_manifest_json,
    write_table_csv, RunManifest,
};
use fracq::fitting::{fit_power_law, ingest_csv};
use fracq::fracops::{ComplexField, FractionalOrders, GridSpec, MlError};
use fracq::quantum::{
    band_structure_converged, evolve_free_fractional, split_step_evolve, PhysicalConstants,
    PotentialSpec, QuantumError, QuantumNumbers,
};
use fracq::statmech::{mb_energy_pdf, occupancy, EnsembleParams, Statistics};
use fracq::stochastic::{
    estimate_indices, fbm_paths, levy_flight_ensemble, sample_stable, EnsembleKind, FbmParams,
    IndexEstimate, StableParams, TrajectoryEnsemble,
};
use num_complex::Complex64;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

const OUT_DIR_ENV: &str = "FRACQ_OUT_DIR";

#[derive(Parser)]
#[command(name = "fracq", version, about = "Fractional diffusion/quantum toolkit")]
struct Cli {
    /// Output directory (falls back to $FRACQ_OUT_DIR, then the
    /// current directory)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the anomalous-diffusion equation and export snapshots
    Diffuse(DiffuseArgs),
    /// Evolve a wave packet under the fractional Schrodinger equation
    Schrodinger(SchrodingerArgs),
    /// Bloch band structure for a periodic potential
    Bands(BandsArgs),
    /// Draw a Levy-flight trajectory ensemble
    SampleLevy(SampleLevyArgs),
    /// Draw a fractional-Brownian-motion trajectory ensemble
    SampleFbm(SampleFbmArgs),
    /// Estimate the stability or Hurst index from an ensemble CSV
    Estimate(EstimateArgs),
    /// Tabulate energy-state statistics
    Statmech(StatmechArgs),
    /// Fit a frequency power law to attenuation data
    Fit(FitArgs),
    /// Tabulate the fractional wavenumber/momentum/frequency/energy relations
    Relations(RelationsArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Number of grid points (power of two)
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Domain length
    #[arg(long, default_value_t = 32.0)]
    length: f64,
    /// Left edge of the domain (default: -length/2)
    #[arg(long)]
    origin: Option<f64>,
}

impl GridArgs {
    fn build(&self) -> Result<GridSpec, CliError> {
        let origin = self.origin.unwrap_or(-self.length / 2.0);
        Ok(GridSpec::new(self.n, self.length, origin)
            .map_err(|e| CliError::Validation(e.to_string()))?)
    }
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    /// Fractional kinetic coefficient D_mu
    #[arg(long, default_value_t = 0.5)]
    d_mu: f64,
    /// Scaled Planck constant of the fractional frequency relation
    #[arg(long, default_value_t = 1.0)]
    h_eta: f64,
}

impl ConstantArgs {
    fn build(&self) -> Result<PhysicalConstants, CliError> {
        PhysicalConstants::new(self.mass, self.hbar, self.d_mu, self.h_eta)
            .map_err(|e| CliError::Validation(e.to_string()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitKind {
    Delta,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiffuseMethod {
    ModeExact,
    L1,
}

#[derive(Args)]
struct DiffuseArgs {
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    mu: f64,
    /// Generalized diffusivity
    #[arg(long)]
    gamma: f64,
    /// Output times, comma separated, ascending
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DiffuseMethod::ModeExact)]
    method: DiffuseMethod,
    /// Steps per unit time for the l1 method
    #[arg(long, default_value_t = 256)]
    steps_per_unit: usize,
    #[arg(long, value_enum, default_value_t = InitKind::Delta)]
    init: InitKind,
    /// Gaussian initial width
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Fractional moment order for the displacement curve (skipped if absent)
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PotentialKindArg {
    None,
    Cosine,
    Square,
    Barrier,
    Well,
}

#[derive(Args)]
struct PotentialArgs {
    #[arg(long, value_enum, default_value_t = PotentialKindArg::None)]
    potential: PotentialKindArg,
    #[arg(long, default_value_t = 1.0)]
    v0: f64,
    #[arg(long, default_value_t = 1.0)]
    period: f64,
    /// Fraction of the period occupied by a barrier/well
    #[arg(long, default_value_t = 0.5)]
    feature_width: f64,
}

impl PotentialArgs {
    fn build(&self) -> Result<Option<PotentialSpec>, CliError> {
        let spec = match self.potential {
            PotentialKindArg::None => return Ok(None),
            PotentialKindArg::Cosine => PotentialSpec::cosine(self.v0, self.period),
            PotentialKindArg::Square => PotentialSpec::square(self.v0, self.period),
            PotentialKindArg::Barrier => {
                PotentialSpec::barrier(self.v0, self.period, self.feature_width)
            }
            PotentialKindArg::Well => PotentialSpec::well(self.v0, self.period, self.feature_width),
        };
        Ok(Some(spec.map_err(|e| CliError::Validation(e.to_string()))?))
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": match self.potential {
                PotentialKindArg::None => "none",
                PotentialKindArg::Cosine => "cosine",
                PotentialKindArg::Square => "square",
                PotentialKindArg::Barrier => "barrier",
                PotentialKindArg::Well => "well",
            },
            "v0": self.v0,
            "period": self.period,
            "feature_width": self.feature_width,
        })
    }
}

#[derive(Args)]
struct SchrodingerArgs {
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long)]
    mu: f64,
    /// Total evolution time
    #[arg(long)]
    t: f64,
    /// Time step for the split-step propagator (eta = 1 only)
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Initial Gaussian packet width
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Initial packet carrier wavenumber
    #[arg(long, default_value_t = 0.0)]
    k0: f64,
    #[command(flatten)]
    potential: PotentialArgs,
    #[command(flatten)]
    constants: ConstantArgs,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct BandsArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 4)]
    n_bands: usize,
    #[arg(long, default_value_t = 31)]
    n_plane_waves: usize,
    /// Number of Bloch phases spanning the first Brillouin zone
    #[arg(long, default_value_t = 33)]
    n_q: usize,
    /// Skip the doubled-resolution convergence check
    #[arg(long)]
    no_self_check: bool,
    #[command(flatten)]
    potential: PotentialArgs,
    #[command(flatten)]
    constants: ConstantArgs,
}

#[derive(Args)]
struct SampleLevyArgs {
    /// Stability index
    #[arg(long)]
    mu: f64,
    /// Characteristic-function scale
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 100)]
    n_paths: usize,
    #[arg(long, default_value_t = 128)]
    n_steps: usize,
    #[arg(long, default_value_t = 0.0078125)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write n independent single draws to draws.csv
    #[arg(long)]
    n_draws: Option<usize>,
}

#[derive(Args)]
struct SampleFbmArgs {
    /// Hurst index (H = eta/2 for the subdiffusive regime)
    #[arg(long)]
    hurst: f64,
    #[arg(long, default_value_t = 100)]
    n_paths: usize,
    #[arg(long, default_value_t = 128)]
    n_steps: usize,
    #[arg(long, default_value_t = 0.0078125)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleKindArg {
    Levy,
    Fbm,
}

#[derive(Args)]
struct EstimateArgs {
    /// Ensemble CSV (path,time,position) as written by sample-levy/sample-fbm
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: EnsembleKindArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticsArg {
    Mb,
    Bose,
    Fermi,
}

#[derive(Args)]
struct StatmechArgs {
    #[arg(long)]
    beta: f64,
    /// Chemical potential (occupancy laws)
    #[arg(long, default_value_t = 0.0)]
    mu_c: f64,
    /// Spatial fractional order of the dispersion
    #[arg(long)]
    mu: f64,
    #[arg(long, value_enum, default_value_t = StatisticsArg::Mb)]
    statistics: StatisticsArg,
    #[arg(long, default_value_t = 10.0)]
    e_max: f64,
    #[arg(long, default_value_t = 200)]
    n_points: usize,
}

#[derive(Args)]
struct FitArgs {
    /// Attenuation CSV with header omega,alpha[,label]
    #[arg(long)]
    input: PathBuf,
    /// Frequency range lo:hi restricting the fit
    #[arg(long)]
    range: Option<String>,
}

#[derive(Args)]
struct RelationsArgs {
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 0.1)]
    k_min: f64,
    #[arg(long, default_value_t = 10.0)]
    k_max: f64,
    #[arg(long, default_value_t = 50)]
    n_points: usize,
    /// Log-spaced wavenumber grid instead of linear
    #[arg(long)]
    log_spaced: bool,
    #[command(flatten)]
    constants: ConstantArgs,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Accuracy(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Accuracy(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Accuracy(m) => m,
        }
    }
}

/// Anything rooted in a certified-accuracy failure maps to exit 2;
/// other errors are validation failures.
fn classify<E: std::error::Error + 'static>(err: E) -> CliError {
    let mut source: Option<&dyn std::error::Error> = Some(&err);
    while let Some(e) = source {
        if let Some(ml) = e.downcast_ref::<MlError>() {
            if matches!(ml, MlError::AccuracyLoss { .. }) {
                return CliError::Accuracy(err.to_string());
            }
        }
        if let Some(q) = e.downcast_ref::<QuantumError>() {
            if matches!(q, QuantumError::NotConverged(_)) {
                return CliError::Accuracy(err.to_string());
            }
        }
        source = e.source();
    }
    CliError::Validation(err.to_string())
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful outcomes; anything else is a
            // usage error on stderr
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out_dir = cli
        .out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| validation(format!("cannot create {}: {e}", out_dir.display())))?;
    match cli.command {
        Command::Diffuse(args) => run_diffuse(&out_dir, args),
        Command::Schrodinger(args) => run_schrodinger(&out_dir, args),
        Command::Bands(args) => run_bands(&out_dir, args),
        Command::SampleLevy(args) => run_sample_levy(&out_dir, args),
        Command::SampleFbm(args) => run_sample_fbm(&out_dir, args),
        Command::Estimate(args) => run_estimate(&out_dir, args),
        Command::Statmech(args) => run_statmech(&out_dir, args),
        Command::Fit(args) => run_fit(&out_dir, args),
        Command::Relations(args) => run_relations(&out_dir, args),
    }
}

fn create(out_dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = out_dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| validation(format!("cannot write {}: {e}", path.display())))
}

fn manifest(
    out_dir: &Path,
    subcommand: &str,
    seed: Option<u64>,
    parameters: serde_json::Value,
    outputs: Vec<String>,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        tool: "fracq".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        seed,
        parameters,
        outputs,
    };
    let w = create(out_dir, "manifest.json")?;
    write_manifest_json(w, &manifest).map_err(|e| validation(e.to_string()))
}

fn initial_field(
    grid: GridSpec,
    init: InitKind,
    width: f64,
    k0: f64,
    normalize: bool,
) -> Result<ComplexField, CliError> {
    let field = match init {
        InitKind::Delta => {
            let center = grid.origin() + grid.length() / 2.0;
            ComplexField::point_mass(grid, center).map_err(classify)?
        }
        InitKind::Gaussian => {
            if !(width > 0.0) {
                return Err(validation(format!("width must be positive, got {width}")));
            }
            let center = grid.origin() + grid.length() / 2.0;
            ComplexField::from_fn(grid, |x| {
                let u = (x - center) / width;
                Complex64::from_polar((-0.5 * u * u).exp(), k0 * x)
            })
            .map_err(classify)?
        }
    };
    if normalize {
        let norm = field.l2_norm() * grid.spacing().sqrt();
        let values = field.values().iter().map(|v| v / norm).collect();
        ComplexField::new(grid, values).map_err(classify)
    } else {
        Ok(field)
    }
}

fn run_diffuse(out_dir: &Path, args: DiffuseArgs) -> Result<(), CliError> {
    let orders = FractionalOrders::new(args.eta, args.mu).map_err(classify)?;
    let grid = args.grid.build()?;
    let initial = initial_field(grid, args.init, args.width, 0.0, false)?;
    let problem = DiffusionProblem::new(orders, args.gamma, initial).map_err(classify)?;
    if args.t.is_empty() {
        return Err(validation("at least one output time is required"));
    }

    // solution holds one snapshot per requested time for mode-exact;
    // the stepper returns every step, so record which ones to export
    let (solution, export_indices) = match args.method {
        DiffuseMethod::ModeExact => {
            let s = solve_mode_exact(&problem, &args.t).map_err(classify)?;
            let all = (0..s.times().len()).collect();
            (s, all)
        }
        DiffuseMethod::L1 => {
            let t_final = *args.t.last().unwrap();
            let steps = ((t_final * args.steps_per_unit as f64).ceil() as usize).max(1);
            let dt = t_final / steps as f64;
            let full = solve_l1_stepping(&problem, dt, steps).map_err(classify)?;
            let mut indices = Vec::new();
            for &t in &args.t {
                let idx = (t / dt).round() as usize;
                if idx >= full.times().len() || (full.times()[idx] - t).abs() > 0.51 * dt {
                    return Err(validation(format!(
                        "requested time {t} is not on the uniform step grid"
                    )));
                }
                indices.push(idx);
            }
            (full, indices)
        }
    };

    let mut outputs = Vec::new();
    let points = grid.points();
    for (i, &idx) in export_indices.iter().enumerate() {
        let name = format!("snapshot_{i}.csv");
        let w = create(out_dir, &name)?;
        write_field_csv(w, &points, solution.snapshots()[idx].values())
            .map_err(|e| validation(e.to_string()))?;
        outputs.push(name);
    }

    if let Some(delta) = args.delta {
        let msd = fractional_msd(&solution, delta).map_err(classify)?;
        let rows: Vec<Vec<f64>> = msd
            .times
            .iter()
            .zip(&msd.moments)
            .zip(&msd.confined_mass)
            .map(|((t, m), c)| vec![*t, *m, *c])
            .collect();
        let w = create(out_dir, "msd.csv")?;
        write_table_csv(w, &["time", "moment", "confined_mass"], &rows)
            .map_err(|e| validation(e.to_string()))?;
        outputs.push("msd.csv".into());
    }

    manifest(
        out_dir,
        "diffuse",
        None,
        serde_json::json!({
            "eta": args.eta, "mu": args.mu, "gamma": args.gamma,
            "times": args.t,
            "method": match args.method { DiffuseMethod::ModeExact => "mode-exact", DiffuseMethod::L1 => "l1" },
            "steps_per_unit": args.steps_per_unit,
            "init": match args.init { InitKind::Delta => "delta", InitKind::Gaussian => "gaussian" },
            "width": args.width,
            "delta": args.delta,
            "grid": {"n": grid.n(), "length": grid.length(), "origin": grid.origin()},
        }),
        outputs,
    )
}

fn run_schrodinger(out_dir: &Path, args: SchrodingerArgs) -> Result<(), CliError> {
    let orders = FractionalOrders::new(args.eta, args.mu).map_err(classify)?;
    let constants = args.constants.build()?;
    let grid = args.grid.build()?;
    let psi0 = initial_field(grid, InitKind::Gaussian, args.width, args.k0, true)?;
    let potential = args.potential.build()?;

    let psi = match (&potential, args.eta == 1.0) {
        (Some(v), true) => {
            if !(args.dt > 0.0) {
                return Err(validation(format!("dt must be positive, got {}", args.dt)));
            }
            let steps = (args.t / args.dt).round() as usize;
            if steps == 0 || ((steps as f64) * args.dt - args.t).abs() > 1e-9 * args.t.max(1.0) {
                return Err(validation(format!(
                    "t={} is not an integer multiple of dt={}",
                    args.t, args.dt
                )));
            }
            split_step_evolve(&psi0, v, &constants, orders, args.dt, steps).map_err(classify)?
        }
        (None, _) => {
            evolve_free_fractional(&psi0, &constants, orders, args.t).map_err(classify)?
        }
        (Some(_), false) => {
            return Err(validation(
                "potentials require eta = 1; time-fractional evolution is free-particle only",
            ))
        }
    };

    let points = grid.points();
    let w = create(out_dir, "psi.csv")?;
    write_field_csv(w, &points, psi.values()).map_err(|e| validation(e.to_string()))?;

    manifest(
        out_dir,
        "schrodinger",
        None,
        serde_json::json!({
            "eta": args.eta, "mu": args.mu, "t": args.t, "dt": args.dt,
            "width": args.width, "k0": args.k0,
            "potential": args.potential.describe(),
            "constants": {"mass": constants.mass(), "hbar": constants.hbar(),
                           "d_mu": constants.d_mu(), "h_eta": constants.h_eta()},
            "grid": {"n": grid.n(), "length": grid.length(), "origin": grid.origin()},
            "norm": psi.l2_norm() * grid.spacing().sqrt(),
        }),
        vec!["psi.csv".into()],
    )
}

fn run_bands(out_dir: &Path, args: BandsArgs) -> Result<(), CliError> {
    let orders = FractionalOrders::new(1.0, args.mu).map_err(classify)?;
    let constants = args.constants.build()?;
    let potential = args
        .potential
        .build()?
        .ok_or_else(|| validation("bands requires --potential (use --v0 0 for the free case)"))?;
    if args.n_q < 2 {
        return Err(validation("need at least 2 Bloch phases"));
    }
    let edge = std::f64::consts::PI / potential.period();
    let qs: Vec<f64> = (0..args.n_q)
        .map(|i| -edge + 2.0 * edge * i as f64 / (args.n_q - 1) as f64)
        .collect();

    let bands = if args.no_self_check {
        fracq::quantum::band_structure(
            &potential,
            &constants,
            orders,
            args.n_bands,
            args.n_plane_waves,
            &qs,
        )
        .map_err(classify)?
    } else {
        band_structure_converged(
            &potential,
            &constants,
            orders,
            args.n_bands,
            args.n_plane_waves,
            &qs,
        )
        .map_err(classify)?
    };

    let w = create(out_dir, "bands.csv")?;
    write_bands_csv(w, &bands).map_err(|e| validation(e.to_string()))?;

    manifest(
        out_dir,
        "bands",
        None,
        serde_json::json!({
            "mu": args.mu, "n_bands": args.n_bands,
            "n_plane_waves": args.n_plane_waves, "n_q": args.n_q,
            "self_check": !args.no_self_check,
            "potential": args.potential.describe(),
            "constants": {"mass": constants.mass(), "hbar": constants.hbar(),
                           "d_mu": constants.d_mu(), "h_eta": constants.h_eta()},
        }),
        vec!["bands.csv".into()],
    )
}

fn run_sample_levy(out_dir: &Path, args: SampleLevyArgs) -> Result<(), CliError> {
    let params = StableParams::new(args.mu, args.gamma).map_err(classify)?;
    let ensemble = levy_flight_ensemble(params, args.n_paths, args.n_steps, args.dt, args.seed)
        .map_err(classify)?;
    let w = create(out_dir, "ensemble.csv")?;
    write_ensemble_csv(w, &ensemble).map_err(|e| validation(e.to_string()))?;
    let mut outputs = vec!["ensemble.csv".into()];

    if let Some(n) = args.n_draws {
        let draws = sample_stable(params, n, args.seed);
        let rows: Vec<Vec<f64>> = draws.iter().map(|&x| vec![x]).collect();
        let w = create(out_dir, "draws.csv")?;
        write_table_csv(w, &["draw"], &rows).map_err(|e| validation(e.to_string()))?;
        outputs.push("draws.csv".into());
    }

    manifest(
        out_dir,
        "sample-levy",
        Some(args.seed),
        serde_json::json!({
            "mu": args.mu, "gamma": args.gamma,
            "n_paths": args.n_paths, "n_steps": args.n_steps, "dt": args.dt,
            "n_draws": args.n_draws,
        }),
        outputs,
    )
}

fn run_sample_fbm(out_dir: &Path, args: SampleFbmArgs) -> Result<(), CliError> {
    let params = FbmParams::new(args.hurst, args.n_steps, args.dt).map_err(classify)?;
    let (ensemble, method) = fbm_paths(params, args.n_paths, args.seed).map_err(classify)?;
    let w = create(out_dir, "ensemble.csv")?;
    write_ensemble_csv(w, &ensemble).map_err(|e| validation(e.to_string()))?;

    manifest(
        out_dir,
        "sample-fbm",
        Some(args.seed),
        serde_json::json!({
            "hurst": args.hurst, "n_paths": args.n_paths,
            "n_steps": args.n_steps, "dt": args.dt,
            "synthesis": match method {
                fracq::stochastic::SynthesisMethod::CirculantEmbedding => "circulant-embedding",
                fracq::stochastic::SynthesisMethod::CholeskyFallback => "cholesky-fallback",
            },
        }),
        vec!["ensemble.csv".into()],
    )
}

fn run_estimate(out_dir: &Path, args: EstimateArgs) -> Result<(), CliError> {
    let file = File::open(&args.input)
        .map_err(|e| validation(format!("cannot read {}: {e}", args.input.display())))?;
    let rows = read_ensemble_csv(file).map_err(|e| validation(e.to_string()))?;

    // regroup path-major rows into trajectories
    let mut times = Vec::new();
    let mut positions: Vec<Vec<f64>> = Vec::new();
    for (path, time, position) in rows {
        if path == positions.len() {
            positions.push(Vec::new());
        } else if path + 1 != positions.len() {
            return Err(validation(format!(
                "ensemble CSV paths must be contiguous and path-major (saw path {path})"
            )));
        }
        if path == 0 {
            times.push(time);
        }
        positions[path].push(position);
    }
    let kind = match args.kind {
        EnsembleKindArg::Levy => EnsembleKind::LevyFlight,
        EnsembleKindArg::Fbm => EnsembleKind::FractionalBrownian,
    };
    let ensemble =
        TrajectoryEnsemble::from_parts(kind, times, positions, 0).map_err(classify)?;
    let estimate = estimate_indices(&ensemble).map_err(classify)?;

    let report = match estimate {
        IndexEstimate::Stability {
            mu_hat,
            ci_halfwidth,
        } => serde_json::json!({
            "kind": "stability", "mu_hat": mu_hat, "ci_halfwidth": ci_halfwidth,
        }),
        IndexEstimate::Hurst {
            hurst_hat,
            ci_halfwidth,
        } => serde_json::json!({
            "kind": "hurst", "hurst_hat": hurst_hat, "ci_halfwidth": ci_halfwidth,
        }),
    };
    let w = create(out_dir, "estimate.json")?;
    serde_json::to_writer_pretty(w, &report).map_err(|e| validation(e.to_string()))?;

    manifest(
        out_dir,
        "estimate",
        None,
        serde_json::json!({
            "input": args.input.display().to_string(),
            "kind": match args.kind { EnsembleKindArg::Levy => "levy", EnsembleKindArg::Fbm => "fbm" },
        }),
        vec!["estimate.json".into()],
    )
}

fn run_statmech(out_dir: &Path, args: StatmechArgs) -> Result<(), CliError> {
    let params = EnsembleParams::new(args.beta, args.mu_c).map_err(classify)?;
    let orders = FractionalOrders::new(1.0, args.mu).map_err(classify)?;
    if args.n_points < 2 || !(args.e_max > 0.0) {
        return Err(validation("need e_max > 0 and at least 2 table points"));
    }

    let mut rows = Vec::with_capacity(args.n_points);
    for i in 0..args.n_points {
        let e = args.e_max * (i as f64 + 0.5) / args.n_points as f64;
        let value = match args.statistics {
            StatisticsArg::Mb => mb_energy_pdf(e, params, orders).map_err(classify)?,
            StatisticsArg::Bose => occupancy(e, params, Statistics::Bose).map_err(classify)?,
            StatisticsArg::Fermi => occupancy(e, params, Statistics::Fermi).map_err(classify)?,
        };
        rows.push(vec![e, value]);
    }
    let header = match args.statistics {
        StatisticsArg::Mb => ["energy", "pdf"],
        StatisticsArg::Bose | StatisticsArg::Fermi => ["energy", "occupancy"],
    };
    let w = create(out_dir, "statmech.csv")?;
    write_table_csv(w, &header, &rows).map_err(|e| validation(e.to_string()))?;

    manifest(
        out_dir,
        "statmech",
        None,
        serde_json::json!({
            "beta": args.beta, "mu_c": args.mu_c, "mu": args.mu,
            "statistics": match args.statistics {
                StatisticsArg::Mb => "mb", StatisticsArg::Bose => "bose", StatisticsArg::Fermi => "fermi",
            },
            "e_max": args.e_max, "n_points": args.n_points,
        }),
        vec!["statmech.csv".into()],
    )
}

fn run_fit(out_dir: &Path, args: FitArgs) -> Result<(), CliError> {
    let file = File::open(&args.input)
        .map_err(|e| validation(format!("cannot read {}: {e}", args.input.display())))?;
    let dataset = ingest_csv(file).map_err(classify)?;
    let range = match &args.range {
        None => None,
        Some(raw) => {
            let (lo, hi) = raw
                .split_once(':')
                .ok_or_else(|| validation(format!("range must be lo:hi, got {raw:?}")))?;
            let lo: f64 = lo
                .parse()
                .map_err(|_| validation(format!("bad range bound {lo:?}")))?;
            let hi: f64 = hi
                .parse()
                .map_err(|_| validation(format!("bad range bound {hi:?}")))?;
            Some((lo, hi))
        }
    };
    let fit = fit_power_law(&dataset, range).map_err(classify)?;

    let report = serde_json::json!({
        "alpha0": fit.alpha0,
        "mu": fit.mu_exp,
        "r2": fit.r_squared,
        "ci": fit.ci_halfwidth,
        "n": fit.n_points,
        "decades": fit.decades_spanned,
        "range": range.map(|(lo, hi)| vec![lo, hi]),
    });
    let w = create(out_dir, "fit.json")?;
    serde_json::to_writer_pretty(w, &report).map_err(|e| validation(e.to_string()))?;

    manifest(
        out_dir,
        "fit",
        None,
        serde_json::json!({
            "input": args.input.display().to_string(),
            "range": args.range,
        }),
        vec!["fit.json".into()],
    )
}

fn run_relations(out_dir: &Path, args: RelationsArgs) -> Result<(), CliError> {
    let orders = FractionalOrders::new(args.eta, args.mu).map_err(classify)?;
    let constants = args.constants.build()?;
    if args.n_points < 2 {
        return Err(validation("need at least 2 table points"));
    }
    if !(args.k_min > 0.0 && args.k_max > args.k_min) {
        return Err(validation(format!(
            "need 0 < k_min < k_max, got {}..{}",
            args.k_min, args.k_max
        )));
    }

    let rows: Vec<Vec<f64>> = (0..args.n_points)
        .map(|i| {
            let f = i as f64 / (args.n_points - 1) as f64;
            let k = if args.log_spaced {
                args.k_min * (args.k_max / args.k_min).powf(f)
            } else {
                args.k_min + (args.k_max - args.k_min) * f
            };
            let qn = QuantumNumbers::from_wavenumber(k, &constants, orders);
            vec![qn.k, qn.p, qn.nu, qn.energy, qn.kinetic]
        })
        .collect();
    let w = create(out_dir, "relations.csv")?;
    write_table_csv(w, &["k", "p", "nu", "energy", "kinetic"], &rows)
        .map_err(|e| validation(e.to_string()))?;

    manifest(
        out_dir,
        "relations",
        None,
        serde_json::json!({
            "eta": args.eta, "mu": args.mu,
            "k_min": args.k_min, "k_max": args.k_max,
            "n_points": args.n_points, "log_spaced": args.log_spaced,
            "constants": {"mass": constants.mass(), "hbar": constants.hbar(),
                           "d_mu": constants.d_mu(), "h_eta": constants.h_eta()},
        }),
        vec!["relations.csv".into()],
    )
}
