use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use noisepulse::conditions::{assemble_system, Ansatz, Family, NoiseModel, Reduction, SystemDef};
use noisepulse::io::report::{self, tables_passed};
use noisepulse::io::specfile::{self, parse_angle, NoiseKind, SpecFile};
use noisepulse::io::{catalog, export, Config};
use noisepulse::numerics::SpareSearch;
use noisepulse::pulse::PulseSpec;
use noisepulse::synthesis::{self, SpareChoice, SynthesisConfig};
use noisepulse::verify::{self, NoiseGenerator, VerifyConfig};
use noisepulse::Error;

#[derive(Parser)]
#[command(name = "noisepulse", version, about = "Synthesize and verify noise-cancelling spin-1/2 control pulses")]
struct Cli {
    /// TOML file overriding tolerances and seeds.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Omit the timestamp header from reports.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for a pulse of the given family and order.
    Synthesize(SynthesizeArgs),
    /// Evaluate the residuals of a spec file.
    Check(CheckArgs),
    /// Check every shipped published parameter set.
    Tables,
    /// Concatenate a general-decoherence FM pi pulse with its time reverse.
    Compose(ComposeArgs),
    /// Write the control waveform or the rotation trajectory.
    Export(ExportArgs),
    /// Monte-Carlo scaling of the averaged error with noise strength.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    AmPiecewise,
    AmContinuous,
    Fm,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Dephasing,
    General,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Dephasing => NoiseKind::Dephasing,
            NoiseArg::General => NoiseKind::General,
        }
    }
}

#[derive(Args)]
struct NoiseFlags {
    /// Noise kind; defaults to the one recorded in the spec.
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    var_z: Option<f64>,
    #[arg(long)]
    var_x: Option<f64>,
}

impl NoiseFlags {
    fn model(&self, fallback: NoiseKind) -> NoiseModel {
        let kind = self.noise.map(NoiseKind::from).unwrap_or(fallback);
        let mut m = kind.unit_model();
        if let Some(v) = self.eta {
            m.eta_mean = v;
        }
        if let Some(v) = self.var_z {
            m.var_z = v;
        }
        if let Some(v) = self.var_x {
            m.var_x = v;
        }
        m
    }
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    order: u8,
    /// Target angle: `pi`, `pi/2` or a number.
    #[arg(long)]
    theta: String,
    #[arg(long, value_enum, default_value = "dephasing")]
    noise: NoiseArg,
    /// Time-symmetric ansatz: even coefficients only, mirrored switching instants.
    #[arg(long)]
    symmetric: bool,
    /// Free FM coefficient indices, e.g. `1,2,3,4`.
    #[arg(long, value_delimiter = ',')]
    coefficients: Option<Vec<usize>>,
    /// Extra FM coefficients tried one at a time for amplitude minimization.
    #[arg(long, value_delimiter = ',')]
    spare: Option<Vec<usize>>,
    /// Envelope switching time for AM+FM pulses.
    #[arg(long)]
    switching_time: Option<f64>,
    /// Piecewise AM sign pattern, e.g. `1,-1,1,-1,1`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    signs: Option<Vec<i8>>,
    /// `cold`, a catalog entry name or prefix, or a spec file path.
    #[arg(long, default_value = "cold")]
    start: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    starts: Option<usize>,
    /// Output spec file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Synthesis log file; written to stderr when absent.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    spec: PathBuf,
    #[command(flatten)]
    noise: NoiseFlags,
    /// Fixed tolerance instead of the printed-precision bound.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct ComposeArgs {
    spec: PathBuf,
    /// Residual tolerance the input must meet; defaults to its printed-precision bound.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    spec: PathBuf,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Dump `t, psi, phi, theta, a_x, a_y, a_z` instead of the waveform.
    #[arg(long)]
    trajectory: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Static,
    Ou,
}

#[derive(Args)]
struct SimulateArgs {
    spec: PathBuf,
    #[command(flatten)]
    noise: NoiseFlags,
    #[arg(long, value_enum, default_value = "static")]
    generator: GeneratorArg,
    /// Correlation time at the largest scale, in units of the pulse duration.
    #[arg(long, default_value_t = 10.0)]
    tau_c: f64,
    #[arg(long)]
    ensemble: Option<usize>,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.005)]
    lambda_min: f64,
    #[arg(long, default_value_t = 0.2)]
    lambda_max: f64,
    #[arg(long, default_value_t = 7)]
    points: usize,
    /// Required slope; defaults to `order + 0.7`, or `0.7` for baseline specs.
    #[arg(long)]
    min_slope: Option<f64>,
    #[arg(long)]
    max_slope: Option<f64>,
}

enum Failure {
    Usage(String),
    Residual(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::RootNotFound { .. } | Error::FailsCheck(_) | Error::FitFailure(_) => Failure::Residual(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn timestamp(cli: &Cli) -> Option<String> {
    if cli.no_timestamp {
        return None;
    }
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Some(format!("at unix time {secs}"))
}

fn read_spec(path: &Path) -> Result<SpecFile, Failure> {
    specfile::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn default_free(family: Family, order: u8, general: bool, symmetric: bool) -> Vec<usize> {
    if family != Family::Fm {
        return vec![];
    }
    let residuals = match (symmetric, order >= 2, general) {
        (false, false, _) => 5,
        (false, true, false) => 8,
        (false, true, true) => 11,
        (true, false, _) => 2,
        (true, true, false) => 4,
        (true, true, true) => 6,
    };
    if symmetric {
        (1..residuals).map(|k| 2 * k).collect()
    } else {
        (1..residuals).collect()
    }
}

fn resolve_start(start: &str, def: &SystemDef) -> Result<Option<PulseSpec>, Failure> {
    if start == "cold" {
        return Ok(None);
    }
    let path = Path::new(start);
    if path.exists() {
        return Ok(Some(read_spec(path)?.spec));
    }
    let entries = catalog::load()?;
    let compatible = |f: &SpecFile| {
        let family_ok = matches!(
            (def.family, &f.spec),
            (Family::Fm, PulseSpec::Fm(_)) | (Family::AmPiecewise, PulseSpec::PiecewiseAm(_)) | (Family::AmContinuous, PulseSpec::ContinuousAm(_))
        );
        family_ok
            && f.order == def.order
            && (f.spec.theta() - def.theta).abs() < 1e-12
            && (f.noise == NoiseKind::General) == def.noise.is_general()
            && f.bath == specfile::Bath::Classical
    };
    entries
        .into_iter()
        .find(|(n, f)| (n == start || n.starts_with(&format!("{start}-"))) && compatible(f))
        .map(|(_, f)| Some(f.spec))
        .ok_or_else(|| Failure::Usage(format!("no compatible catalog entry or file for start `{start}`")))
}

fn synthesize_cmd(cli: &Cli, cfg: &Config, a: &SynthesizeArgs) -> Outcome {
    let theta = parse_angle(&a.theta).ok_or_else(|| Failure::Usage(format!("cannot read angle `{}`", a.theta)))?;
    let family = match a.family {
        FamilyArg::AmPiecewise => Family::AmPiecewise,
        FamilyArg::AmContinuous => Family::AmContinuous,
        FamilyArg::Fm => Family::Fm,
    };
    let kind = NoiseKind::from(a.noise);
    let noise = kind.unit_model();
    let reduction = if a.symmetric { Reduction::Symmetric } else { Reduction::Full };
    let mut ansatz = Ansatz {
        free: a.coefficients.clone().unwrap_or_else(|| default_free(family, a.order, noise.is_general(), a.symmetric)),
        switching_time: a.switching_time,
        ..Ansatz::default()
    };
    if let Some(s) = &a.signs {
        ansatz.signs = s.clone();
    }
    let def = SystemDef { family, order: a.order, noise, theta, ansatz, reduction };
    let scfg = SynthesisConfig {
        solver: cfg.solver(),
        policy: cfg.condition_policy(),
        seed: a.seed.unwrap_or(cfg.synthesis.seed),
        starts: a.starts.unwrap_or(cfg.synthesis.starts),
    };
    let system = assemble_system(def.clone(), scfg.policy)?;
    let published = resolve_start(&a.start, &def)?;
    let (spec, residue, log) = if let Some(spares) = &a.spare {
        if !system.is_square() {
            return Err(Failure::Usage(format!(
                "the base ansatz has {} parameters for {} residuals; it must be square when --spare is given",
                system.dim_params(),
                system.dim_residuals()
            )));
        }
        let guess = match &published {
            Some(p) => system.params_of(p)?,
            None => synthesis::cold_starts(&system, scfg.seed, 1).remove(0),
        };
        let coefficient = |k: usize| match &published {
            Some(PulseSpec::Fm(p)) => p.coefficient(k),
            _ => 0.0,
        };
        let choices: Vec<SpareChoice> = spares
            .iter()
            .map(|&k| SpareChoice { index: k, lo: coefficient(k) - 0.5, hi: coefficient(k) + 0.5, guess: guess.clone() })
            .collect();
        let m = synthesis::minimize_fm(&def, &choices, &SpareSearch::default(), &scfg)?;
        let log: String = m
            .records
            .iter()
            .map(|r| format!("spare b{}: value {:?} amplitude {:?} solves {}\n", r.index, r.spare, r.amplitude, r.solves))
            .collect();
        (m.spec, m.residuals.residue(), log)
    } else {
        if system.dim_params() > system.dim_residuals() {
            let hint = match family {
                Family::Fm => "pass --spare to minimize the amplitude",
                _ => "use --symmetric or fewer --signs segments",
            };
            return Err(Failure::Usage(format!(
                "ansatz has {} parameters for {} residuals; {hint}",
                system.dim_params(),
                system.dim_residuals()
            )));
        }
        let starts = match &published {
            Some(p) => vec![system.params_of(p)?],
            None => synthesis::cold_starts(&system, scfg.seed, scfg.starts),
        };
        let s = synthesis::synthesize(&system, &starts, &scfg)?;
        let residue = s.residuals.residue();
        (s.spec, residue, s.log.render())
    };
    let mut file = SpecFile::new(spec, a.order, kind);
    file.name = a.name.clone();
    file.symmetric = a.symmetric;
    file.provenance = Some(format!(
        "synthesized from start `{}` with seed {} (residue {:.3e})",
        a.start, scfg.seed, residue
    ));
    let mut log = log;
    if let Some(ts) = timestamp(cli) {
        log = format!("# generated {ts}\n{log}");
    }
    match &a.log {
        Some(p) => std::fs::write(p, &log).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => eprint!("{log}"),
    }
    emit(a.out.as_deref(), &specfile::serialize(&file))?;
    let r = report::check(&file, &noise, cfg.check.tolerance, &scfg.policy)?;
    if !r.passed() {
        eprint!("{}", report::render_check(&r, None));
    }
    Ok(r.passed())
}

fn check_cmd(cli: &Cli, cfg: &Config, a: &CheckArgs) -> Outcome {
    let file = read_spec(&a.spec)?;
    let noise = a.noise.model(file.noise);
    let policy = cfg.condition_policy();
    let tol = match a.tolerance {
        Some(t) => t,
        None => {
            let floor = if file.printed_decimals.is_some() { 1e-10 } else { cfg.check.tolerance };
            report::tolerance_for(&file, &noise, &policy, floor)?
        }
    };
    let r = report::check(&file, &noise, tol, &policy)?;
    print!("{}", report::render_check(&r, timestamp(cli).as_deref()));
    Ok(r.passed())
}

fn tables_cmd(cli: &Cli, cfg: &Config) -> Outcome {
    let entries = catalog::load()?;
    let rows = report::run_tables(&entries, &cfg.condition_policy(), 1e-10)?;
    print!("{}", report::render_tables(&rows, timestamp(cli).as_deref()));
    Ok(tables_passed(&rows))
}

fn compose_cmd(cfg: &Config, a: &ComposeArgs) -> Outcome {
    let file = read_spec(&a.spec)?;
    let PulseSpec::Fm(base) = &file.spec else {
        return Err(Failure::Usage(format!("{}: composition needs an FM pulse", a.spec.display())));
    };
    let policy = cfg.condition_policy();
    let tol = match a.tolerance {
        Some(t) => t,
        None => report::tolerance_for(&file, &NoiseKind::General.unit_model(), &policy, cfg.check.tolerance)?,
    };
    let composite = synthesis::compose_xy8_replacement(base, tol, &policy)?;
    let mut out = SpecFile::new(PulseSpec::Composite(composite), 2, NoiseKind::General);
    out.name = Some(format!("{}-composite", file.label()));
    out.provenance = Some(format!("forward and time-reversed {}", file.label()));
    emit(a.out.as_deref(), &specfile::serialize(&out))?;
    Ok(true)
}

fn export_cmd(cfg: &Config, a: &ExportArgs) -> Outcome {
    let file = read_spec(&a.spec)?;
    let text = if a.trajectory {
        export::trajectory_csv(&file.spec, file.duration, a.samples, &cfg.condition_policy().propagation)?
    } else {
        export::waveform_csv(&file.spec, file.duration, a.samples)?
    };
    emit(a.out.as_deref(), &text)?;
    Ok(true)
}

fn simulate_cmd(cli: &Cli, cfg: &Config, a: &SimulateArgs) -> Outcome {
    let file = read_spec(&a.spec)?;
    let noise = a.noise.model(file.noise);
    let generator = match a.generator {
        GeneratorArg::Static => NoiseGenerator::StaticGaussian,
        GeneratorArg::Ou => NoiseGenerator::OrnsteinUhlenbeck { tau_c_at_max: a.tau_c },
    };
    let vcfg = VerifyConfig {
        ensemble: a.ensemble.unwrap_or(cfg.verify.ensemble),
        slices_per_unit: a.slices.unwrap_or(cfg.verify.slices),
        seed: a.seed.unwrap_or(cfg.verify.seed),
        ..VerifyConfig::default()
    };
    let scales = verify::geometric_scales(a.lambda_min, a.lambda_max, a.points);
    let r = verify::scaling_exponent(&file.spec, &noise, generator, &scales, &vcfg)?;
    let lo = a.min_slope.unwrap_or(if file.baseline { 0.7 } else { file.order as f64 + 0.7 });
    let hi = a.max_slope.unwrap_or(if file.baseline { 1.3 } else { f64::INFINITY });
    let ok = r.slope_within(lo, hi);
    if let Some(ts) = timestamp(cli) {
        println!("# generated {ts}");
    }
    println!("spec: {}", file.label());
    print!("{}", r.render());
    println!("expected slope in [{lo}, {hi}]: {}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn run(cli: &Cli) -> Outcome {
    let cfg = match &cli.config {
        Some(p) => Config::read(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => Config::default(),
    };
    match &cli.command {
        Command::Synthesize(a) => synthesize_cmd(cli, &cfg, a),
        Command::Check(a) => check_cmd(cli, &cfg, a),
        Command::Tables => tables_cmd(cli, &cfg),
        Command::Compose(a) => compose_cmd(&cfg, a),
        Command::Export(a) => export_cmd(&cfg, a),
        Command::Simulate(a) => simulate_cmd(cli, &cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Residual(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
