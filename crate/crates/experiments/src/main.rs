use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use torus_experiments::{emit, run, ConfigOverrides, Experiment, ExperimentConfig, ExperimentError, OutputFormat};

/// Numerical experiments for periodic pseudo-differential operators.
///
/// Exit status: 0 when every asserted row passes, 1 when one fails, 2 on
/// configuration errors or a refused precondition.
#[derive(Parser)]
#[command(name = "torus-pdo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annulus integrals of kernel differences and their slopes in j and sigma.
    KernelDecay(Common),
    /// H^p -> L^p growth ratios across an order sweep.
    Threshold(Common),
    /// Atom images as molecules, decomposed back into atoms (gated on T*(1) = 0).
    HpPipeline(Common),
    /// (Tf)^# against M_s f, BMO ratios and the D-condition audit.
    SharpMax(Common),
    /// Sampled symbol-class membership.
    VerifySymbol(Common),
    /// One atom image and its full atomic decomposition.
    MoleculeDecompose(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML file with configuration overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = OutputFormat::Csv, value_parser = parse_format)]
    format: OutputFormat,
    /// Report every row without asserting tolerances.
    #[arg(long)]
    explore: bool,
    #[arg(long)]
    n: Option<usize>,
    /// Grid points per axis.
    #[arg(long = "grid", short = 'G')]
    grid_points: Option<usize>,
    /// Frequency box radius.
    #[arg(long, short = 'N')]
    band: Option<usize>,
    /// Symbol spec, e.g. `multiplier:m=-1` or `exotic:m=-1,rho=0.5`.
    #[arg(long)]
    symbol: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    orders: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    bounded_order: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    control_order: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    atoms: Option<usize>,
    #[arg(long)]
    functions: Option<usize>,
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    centers: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: ExperimentError| e.to_string())
}

impl Common {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            n: self.n,
            grid_points: self.grid_points,
            band: self.band,
            symbol: self.symbol.clone(),
            rho: self.rho,
            delta: self.delta,
            beta: self.beta,
            p: self.p,
            orders: self.orders.clone(),
            bounded_order: self.bounded_order,
            control_order: self.control_order,
            sigmas: self.sigmas.clone(),
            gammas: self.gammas.clone(),
            epsilon: self.epsilon,
            atoms: self.atoms,
            functions: self.functions,
            probes: self.probes,
            centers: self.centers,
            r: self.r,
            seed: self.seed,
            assert: self.explore.then_some(false),
            ..Default::default()
        }
    }
}

fn execute(experiment: Experiment, args: &Common) -> Result<i32, ExperimentError> {
    let file = args.config.as_deref().map(ConfigOverrides::load).transpose()?;
    let cfg = ExperimentConfig::resolve(experiment, file.as_ref(), &args.overrides())?;
    let result = run(&cfg)?;
    emit(&result, args.format, args.out.as_deref())?;
    for note in &result.notes {
        eprintln!("note: {note}");
    }
    for row in result.failures() {
        eprintln!(
            "FAIL {} sigma={} {} = {} > {}",
            row.symbol,
            row.sigma.map_or("-".into(), |s| s.to_string()),
            row.statistic,
            row.value,
            row.tolerance.unwrap_or(f64::NAN)
        );
    }
    eprintln!(
        "{}: {} rows, {} asserted, wall time {:.2?}",
        experiment,
        result.rows.len(),
        result.asserted().count(),
        result.metadata.wall_time
    );
    Ok(result.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::KernelDecay(a) => (Experiment::KernelDecay, a),
        Command::Threshold(a) => (Experiment::Threshold, a),
        Command::HpPipeline(a) => (Experiment::HpPipeline, a),
        Command::SharpMax(a) => (Experiment::SharpMax, a),
        Command::VerifySymbol(a) => (Experiment::VerifySymbol, a),
        Command::MoleculeDecompose(a) => (Experiment::MoleculeDecompose, a),
    };
    let code = match execute(experiment, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
