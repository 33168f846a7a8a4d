use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use objbounds::design::{generate_design, DesignName, DesignSpec, Retention};
use objbounds::io::{read_raw, Space};
use objbounds::pipeline::{run_pipeline, RunConfig, Stage};
use objbounds::{lp_support_oracle, trimmed_support, DirectionGrid, Error, GridScheme, Result, VarianceMode};

#[derive(Parser)]
#[command(name = "objbounds", version, about = "Sharp bounds for random-object outcomes under sample selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the identified set and write the region and projections.
    Estimate(RunArgs),
    /// Estimate and bootstrap a confidence region.
    Infer(RunArgs),
    /// Inference plus effect regions, effect projections and geodesics.
    Effects(RunArgs),
    /// Draw a synthetic dataset from a design.
    Simulate(SimulateArgs),
    /// Compare the trimmed-mean support function with the LP optimum.
    OracleCheck(OracleArgs),
}

#[derive(Args, Clone, Default)]
struct Shared {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    /// Bootstrap replications.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Number of grid directions before axes are appended.
    #[arg(long)]
    directions: Option<usize>,
    /// equal-angle, fibonacci or gaussian.
    #[arg(long)]
    scheme: Option<String>,
    /// compositional, compositional-zeros, distribution, interval, network, spd or scalar.
    #[arg(long)]
    space: Option<String>,
    /// Comma-separated evaluation probabilities for distributional outcomes.
    #[arg(long, value_delimiter = ',')]
    eval_points: Option<Vec<f64>>,
    /// Contamination level for the contaminated-data model.
    #[arg(long)]
    lambda: Option<f64>,
    /// Name of the trailing covariate column.
    #[arg(long)]
    covariate: Option<String>,
    /// bootstrap or analytic-plugin.
    #[arg(long)]
    variance_mode: Option<String>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Input CSV in the schema of the chosen space.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct SimulateArgs {
    /// atus-like, sleep-like or custom.
    #[arg(long)]
    design: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Treated-arm retention P(S=1|D=1).
    #[arg(long)]
    retention_treated: Option<f64>,
    /// Control-arm retention P(S=1|D=0).
    #[arg(long)]
    retention_control: Option<f64>,
    /// Output CSV path; defaults to data.csv in the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct OracleArgs {
    /// Dataset to check; random instances are used when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Random instances when no dataset is given.
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[command(flatten)]
    shared: Shared,
}

/// Run configuration and optional `[design]` table from a TOML file.
fn load_config(path: Option<&Path>) -> Result<(RunConfig, Option<DesignSpec>)> {
    let Some(path) = path else {
        return Ok((RunConfig::default(), None));
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let design = match table.remove("design") {
        Some(v) => Some(v.try_into::<DesignSpec>().map_err(|e| Error::Config(format!("[design]: {e}")))?),
        None => None,
    };
    let config = toml::Value::Table(table).try_into::<RunConfig>().map_err(|e| Error::Config(e.to_string()))?;
    Ok((config, design))
}

fn apply_flags(config: &mut RunConfig, flags: &Shared) -> Result<()> {
    if let Some(v) = flags.seed {
        config.seed = v;
    }
    if let Some(v) = flags.alpha {
        config.alpha = v;
    }
    if let Some(v) = flags.bootstrap {
        config.bootstrap = v;
    }
    if let Some(v) = flags.directions {
        config.directions = v;
    }
    if let Some(v) = &flags.scheme {
        config.scheme = Some(v.parse::<GridScheme>()?);
    }
    if let Some(v) = &flags.space {
        config.space = v.parse::<Space>()?;
    }
    if let Some(v) = &flags.eval_points {
        config.eval_grid = v.clone();
    }
    if let Some(v) = flags.lambda {
        config.lambda = Some(v);
    }
    if let Some(v) = &flags.covariate {
        config.covariate = Some(v.clone());
    }
    if let Some(v) = &flags.variance_mode {
        config.variance_mode = v.parse::<VarianceMode>()?;
    }
    config.validate()
}

fn init_threads(flags: &Shared) -> Result<()> {
    if let Some(n) = flags.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run_stage(args: &RunArgs, stage: Stage) -> Result<()> {
    init_threads(&args.shared)?;
    let (mut config, _) = load_config(args.shared.config.as_deref())?;
    apply_flags(&mut config, &args.shared)?;
    let raw = read_raw(&args.data, config.space, config.covariate.as_deref())?;
    info!("read {} units from {}", raw.units.len(), args.data.display());
    let out = run_pipeline(&config, &raw, &args.shared.out_dir, stage)?;
    for f in &out.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    init_threads(&args.shared)?;
    let (mut config, design) = load_config(args.shared.config.as_deref())?;
    apply_flags(&mut config, &args.shared)?;
    let name = match &args.design {
        Some(d) => Some(d.parse::<DesignName>()?),
        None => None,
    };
    let mut spec = match (design, name) {
        (Some(d), None) => d,
        (Some(d), Some(n)) if d.name == n => d,
        (_, n) => DesignSpec::preset(n.unwrap_or(DesignName::AtusLike)),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    spec.retention = Retention {
        treated: args.retention_treated.unwrap_or(spec.retention.treated),
        control: args.retention_control.unwrap_or(spec.retention.control),
    };
    let raw = generate_design(&spec, config.seed)?;
    let path = match &args.output {
        Some(p) => p.clone(),
        None => {
            std::fs::create_dir_all(&args.shared.out_dir)?;
            args.shared.out_dir.join("data.csv")
        }
    };
    raw.write(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn oracle_check(args: &OracleArgs) -> Result<()> {
    init_threads(&args.shared)?;
    let (mut config, _) = load_config(args.shared.config.as_deref())?;
    apply_flags(&mut config, &args.shared)?;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut check = |data: &objbounds::EmbeddedDataset, grid: &DirectionGrid, p: objbounds::TrimFraction| -> Result<()> {
        for u in grid.directions() {
            let a = trimmed_support(data, u, p)?;
            let b = lp_support_oracle(data, u, p)?;
            worst = worst.max((a - b).abs());
            checked += 1;
        }
        Ok(())
    };
    match &args.data {
        Some(path) => {
            let raw = read_raw(path, config.space, config.covariate.as_deref())?;
            let data = raw.embed(&config.embedding()?)?;
            let grid = config.grid(data.dim())?;
            check(&data, &grid, objbounds::estimate_p(&data)?)?;
        }
        None => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
            for _ in 0..args.instances {
                let d = rng.random_range(1..=3);
                let n = rng.random_range(5..=200);
                let p = [0.3, 0.5, 0.9, 1.0][rng.random_range(0..4)];
                let units = (0..n)
                    .map(|i| {
                        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
                        objbounds::Unit::new(format!("{i}"), true, Some(y))
                    })
                    .collect();
                let data = objbounds::EmbeddedDataset::new(units, d)?;
                let grid = DirectionGrid::new(d, GridScheme::auto(d), 24.max(2 * d), config.seed)?;
                check(&data, &grid, objbounds::TrimFraction::new(p)?)?;
            }
        }
    }
    println!("checked {checked} support values; largest discrepancy {worst:e}");
    if worst > args.tolerance {
        return Err(Error::Numerical(format!(
            "oracle discrepancy {worst:e} exceeds tolerance {:e}",
            args.tolerance
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => run_stage(a, Stage::Estimate),
        Command::Infer(a) => run_stage(a, Stage::Infer),
        Command::Effects(a) => run_stage(a, Stage::Effects),
        Command::Simulate(a) => simulate(a),
        Command::OracleCheck(a) => oracle_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
