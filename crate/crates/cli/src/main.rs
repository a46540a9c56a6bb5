//! `qestlab`: seeded, reproducible experiment runs for the collisional
//! thermometer and the Λ-system gate simulator. Each run emits
//! `<name>.csv`, `<name>.summary.json` and `<name>.manifest.json`.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, ConfigError};
use experiments::{build_plan, EXPERIMENTS};
use output::{CsvWriter, RunWriter};

#[derive(Parser)]
#[command(name = "qestlab", version, about = "Quantum estimation laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master RNG seed; overrides [run] seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); overrides QESTLAB_WORKERS and [run] workers.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides [run] out.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sequential posterior for a single outcome record.
    PosteriorDemo(RunArgs),
    /// Frequentist MSE of the posterior mean versus the CRB.
    MseSweep(RunArgs),
    /// Asymptotic Bayesian risk over a coupling grid.
    CouplingSweep(RunArgs),
    /// Thermal-probe Fisher information and preparation-error plateaus.
    ProbeNoise(RunArgs),
    /// QFI / thermal-FI ratio table for the probe stream.
    QfiTable(RunArgs),
    /// Probe-probe mutual information versus neighbor gap.
    MutualInfo(RunArgs),
    /// Gate infidelity sweeps (pulse length or frequency ratio).
    GateSweep(RunArgs),
    /// Fibonacci lattice points on the Bloch sphere.
    FibonacciDump(RunArgs),
    /// Validate a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> Result<Config, anyhow::Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    Ok(Config::parse(&text)?)
}

struct RunSettings {
    seed: u64,
    workers: usize,
    out: PathBuf,
}

fn resolve_settings(cfg: &Config, args: &RunArgs) -> Result<RunSettings, anyhow::Error> {
    // read the config values unconditionally (this also marks the keys as
    // known), then let CLI flags and the environment override them
    let cfg_seed = cfg.get_u64("run", "seed")?;
    let cfg_workers = cfg.get_usize("run", "workers")?;
    let cfg_out = cfg.get_str("run", "out");
    let seed = args.seed.or(cfg_seed).unwrap_or(0);
    let workers = match args.workers {
        Some(w) => w,
        None => match std::env::var("QESTLAB_WORKERS") {
            Ok(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("QESTLAB_WORKERS = `{v}` is not a count")))?,
            Err(_) => cfg_workers.unwrap_or(0),
        },
    };
    let out = match &args.out {
        Some(o) => o.clone(),
        None => PathBuf::from(cfg_out.unwrap_or_else(|| "out".into())),
    };
    Ok(RunSettings { seed, workers, out })
}

fn run_experiment(kind: &'static str, args: &RunArgs) -> Result<(), anyhow::Error> {
    let cfg = load_config(&args.config)?;
    let settings = resolve_settings(&cfg, args)?;
    let plan = build_plan(kind, &cfg)?;
    cfg.finish()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| anyhow::anyhow!("worker pool: {e}"))?;

    let writer = RunWriter::new(
        kind,
        &settings.out,
        settings.seed,
        settings.workers,
        &cfg.raw,
    );
    let mut csv = CsvWriter::new(&plan.csv_header());
    let summary = pool.install(|| plan.run(settings.seed, &mut csv))?;
    let files = writer.finalize(&csv, &summary)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn validate(config: &PathBuf) -> Result<(), anyhow::Error> {
    let cfg = load_config(config)?;
    let kind = cfg.require_str("experiment", "kind")?;
    if !EXPERIMENTS.contains(&kind.as_str()) {
        return Err(ConfigError(format!(
            "unknown experiment kind `{kind}`; expected one of {EXPERIMENTS:?}"
        ))
        .into());
    }
    let kind_static = EXPERIMENTS.iter().find(|&&e| e == kind).unwrap();
    let plan = build_plan(kind_static, &cfg)?;
    // consume the shared [run] keys so they do not count as unknown
    let args = RunArgs {
        config: config.clone(),
        seed: None,
        workers: None,
        out: None,
    };
    let _ = resolve_settings(&cfg, &args)?;
    cfg.finish()?;
    println!("configuration valid");
    print!("{}", plan.describe());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::PosteriorDemo(a) => run_experiment("posterior-demo", a),
        Command::MseSweep(a) => run_experiment("mse-sweep", a),
        Command::CouplingSweep(a) => run_experiment("coupling-sweep", a),
        Command::ProbeNoise(a) => run_experiment("probe-noise", a),
        Command::QfiTable(a) => run_experiment("qfi-table", a),
        Command::MutualInfo(a) => run_experiment("mutual-info", a),
        Command::GateSweep(a) => run_experiment("gate-sweep", a),
        Command::FibonacciDump(a) => run_experiment("fibonacci-dump", a),
        Command::Validate { config } => validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
