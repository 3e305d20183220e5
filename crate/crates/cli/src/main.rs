use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use kinetic_fredholm_cli::{cache_kernel, run_scenario, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Stationary Boltzmann solver and estimate-verification harness on convex
/// domains.
#[derive(Parser)]
#[command(name = "kinetic-fredholm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one verification or solve scenario and emit its reports.
    Run(RunArgs),
    /// Assemble the collision kernel table and persist it to the cache.
    CacheKernel(CacheArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario name (overrides the config key): verify-geometry,
    /// verify-collision, verify-transport, solve-linear, solve-nonlinear,
    /// regularity-report, full-suite.
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory (overrides the config key).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config key).
    #[arg(long)]
    seed: Option<u64>,
    /// Boundary-data amplitude multiplier (overrides the config key).
    #[arg(long)]
    scale: Option<f64>,
    /// Integrability exponent for the regularity report.
    #[arg(long)]
    p: Option<f64>,
    /// Generic dotted-path config overrides, e.g. --set cross_section.b0=0.25.
    #[arg(long = "set", value_name = "KEY.PATH=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct CacheArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY.PATH=VALUE")]
    set: Vec<String>,
}

fn load_config(
    config: &Option<PathBuf>,
    overrides: &[String],
) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for spec in overrides {
        cfg.apply_override(spec)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let mut cfg = load_config(&args.config, &args.set)?;
            if let Some(s) = args.scenario {
                cfg.scenario = s;
            }
            if let Some(out) = args.out {
                cfg.output_dir = out.display().to_string();
            }
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if let Some(scale) = args.scale {
                cfg.scale = scale;
            }
            if let Some(p) = args.p {
                cfg.p = p;
            }
            cfg.validate()?;
            let out_dir = PathBuf::from(&cfg.output_dir);
            run_scenario(&cfg, &out_dir)
        }
        Command::CacheKernel(args) => {
            let mut cfg = load_config(&args.config, &args.set)?;
            if let Some(out) = args.out {
                cfg.output_dir = out.display().to_string();
            }
            cfg.validate()?;
            let out_dir = PathBuf::from(&cfg.output_dir);
            cache_kernel(&cfg, &out_dir)?;
            Ok(true)
        }
    }
}
