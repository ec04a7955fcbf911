//! `jumpflow`: simulation, validation, convergence studies and mollifier
//! checks for jump-diffusion short-rate models with deterministic,
//! scriptable outputs.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use commands::{CmdError, MollifierArgs, EXIT_CONFIG};
use config::{RhoKind, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "jumpflow",
    version,
    about = "Euler schemes and convergence verification for jump-diffusion short-rate models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run-configuration document (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's output_dir, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides config and JUMPFLOW_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the config's path count.
    #[arg(long)]
    paths: Option<usize>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the growth and modulus conditions of the configured model.
    Validate(RunArgs),
    /// Simulate paths and write summary statistics.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Also write every path to paths.csv (large).
        #[arg(long)]
        dump_paths: bool,
        /// Also write the driving noise to noise.csv (large).
        #[arg(long)]
        dump_noise: bool,
    },
    /// Coupled-mesh strong-convergence study.
    Converge(RunArgs),
    /// Construct and verify the smooth |z| approximation.
    #[command(visible_alias = "mollifier-check")]
    Mollifier {
        /// Modulus family.
        #[arg(long, value_enum, default_value = "sqrt")]
        family: RhoKind,
        /// ρ scale (sqrt family only).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Number of levels K.
        #[arg(long, short = 'k')]
        levels: usize,
        /// z/ζ grid points over [-range, range].
        #[arg(long, default_value_t = 1000)]
        grid_points: usize,
        /// h grid points over [-range, range].
        #[arg(long, default_value_t = 200)]
        h_points: usize,
        #[arg(long, default_value_t = 2.0)]
        range: f64,
        /// Divergence-proxy threshold.
        #[arg(long, default_value_t = 1e3)]
        divergence_threshold: f64,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn thread_count(flag: Option<usize>, config: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("JUMPFLOW_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .or(config)
}

fn load_config(args: &RunArgs) -> Result<RunConfig, CmdError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CmdError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(paths) = args.paths {
        cfg.n_paths = paths;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(args: &RunArgs, cfg: &RunConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn in_pool<F: FnOnce() -> commands::CmdResult + Send>(
    threads: Option<usize>,
    f: F,
) -> commands::CmdResult {
    match threads {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CmdError::Config(format!("thread pool: {e}")))?;
            pool.install(f)
        }
    }
}

fn dispatch(cli: Cli) -> commands::CmdResult {
    match cli.command {
        Command::Validate(run) => {
            let cfg = load_config(&run)?;
            let out = out_dir(&run, &cfg);
            in_pool(thread_count(run.threads, cfg.threads), || {
                commands::cmd_validate(&cfg, &out)
            })
        }
        Command::Simulate {
            run,
            dump_paths,
            dump_noise,
        } => {
            let cfg = load_config(&run)?;
            let out = out_dir(&run, &cfg);
            in_pool(thread_count(run.threads, cfg.threads), || {
                commands::cmd_simulate(&cfg, &out, dump_paths, dump_noise)
            })
        }
        Command::Converge(run) => {
            let cfg = load_config(&run)?;
            let out = out_dir(&run, &cfg);
            in_pool(thread_count(run.threads, cfg.threads), || {
                commands::cmd_converge(&cfg, &out)
            })
        }
        Command::Mollifier {
            family,
            scale,
            levels,
            grid_points,
            h_points,
            range,
            divergence_threshold,
            out,
        } => {
            let args = MollifierArgs {
                family: family.family(scale),
                levels,
                grid_points,
                h_points,
                range,
                divergence_threshold,
            };
            commands::cmd_mollifier(&args, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with code 0 internally.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_CONFIG);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
