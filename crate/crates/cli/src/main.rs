use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use csf_core::run::{check_config, exit_code_for_error, run_experiment, EXIT_CONFIG};
use csf_core::RunConfig;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "csf", version, about = "Curve shortening flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output.directory` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a configuration without running it.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every configuration matching a glob, each into `<out>/<file stem>`.
    Sweep {
        #[arg(long)]
        configs: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("CSF_LOG", "error");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
}

fn load(path: &Path) -> Result<RunConfig, i32> {
    RunConfig::from_path(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        EXIT_CONFIG
    })
}

fn run_one(config_path: &Path, out: Option<&Path>) -> i32 {
    let config = match load(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let out = match out.map(Path::to_path_buf).or_else(|| config.output.directory.as_ref().map(PathBuf::from)) {
        Some(o) => o,
        None => {
            eprintln!("no output directory: pass --out or set output.directory");
            return EXIT_CONFIG;
        }
    };
    run_experiment(&config, &out)
}

fn sweep(pattern: &str, out: &Path, jobs: Option<usize>) -> anyhow::Result<i32> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .with_context(|| format!("bad glob {pattern:?}"))?
        .collect::<Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        bail!("no configuration matches {pattern:?}");
    }
    let mut stems: Vec<String> = paths
        .iter()
        .map(|p| p.file_stem().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    stems.sort();
    stems.dedup();
    if stems.len() != paths.len() {
        bail!("configuration file names must be unique, their stems name the output directories");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("building the worker pool")?;
    let codes: Vec<i32> = pool.install(|| {
        paths
            .par_iter()
            .map(|p| {
                let stem = p.file_stem().unwrap_or_default();
                run_one(p, Some(&out.join(stem)))
            })
            .collect()
    });
    for (p, code) in paths.iter().zip(&codes) {
        println!("{code}\t{}", p.display());
    }
    Ok(codes.into_iter().max().unwrap_or(0))
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out } => run_one(&config, out.as_deref()),
        Command::Check { config: path } => match load(&path).map(|c| (check_config(&c), c)) {
            Ok((Ok(()), _)) => {
                println!("ok");
                0
            }
            Ok((Err(e), _)) => {
                eprintln!("{}: {e}", path.display());
                exit_code_for_error(&e)
            }
            Err(code) => code,
        },
        Command::Sweep { configs, out, jobs } => match sweep(&configs, &out, jobs) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("{e:#}");
                EXIT_CONFIG
            }
        },
    };
    ExitCode::from(code as u8)
}
