use anyhow::{bail, Result};
use clap::Parser;
use fluctlab_cli::config::{Experiment, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run a fluctlab experiment. Flags override the config file.
#[derive(Parser, Debug)]
#[command(name = "fluctlab", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    match cfg.experiment {
        Some(e) if e != cli.experiment => {
            bail!("config is for `{}` but `{}` was requested", e.name(), cli.experiment.name())
        }
        _ => cfg.experiment = Some(cli.experiment),
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let res = fluctlab_cli::run(&cfg)?;
    for c in &res.outcome.checks {
        println!("{} {} = {:.6e} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    println!("wrote {}", res.dir.display());
    Ok(res.outcome.pass())
}
