//! `riscov`: run coverage experiments from spec files and check scenarios.

mod run;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{ensure, Context, Result};
use clap::{Parser, Subcommand};
use riscov_core::channel::link_stats;
use riscov_core::scenario::{load_scenario, parse_scenario, scenario_to_string};

use crate::spec::ExperimentSpec;

#[derive(Parser)]
#[command(name = "riscov", version, about = "Coverage and rate analysis of RIS-assisted links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the spec's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the spec's Monte Carlo trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a spec file and write its CSV.
    Run { spec: PathBuf },
    /// Parse a scenario file and print its derived link statistics.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building the thread pool")?;
    }
    match &cli.command {
        Command::Run { spec } => run_spec(cli, spec),
        Command::Validate { scenario } => validate(scenario),
    }
}

fn run_spec(cli: &Cli, path: &Path) -> Result<()> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if cli.trials.is_some() {
        spec.trials = cli.trials;
    }
    spec.validate().with_context(|| format!("invalid spec {}", path.display()))?;
    let csv = run::run(&spec).with_context(|| format!("running {}", path.display()))?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let target = cli.out.join(&spec.output);
    std::fs::write(&target, csv).with_context(|| format!("writing {}", target.display()))?;
    println!("{}", target.display());
    Ok(())
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn validate(path: &Path) -> Result<()> {
    let cfg = load_scenario(path).with_context(|| format!("{}", path.display()))?;
    let text = scenario_to_string(&cfg);
    ensure!(parse_scenario(&text)? == cfg, "scenario does not round-trip through its text form");
    let s = link_stats(&cfg)?;
    print!("{text}");
    println!("# derived");
    println!("d_sd = {}", s.d_sd);
    println!("d_sr = {}", s.d_sr);
    println!("d_rd = {}", s.d_rd);
    for (name, v) in [
        ("beta_sd", s.beta_sd),
        ("beta_sr", s.beta_sr),
        ("beta_rd", s.beta_rd),
        ("kappa_sr", s.kappa_sr),
        ("kappa_rd", s.kappa_rd),
        ("nu", s.nu),
    ] {
        println!("{name} = {v:e} ({:.3} dB)", db(v));
    }
    println!("mu = {:e}", s.mu);
    println!("kappa_tilde = {}", s.kappa_tilde);
    println!("kappa_hat = {}", s.kappa_hat);
    Ok(())
}
