use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use echochain::experiments::{run_scenario, write_outputs, ExperimentConfig, Scenario};

/// Run an echo-chain scenario and write trace.csv, manifest.json and report.json.
#[derive(Debug, Parser)]
#[command(name = "echochain", version)]
struct Args {
    /// single_chain, sweep, blowup, stability or oracle_check
    scenario: Scenario,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `outputs` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<bool> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.scenario = Some(args.scenario);
    let out = args
        .out
        .or_else(|| cfg.outputs.clone())
        .context("no output directory: pass --out or set outputs in the config")?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let outcome = pool.install(|| run_scenario(args.scenario, &cfg))?;
    write_outputs(&out, &cfg, &outcome)?;
    println!(
        "{} {}: {}",
        args.scenario,
        if outcome.passed { "PASS" } else { "FAIL" },
        outcome.verdicts
    );
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
