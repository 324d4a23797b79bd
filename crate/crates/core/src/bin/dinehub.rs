use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dinehub::pipeline::{run_all, run_analyze, run_detect, run_evaluate, run_synth, Overrides, PipelineConfig};
use dinehub::Error;

#[derive(Parser)]
#[command(name = "dinehub", version, about = "Dining-hub and mobility detection from delivery order logs")]
struct Cli {
    /// Pipeline config (JSON). Without it every parameter takes its default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the scenario and K-means seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic order log, ground truth and city context.
    Synth,
    /// Detect hubs, labels, moves and user groups.
    Detect,
    /// Compute the mobility reports from detection outputs.
    Analyze,
    /// Score detection outputs against ground truth.
    Evaluate {
        #[arg(long)]
        match_radius_km: Option<f64>,
        #[arg(long)]
        month_slack: Option<u32>,
    },
    /// synth, detect, analyze and evaluate in sequence.
    RunAll,
}

fn run(cli: Cli) -> Result<Vec<String>, Error> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply(&Overrides { workers: cli.workers, seed: cli.seed, out_dir: cli.out_dir });
    if let Command::Evaluate { match_radius_km, month_slack } = &cli.command {
        cfg.evaluation.match_radius_km = match_radius_km.unwrap_or(cfg.evaluation.match_radius_km);
        cfg.evaluation.month_slack = month_slack.unwrap_or(cfg.evaluation.month_slack);
    }
    cfg.validate()?;
    let lines = match cli.command {
        Command::Synth => vec![run_synth(&cfg)?],
        Command::Detect => vec![run_detect(&cfg)?],
        Command::Analyze => vec![run_analyze(&cfg)?],
        Command::Evaluate { .. } => vec![run_evaluate(&cfg)?.0],
        Command::RunAll => run_all(&cfg)?,
    };
    Ok(lines.into_iter().map(|l| l.to_string()).collect())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
