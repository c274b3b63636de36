//! `apsk64`: run the experiment configs in `experiments/`.

use std::path::PathBuf;
use std::process::ExitCode;

use apsk::experiment::{exit_code, run, Command};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "apsk64",
    version,
    about = "64-APSK constellation and mapping experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Neighbour distortion tables of one or more mappings.
    AnalyzeMapping(Common),
    /// Monte Carlo MSE over an SNR grid.
    SweepSnr(Common),
    /// Genetic optimization of ring radii and symbol angles.
    Optimize(Common),
    /// Send a grey-level image through the channel and score it.
    TransmitImage(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed given in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::AnalyzeMapping(a) => (Command::AnalyzeMapping, a),
        Cmd::SweepSnr(a) => (Command::SweepSnr, a),
        Cmd::Optimize(a) => (Command::Optimize, a),
        Cmd::TransmitImage(a) => (Command::TransmitImage, a),
    };
    match run(command, &args.config, args.seed, &args.out) {
        Ok(output) => {
            print!("{}", output.summary);
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("apsk64 {}: {e}", command.name());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
