use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moderator::commands;
use moderator::{CliResult, ExperimentConfig, Mode, Overrides};

/// Learn hidden utilities from compliance feedback and issue low-regret
/// correlated recommendations.
#[derive(Debug, Parser)]
#[command(name = "moderator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover every agent's utilities up to positive scaling from
    /// quantal-response feedback.
    LearnQr(Overrides),
    /// Run the cutting-plane recommendation loop and record regret.
    Recommend(Overrides),
    /// Test positive affine equivalence of two games (and their
    /// best-response indistinguishability).
    CheckEquiv(Overrides),
    /// Test whether two games induce identical best-response sets.
    CheckBrIndist(Overrides),
    /// Play a fixed mechanism against simulated agents.
    Simulate(Overrides),
    /// Write a game file from the configured source.
    GenGame(Overrides),
}

fn run(cli: Cli) -> CliResult<()> {
    let (mode, overrides) = match &cli.command {
        Command::LearnQr(o) => (Mode::LearnQr, o),
        Command::Recommend(o) => (Mode::Recommend, o),
        Command::CheckEquiv(o) => (Mode::CheckEquiv, o),
        Command::CheckBrIndist(o) => (Mode::CheckBrIndist, o),
        Command::Simulate(o) => (Mode::Simulate, o),
        Command::GenGame(o) => (Mode::GenGame, o),
    };
    let cfg = ExperimentConfig::resolve(mode, overrides)?;
    let artifacts = match mode {
        Mode::LearnQr => commands::learn_qr(&cfg)?,
        Mode::Recommend => commands::recommend(&cfg)?,
        Mode::CheckEquiv => commands::check_equiv(&cfg)?,
        Mode::CheckBrIndist => commands::check_br_indist(&cfg)?,
        Mode::Simulate => commands::simulate(&cfg)?,
        Mode::GenGame => {
            let (path, text) = commands::gen_game(&cfg)?;
            print!("{text}");
            eprintln!("wrote {}", path.display());
            return Ok(());
        }
    };
    let mut shown = artifacts.summary.clone();
    if let Some(obj) = shown.as_object_mut() {
        obj.remove("config");
        obj.remove("replicates");
    }
    println!(
        "{}",
        moderator::json::to_string(&shown).map_err(anyhow::Error::from)?
    );
    eprintln!("wrote {}", artifacts.summary_path.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
