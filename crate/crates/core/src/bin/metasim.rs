//! Scenario runner CLI.
//!
//! ```text
//! metasim run    --scenario <path> --seed <u64> --transcript <path> [--verbose]
//! metasim verify --transcript <path> --scenario <path> --seed <u64>
//! ```
//!
//! `METASIM_PROVIDER=test|default` selects the crypto provider (default:
//! `default`). Exit codes: 0 success/match, 1 scenario or file failure,
//! 2 internal invariant breach or transcript mismatch.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use metasim_core::sim::{run_scenario, verify_transcript, Scenario, Transcript};
use metasim_core::{provider_by_name, CryptoProvider};

#[derive(Parser)]
#[command(
    name = "metasim",
    about = "Deterministic multi-world identity simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its transcript.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        transcript: PathBuf,
        /// Print each transcript record as it is produced.
        #[arg(long)]
        verbose: bool,
    },
    /// Re-run a scenario and compare against a stored transcript.
    Verify {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: u64,
    },
}

fn load_provider() -> Result<Box<dyn CryptoProvider>, String> {
    let name = std::env::var("METASIM_PROVIDER").unwrap_or_else(|_| "default".to_string());
    provider_by_name(&name).ok_or(format!("unknown provider `{name}` (use test|default)"))
}

fn load_scenario(path: &Path, seed: u64) -> Result<Scenario, String> {
    let mut scenario = Scenario::load(path).map_err(|e| e.to_string())?;
    scenario.seed = seed;
    Ok(scenario)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let provider = match load_provider() {
        Ok(p) => p,
        Err(message) => {
            eprintln!("metasim: {message}");
            return ExitCode::from(1);
        }
    };

    match cli.command {
        Command::Run {
            scenario,
            seed,
            transcript,
            verbose,
        } => {
            let loaded = match load_scenario(&scenario, seed) {
                Ok(s) => s,
                Err(message) => {
                    eprintln!("metasim: {message}");
                    return ExitCode::from(1);
                }
            };
            let result = match run_scenario(&loaded, provider.as_ref()) {
                Ok(t) => t,
                Err(breach) => {
                    eprintln!("metasim: {breach}");
                    return ExitCode::from(2);
                }
            };
            if verbose {
                for record in &result.records {
                    println!("{}", record.to_line());
                }
            }
            if let Err(e) = std::fs::write(&transcript, result.render()) {
                eprintln!("metasim: cannot write {}: {e}", transcript.display());
                return ExitCode::from(1);
            }
            println!(
                "ran `{}` (seed {seed}, provider {}): {} records -> {}",
                loaded.name,
                provider.name(),
                result.records.len(),
                transcript.display()
            );
            ExitCode::SUCCESS
        }
        Command::Verify {
            transcript,
            scenario,
            seed,
        } => {
            let loaded = match load_scenario(&scenario, seed) {
                Ok(s) => s,
                Err(message) => {
                    eprintln!("metasim: {message}");
                    return ExitCode::from(1);
                }
            };
            let stored = match std::fs::read_to_string(&transcript) {
                Ok(text) => text,
                Err(e) => {
                    eprintln!("metasim: cannot read {}: {e}", transcript.display());
                    return ExitCode::from(1);
                }
            };
            if let Err(e) = Transcript::parse(&stored) {
                eprintln!("metasim: malformed transcript: {e}");
                return ExitCode::from(1);
            }
            match verify_transcript(&loaded, provider.as_ref(), &stored) {
                Ok(true) => {
                    println!("transcript matches ({} bytes)", stored.len());
                    ExitCode::SUCCESS
                }
                Ok(false) => {
                    eprintln!("metasim: transcript does not match a fresh run");
                    ExitCode::from(2)
                }
                Err(breach) => {
                    eprintln!("metasim: {breach}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
