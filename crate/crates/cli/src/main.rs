use std::io::{self, Read};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use promptchain_cli::{keygen, parse_ks, print_json, replay, run, serve, sign, sybil};
use promptchain_core::Address;

#[derive(Parser)]
#[command(name = "node", version, about = "Prompt registry node, simulator and API server")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write metrics and the journal to a directory.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare attacker profit across identity counts; prints CSV.
    Sybil {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "1,2,4")]
        k: String,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the REST API over the journal kept in a state directory.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        state: PathBuf,
        /// Genesis for a state directory without a journal.
        #[arg(long)]
        genesis: Option<PathBuf>,
        /// Address allowed to close epochs.
        #[arg(long)]
        operator: Option<Address>,
    },
    /// Rebuild state from a journal and check its invariants.
    Replay {
        #[arg(long)]
        journal: PathBuf,
    },
    /// Print a fresh Ed25519 key pair and its address.
    Keygen,
    /// Sign an auth challenge read from a file or `-` for stdin.
    Sign {
        #[arg(long)]
        secret: String,
        #[arg(long, default_value = "-")]
        challenge: PathBuf,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("invariant violation");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Ok(false) means the command ran but found an invariant violation.
fn execute(cli: Cli) -> anyhow::Result<bool> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Cmd::Run { scenario, out } => {
            let metrics = run(&scenario, &out)?;
            eprintln!("{} epochs, {} events, digest {}", metrics.epochs.len(), metrics.events, metrics.state_digest);
            Ok(metrics.invariants_hold())
        }
        Cmd::Sybil { scenario, k, out } => {
            let csv = sybil(&scenario, &parse_ks(&k)?)?;
            match out {
                Some(path) => std::fs::write(&path, csv).with_context(|| path.display().to_string())?,
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Cmd::Serve { port, state, genesis, operator } => {
            let service = serve::open_service(&state, genesis.as_deref(), operator)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve::serve(service, port))?;
            Ok(true)
        }
        Cmd::Replay { journal } => {
            let summary = replay(&journal)?;
            print_json(&mut stdout, &summary)?;
            Ok(summary.ok())
        }
        Cmd::Keygen => {
            print_json(&mut stdout, &keygen())?;
            Ok(true)
        }
        Cmd::Sign { secret, challenge } => {
            let mut text = Vec::new();
            if challenge.as_os_str() == "-" {
                io::stdin().read_to_end(&mut text)?;
            } else {
                text = std::fs::read(&challenge).with_context(|| challenge.display().to_string())?;
            }
            print_json(&mut stdout, &sign(&secret, text.as_slice())?)?;
            Ok(true)
        }
    }
}
