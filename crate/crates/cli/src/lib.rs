//! Library side of the `node` binary, so the commands can be tested without
//! spawning processes.

pub mod serve;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use promptchain_core::api::{AuthChallenge, Keypair};
use promptchain_core::journal::{read_ndjson, write_ndjson, JournalError};
use promptchain_core::node::{Node, ReplayError, StorageKind};
use promptchain_core::sim::{sybil_experiment, ScenarioConfig, ScenarioMetrics, SimError, Simulation};
use promptchain_core::Amount;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("replay failed: {0}")]
    Replay(#[from] ReplayError),
    #[error("bad argument: {0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

pub fn read_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(ScenarioConfig::from_json(&text)?)
}

pub fn read_journal(path: &Path) -> Result<Vec<promptchain_core::journal::Event>, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(read_ndjson(BufReader::new(file))?)
}

/// Runs a scenario and writes `metrics.json`, `metrics.csv` and
/// `journal.ndjson` into `out`.
pub fn run(scenario: &Path, out: &Path) -> Result<ScenarioMetrics, CliError> {
    let config = read_scenario(scenario)?;
    let outcome = Simulation::new(config)?.run();
    fs::create_dir_all(out).map_err(io_err(out))?;

    let path = out.join("metrics.json");
    let json = serde_json::to_vec_pretty(&outcome.metrics).expect("metrics serialize");
    fs::write(&path, json).map_err(io_err(&path))?;
    let path = out.join("metrics.csv");
    fs::write(&path, outcome.metrics.to_csv()).map_err(io_err(&path))?;
    let path = out.join("journal.ndjson");
    let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    write_ndjson(&mut w, outcome.journal()).map_err(io_err(&path))?;
    Ok(outcome.metrics)
}

/// CSV comparison of attacker and honest profit for each identity count.
pub fn sybil(scenario: &Path, ks: &[usize]) -> Result<String, CliError> {
    let config = read_scenario(scenario)?;
    Ok(sybil_experiment(&config, ks)?.to_csv())
}

pub fn parse_ks(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|k| k.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("not an identity count: {k:?}"))))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplaySummary {
    pub events: usize,
    pub epoch: u64,
    pub prompts: usize,
    pub state_digest: String,
    pub total_supply: Amount,
    pub pool: Amount,
    pub conserved: bool,
    pub violations: Vec<String>,
}

impl ReplaySummary {
    pub fn ok(&self) -> bool {
        self.conserved && self.violations.is_empty()
    }
}

pub fn replay(journal: &Path) -> Result<ReplaySummary, CliError> {
    let events = read_journal(journal)?;
    let node = Node::replay(&events, StorageKind::Memory)?;
    Ok(ReplaySummary {
        events: events.len(),
        epoch: node.epoch(),
        prompts: node.registry().len(),
        state_digest: node.state_digest(),
        total_supply: node.ledger().total_supply(),
        pool: node.ledger().pool(),
        conserved: node.ledger().is_conserved(),
        violations: node.check_invariants(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeyInfo {
    pub secret: String,
    pub public_key: String,
    pub address: String,
}

pub fn keygen() -> KeyInfo {
    key_info(&Keypair::generate(&mut rand::rng()))
}

fn key_info(k: &Keypair) -> KeyInfo {
    KeyInfo { secret: hex::encode(k.secret()), public_key: hex::encode(k.public_key()), address: k.address().to_string() }
}

fn parse_secret(secret: &str) -> Result<Keypair, CliError> {
    let bytes: [u8; 32] = hex::decode(secret.trim())
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| CliError::Usage("secret must be 64 hex characters".into()))?;
    Ok(Keypair::from_secret(bytes))
}

/// The body for `POST /auth/verify` answering `challenge`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignedChallenge {
    pub nonce: String,
    pub public_key: String,
    pub signature: String,
}

pub fn sign(secret: &str, challenge: impl Read) -> Result<SignedChallenge, CliError> {
    let key = parse_secret(secret)?;
    let challenge: AuthChallenge = serde_json::from_reader(challenge).map_err(|e| CliError::Usage(format!("challenge: {e}")))?;
    if challenge.address != key.address() {
        return Err(CliError::Usage(format!("challenge is for {}, key owns {}", challenge.address, key.address())));
    }
    Ok(SignedChallenge {
        nonce: hex::encode(challenge.nonce),
        public_key: hex::encode(key.public_key()),
        signature: hex::encode(key.sign(&challenge.message())),
    })
}

pub fn print_json(out: &mut impl Write, value: &impl Serialize) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}
