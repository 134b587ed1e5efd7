//! Commands, outcomes and the append-only NDJSON event journal.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::economy::{Collection, EconomicParams, Payout, ReputationRecord};
use crate::governance::{ConsensusResult, Dispute, ValidationBallot, Verdict};
use crate::model::{PromptDocument, UsageSummary};
use crate::node::NodeConfig;
use crate::primitives::{Address, Amount, UnixTime};
use crate::registry::{PromptId, PromptRecord};
use crate::store::{Cid, GcReport, PinReceipt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenesisAllocation {
    pub address: Address,
    pub balance: Amount,
    /// Pre-existing history, so that a fresh network has eligible validators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reputation: Option<ReputationRecord>,
}

/// Every state change the node accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Command {
    Genesis {
        config: NodeConfig,
        allocations: Vec<GenesisAllocation>,
        pool: Amount,
    },
    StoreDocument {
        document: PromptDocument,
    },
    Pin {
        cid: Cid,
        replication: u32,
    },
    Unpin {
        cid: Cid,
    },
    CollectGarbage,
    Register {
        cid: Cid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parent: Option<PromptId>,
    },
    SubmitValidation {
        prompt_id: PromptId,
        score: u8,
        stake: Amount,
        #[serde(default)]
        expertise: Vec<String>,
        #[serde(default)]
        comment: String,
    },
    Finalize {
        prompt_id: PromptId,
    },
    OpenDispute {
        prompt_id: PromptId,
        violation: String,
    },
    CastDisputeVote {
        dispute_id: u64,
        verdict: Verdict,
    },
    ResolveDispute {
        dispute_id: u64,
        #[serde(default)]
        votes: Vec<(Address, Verdict)>,
    },
    Deprecate {
        prompt_id: PromptId,
    },
    RecordUsage {
        prompt_id: PromptId,
    },
    CreateCollection {
        name: String,
        prompts: Vec<PromptId>,
    },
    UpdateCollection {
        collection_id: u64,
        #[serde(default)]
        add: Vec<PromptId>,
        #[serde(default)]
        remove: Vec<PromptId>,
    },
    CloseEpoch,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Genesis { .. } => "genesis",
            Command::StoreDocument { .. } => "store_document",
            Command::Pin { .. } => "pin",
            Command::Unpin { .. } => "unpin",
            Command::CollectGarbage => "collect_garbage",
            Command::Register { .. } => "register",
            Command::SubmitValidation { .. } => "submit_validation",
            Command::Finalize { .. } => "finalize",
            Command::OpenDispute { .. } => "open_dispute",
            Command::CastDisputeVote { .. } => "cast_dispute_vote",
            Command::ResolveDispute { .. } => "resolve_dispute",
            Command::Deprecate { .. } => "deprecate",
            Command::RecordUsage { .. } => "record_usage",
            Command::CreateCollection { .. } => "create_collection",
            Command::UpdateCollection { .. } => "update_collection",
            Command::CloseEpoch => "close_epoch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinFee {
    pub owner: Address,
    pub cid: Cid,
    pub amount: Amount,
    /// The owner could not pay and the pin fell back to a single replica.
    pub downgraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: u64,
    pub closed_at: UnixTime,
    pub payouts: Vec<Payout>,
    pub pin_fees: Vec<PinFee>,
    pub total_paid: Amount,
    pub velocity: f64,
    pub usage: u64,
    pub params: EconomicParams,
    pub pool_after: Amount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Genesis { total_supply: Amount },
    Stored { cid: Cid },
    Pinned(PinReceipt),
    Unpinned { cid: Cid },
    Collected(GcReport),
    Registered(PromptRecord),
    Ballot(ValidationBallot),
    Finalized(ConsensusResult),
    Dispute(Dispute),
    Deprecated(PromptRecord),
    Usage(UsageSummary),
    Collection(Collection),
    Epoch(EpochReport),
}

/// Entities an event touched, used for cache invalidation and subscriptions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subjects {
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub prompts: BTreeSet<PromptId>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub addresses: BTreeSet<Address>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub domains: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub collections: BTreeSet<u64>,
    /// Touches aggregate state such as the pool or parameters.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub global: bool,
}

/// One journaled command with the outcome it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at: UnixTime,
    #[serde(flatten)]
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caller: Option<Address>,
    pub subjects: Subjects,
    pub outcome: Value,
}

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal i/o: {0}")]
    Io(#[from] io::Error),
    #[error("journal line {line}: {message}")]
    Malformed { line: usize, message: String },
}

pub fn write_event(out: &mut dyn Write, event: &Event) -> io::Result<()> {
    serde_json::to_writer(&mut *out, event).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

pub fn write_ndjson(out: &mut dyn Write, events: &[Event]) -> io::Result<()> {
    for e in events {
        write_event(out, e)?;
    }
    out.flush()
}

/// Reads an NDJSON journal, skipping blank lines.
pub fn read_ndjson(input: impl BufRead) -> Result<Vec<Event>, JournalError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| JournalError::Malformed { line: i + 1, message: e.to_string() })?;
        events.push(event);
    }
    Ok(events)
}
