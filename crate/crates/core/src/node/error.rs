use std::fmt;

use thiserror::Error;

use crate::economy::LedgerError;
use crate::model::SchemaReport;
use crate::primitives::{Address, Amount, UnixTime};
use crate::registry::{LifecycleState, PromptId};
use crate::store::{Cid, StoreError};

/// What a caller was trying to pay for when a balance check failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    RegisterPrompt,
    SubmitValidation,
    ReportIssue,
    UsePrompt,
    CreateCollection,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::RegisterPrompt => "register a prompt",
            Action::SubmitValidation => "submit a validation",
            Action::ReportIssue => "report an issue",
            Action::UsePrompt => "use a prompt",
            Action::CreateCollection => "create a collection",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NodeError {
    #[error("genesis has not been applied")]
    GenesisRequired,
    #[error("genesis has already been applied")]
    GenesisRepeated,
    #[error("time went backwards: {at} is before {last}")]
    TimeWentBackwards { at: UnixTime, last: UnixTime },
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("You need at least {required} PCT tokens to {action}. Your current balance is {current} PCT.")]
    InsufficientBalance { action: Action, required: Amount, current: Amount },
    #[error("insufficient reputation: {current:.3} is below the required {required:.3}")]
    InsufficientReputation { required: f64, current: f64 },
    #[error("voter {voter} has reputation {current:.3}, below the dispute threshold {required:.3}")]
    InsufficientVoterReputation { voter: Address, required: f64, current: f64 },
    #[error("stake of {offered} PCT is below the minimum of {required} PCT")]
    InsufficientStake { required: Amount, offered: Amount },
    #[error("{validator} already validated {prompt_id}")]
    AlreadyValidated { validator: Address, prompt_id: PromptId },
    #[error("{voter} already voted on dispute {dispute_id}")]
    AlreadyVoted { voter: Address, dispute_id: u64 },
    #[error("creators cannot validate their own prompts")]
    SelfValidation,
    #[error("score {0} is outside 0-10")]
    InvalidScore(u8),
    #[error("prompt {prompt_id} is {state}, expected {expected}")]
    WrongState { prompt_id: PromptId, state: LifecycleState, expected: &'static str },
    #[error("prompt {0} is not validated")]
    NotValidated(PromptId),
    #[error("quorum not met: {have} ballots, {need} required")]
    QuorumNotMet { have: usize, need: usize },
    #[error("prompt {0} not found")]
    PromptNotFound(PromptId),
    #[error("dispute {0} not found")]
    DisputeNotFound(u64),
    #[error("collection {0} not found")]
    CollectionNotFound(u64),
    #[error("content {0} is not in the store")]
    UnknownCid(Cid),
    #[error("document is not valid: {0}")]
    SchemaInvalid(SchemaReport),
    #[error("stored content is not a prompt document: {0}")]
    InvalidDocument(String),
    #[error("invalid parent {0}")]
    InvalidParent(PromptId),
    #[error("prompt {0} is already registered")]
    DuplicateRegistration(PromptId),
    #[error("dispute {0} is already resolved")]
    AlreadyResolved(u64),
    #[error("dispute {0} has no votes")]
    NoVotes(u64),
    #[error("prompt {0} has an open dispute")]
    DisputePending(PromptId),
    #[error("{0} is not pinned by the caller")]
    NotPinned(Cid),
    #[error("store: {0}")]
    Store(#[from] StoreError),
    #[error("ledger: {0}")]
    Ledger(#[from] LedgerError),
}

impl NodeError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            NodeError::GenesisRequired => "GENESIS_REQUIRED",
            NodeError::GenesisRepeated => "GENESIS_REPEATED",
            NodeError::TimeWentBackwards { .. } => "CLOCK_REGRESSION",
            NodeError::Unauthorized(_) => "UNAUTHORIZED",
            NodeError::InsufficientBalance { .. } => "INSUFFICIENT_BALANCE",
            NodeError::InsufficientReputation { .. } => "INSUFFICIENT_REPUTATION",
            NodeError::InsufficientVoterReputation { .. } => "INSUFFICIENT_VOTER_REPUTATION",
            NodeError::InsufficientStake { .. } => "INSUFFICIENT_STAKE",
            NodeError::AlreadyValidated { .. } => "ALREADY_VALIDATED",
            NodeError::AlreadyVoted { .. } => "ALREADY_VOTED",
            NodeError::SelfValidation => "SELF_VALIDATION",
            NodeError::InvalidScore(_) => "INVALID_SCORE",
            NodeError::WrongState { .. } => "WRONG_STATE",
            NodeError::NotValidated(_) => "NOT_VALIDATED",
            NodeError::QuorumNotMet { .. } => "QUORUM_NOT_MET",
            NodeError::PromptNotFound(_) => "PROMPT_NOT_FOUND",
            NodeError::DisputeNotFound(_) => "DISPUTE_NOT_FOUND",
            NodeError::CollectionNotFound(_) => "COLLECTION_NOT_FOUND",
            NodeError::UnknownCid(_) => "UNKNOWN_CID",
            NodeError::SchemaInvalid(_) => "SCHEMA_INVALID",
            NodeError::InvalidDocument(_) => "INVALID_DOCUMENT",
            NodeError::InvalidParent(_) => "INVALID_PARENT",
            NodeError::DuplicateRegistration(_) => "DUPLICATE_REGISTRATION",
            NodeError::AlreadyResolved(_) => "ALREADY_RESOLVED",
            NodeError::NoVotes(_) => "NO_VOTES",
            NodeError::DisputePending(_) => "DISPUTE_PENDING",
            NodeError::NotPinned(_) => "NOT_PINNED",
            NodeError::Store(StoreError::NotFound(_)) => "CONTENT_NOT_FOUND",
            NodeError::Store(StoreError::IntegrityViolation(_)) => "INTEGRITY_VIOLATION",
            NodeError::Store(StoreError::InvalidReplication) => "INVALID_REPLICATION",
            NodeError::Store(_) => "STORE_ERROR",
            NodeError::Ledger(_) => "LEDGER_ERROR",
        }
    }
}
