//! Prompt registry: records, lifecycle states and version lineage.
//!
//! The registry holds only registry-side facts. Balance checks, stake
//! movements and schema validation are done by the node before a record is
//! inserted, so every method here is a pure state transition on the record
//! table.

mod id;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{Address, Amount, UnixTime};
use crate::store::Cid;

pub use id::{PromptId, PROMPT_ID_PREFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LifecycleState {
    Registered,
    UnderValidation,
    Validated,
    Disputed,
    Deprecated,
}

impl LifecycleState {
    /// The allowed transition relation. Deprecation is reachable from every
    /// live state; nothing leaves `Deprecated`.
    pub fn can_transition(self, to: LifecycleState) -> bool {
        use LifecycleState::*;
        matches!(
            (self, to),
            (Registered, UnderValidation)
                | (UnderValidation, Validated)
                | (UnderValidation, Disputed)
                | (Validated, Disputed)
                | (Disputed, Validated)
                | (Disputed, Deprecated)
        ) || (to == Deprecated && self != Deprecated)
    }

    /// States in which the registration stake must still be locked.
    pub fn holds_stake(self) -> bool {
        matches!(self, LifecycleState::Registered | LifecycleState::UnderValidation)
    }
}

impl fmt::Display for LifecycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub prompt_id: PromptId,
    pub creator: Address,
    pub cid: Cid,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<PromptId>,
    pub timestamp: UnixTime,
    pub state: LifecycleState,
    pub stake: Amount,
    /// Consensus score, set once validation finalizes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_score: Option<u8>,
    pub derivative_count: u64,
    pub domain: String,
    pub total_uses: u64,
    /// Uses since the last epoch close.
    pub epoch_uses: u64,
    /// Position in registration order, used as a pagination cursor.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("prompt {0} not found")]
    NotFound(PromptId),
    #[error("invalid parent {0}")]
    InvalidParent(PromptId),
    #[error("prompt {0} is already registered")]
    DuplicateRegistration(PromptId),
    #[error("illegal lifecycle transition {from} -> {to}")]
    IllegalTransition { from: LifecycleState, to: LifecycleState },
}

/// Fields supplied by the caller when inserting a record.
#[derive(Debug, Clone)]
pub struct NewRecord {
    pub creator: Address,
    pub cid: Cid,
    pub parent_id: Option<PromptId>,
    pub timestamp: UnixTime,
    pub stake: Amount,
    pub domain: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Registry {
    records: BTreeMap<PromptId, PromptRecord>,
    next_seq: u64,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Checks that `new` could be inserted and returns its id and version.
    pub fn check(&self, new: &NewRecord) -> Result<(PromptId, u32), RegistryError> {
        let id = PromptId::derive(&new.cid, &new.creator, new.timestamp);
        let version = match &new.parent_id {
            None => 1,
            Some(p) => match self.records.get(p) {
                Some(parent) if parent.state != LifecycleState::Deprecated => parent.version + 1,
                _ => return Err(RegistryError::InvalidParent(*p)),
            },
        };
        if self.records.contains_key(&id) {
            return Err(RegistryError::DuplicateRegistration(id));
        }
        Ok((id, version))
    }

    pub fn insert(&mut self, new: NewRecord) -> Result<&PromptRecord, RegistryError> {
        let (id, version) = self.check(&new)?;
        if let Some(p) = &new.parent_id {
            self.records.get_mut(p).expect("checked").derivative_count += 1;
        }
        let record = PromptRecord {
            prompt_id: id,
            creator: new.creator,
            cid: new.cid,
            version,
            parent_id: new.parent_id,
            timestamp: new.timestamp,
            state: LifecycleState::Registered,
            stake: new.stake,
            validation_score: None,
            derivative_count: 0,
            domain: new.domain,
            total_uses: 0,
            epoch_uses: 0,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        Ok(self.records.entry(id).or_insert(record))
    }

    pub fn get(&self, id: &PromptId) -> Result<&PromptRecord, RegistryError> {
        self.records.get(id).ok_or(RegistryError::NotFound(*id))
    }

    pub(crate) fn get_mut(&mut self, id: &PromptId) -> Result<&mut PromptRecord, RegistryError> {
        self.records.get_mut(id).ok_or(RegistryError::NotFound(*id))
    }

    pub fn contains(&self, id: &PromptId) -> bool {
        self.records.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records keyed by id.
    pub fn records(&self) -> impl Iterator<Item = &PromptRecord> {
        self.records.values()
    }

    /// Records in registration order.
    pub fn in_order(&self) -> Vec<&PromptRecord> {
        let mut v: Vec<&PromptRecord> = self.records.values().collect();
        v.sort_by_key(|r| r.seq);
        v
    }

    /// Moves `id` to `to`, refusing anything outside the transition relation.
    pub fn transition(&mut self, id: &PromptId, to: LifecycleState) -> Result<LifecycleState, RegistryError> {
        let rec = self.get_mut(id)?;
        let from = rec.state;
        if !from.can_transition(to) {
            return Err(RegistryError::IllegalTransition { from, to });
        }
        rec.state = to;
        Ok(from)
    }

    /// The record and its ancestors, newest first, ending at a version-1 root.
    pub fn lineage(&self, id: &PromptId) -> Result<Vec<&PromptRecord>, RegistryError> {
        let mut out = vec![self.get(id)?];
        while let Some(parent) = out.last().and_then(|r| r.parent_id) {
            out.push(self.get(&parent)?);
        }
        Ok(out)
    }

    /// Direct children of `id`.
    pub fn children(&self, id: &PromptId) -> Vec<&PromptRecord> {
        self.records.values().filter(|r| r.parent_id.as_ref() == Some(id)).collect()
    }
}
