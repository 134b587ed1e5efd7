//! The single-writer state machine that owns the store, registry, ledger and
//! governance state.
//!
//! Every mutation is a [`Command`] passed to [`Node::execute`] together with
//! the caller and the time it happens at. Successful commands are appended to
//! the journal with their outcome; failed commands leave no trace. Replaying
//! a journal on a fresh node re-executes every command and checks that each
//! produces the recorded outcome.

mod error;
mod ops;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::clock::ManualClock;
use crate::economy::{
    AdjustPolicy, Collection, EconomicParams, EngagementPolicy, FeeSchedule, Ledger, LogEngagement,
    LogReporterReward, ReporterRewardPolicy, ReputationRecord, RewardableBallot,
};
use crate::governance::{ConsensusResult, Dispute, GovernanceParams, PrecedentLog, ValidationBallot, Verdict};
use crate::journal::{write_event, Command, EpochReport, Event, Outcome, Subjects};
use crate::model::{PromptDocument, UsageSummary};
use crate::primitives::{Address, Amount, UnixTime};
use crate::registry::{LifecycleState, PromptId, PromptRecord, Registry};
use crate::store::{Cid, ContentStore, DiskBackend, MemoryBackend, ObjectInfo, StoreBackend};

pub use error::{Action, NodeError};

/// Everything that parameterizes a network. Carried by the genesis command,
/// so a journal fully describes the node that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NodeConfig {
    pub governance: GovernanceParams,
    pub fees: FeeSchedule,
    pub economics: EconomicParams,
    pub adjust: AdjustPolicy,
    pub store_backends: usize,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig {
            governance: GovernanceParams::default(),
            fees: FeeSchedule::default(),
            economics: EconomicParams::default(),
            adjust: AdjustPolicy::default(),
            store_backends: 3,
        }
    }
}

/// Where store backends keep their data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum StorageKind {
    #[default]
    Memory,
    /// One subdirectory per backend under this root.
    Disk(PathBuf),
}

fn backend_id(i: usize) -> String {
    format!("store-{i}")
}

pub struct Node {
    config: NodeConfig,
    storage: StorageKind,
    clock: Arc<ManualClock>,
    store: ContentStore,
    registry: Registry,
    ledger: Ledger,
    ballots: BTreeMap<PromptId, Vec<ValidationBallot>>,
    results: BTreeMap<PromptId, ConsensusResult>,
    disputes: BTreeMap<u64, Dispute>,
    precedents: PrecedentLog,
    reputation: BTreeMap<Address, ReputationRecord>,
    collections: BTreeMap<u64, Collection>,
    /// Replication requested per content and owner.
    pins: BTreeMap<Cid, BTreeMap<Address, u32>>,
    params: EconomicParams,
    rewardable: Vec<RewardableBallot>,
    epoch: u64,
    epoch_reports: Vec<EpochReport>,
    usage_log: Vec<(UnixTime, PromptId)>,
    journal: Vec<Event>,
    last_at: UnixTime,
    genesis_done: bool,
    sink: Option<Box<dyn Write + Send + Sync>>,
    engagement: Box<dyn EngagementPolicy + Send + Sync>,
    reporter_reward: Box<dyn ReporterRewardPolicy + Send + Sync>,
}

impl std::fmt::Debug for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Node")
            .field("prompts", &self.registry.len())
            .field("events", &self.journal.len())
            .field("epoch", &self.epoch)
            .finish_non_exhaustive()
    }
}

impl Default for Node {
    fn default() -> Self {
        Self::new(StorageKind::Memory)
    }
}

/// Serializable view of everything a replay must reproduce.
#[derive(Serialize)]
struct Snapshot<'a> {
    config: &'a NodeConfig,
    registry: &'a Registry,
    ledger: &'a Ledger,
    ballots: &'a BTreeMap<PromptId, Vec<ValidationBallot>>,
    results: &'a BTreeMap<PromptId, ConsensusResult>,
    disputes: &'a BTreeMap<u64, Dispute>,
    precedents: &'a PrecedentLog,
    reputation: &'a BTreeMap<Address, ReputationRecord>,
    collections: &'a BTreeMap<u64, Collection>,
    pins: &'a BTreeMap<Cid, BTreeMap<Address, u32>>,
    params: &'a EconomicParams,
    rewardable: &'a [RewardableBallot],
    epoch: u64,
    epoch_reports: &'a [EpochReport],
    usage_log: &'a [(UnixTime, PromptId)],
    objects: Vec<ObjectInfo>,
    journal: &'a [Event],
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("journal is empty or does not start with genesis")]
    MissingGenesis,
    #[error("event {seq}: expected sequence number {expected}")]
    SequenceGap { seq: u64, expected: u64 },
    #[error("event {seq} failed on replay: {error}")]
    Failed { seq: u64, error: NodeError },
    #[error("event {seq} diverged: recorded {recorded}, replayed {replayed}")]
    Diverged { seq: u64, recorded: String, replayed: String },
}

impl Node {
    pub fn new(storage: StorageKind) -> Self {
        let clock = Arc::new(ManualClock::new(0));
        Node {
            config: NodeConfig::default(),
            storage,
            store: ContentStore::new(Vec::new(), clock.clone()),
            clock,
            registry: Registry::new(),
            ledger: Ledger::new(),
            ballots: BTreeMap::new(),
            results: BTreeMap::new(),
            disputes: BTreeMap::new(),
            precedents: PrecedentLog::default(),
            reputation: BTreeMap::new(),
            collections: BTreeMap::new(),
            pins: BTreeMap::new(),
            params: EconomicParams::default(),
            rewardable: Vec::new(),
            epoch: 0,
            epoch_reports: Vec::new(),
            usage_log: Vec::new(),
            journal: Vec::new(),
            last_at: 0,
            genesis_done: false,
            sink: None,
            engagement: Box::new(LogEngagement),
            reporter_reward: Box::new(LogReporterReward),
        }
    }

    /// An in-memory node with genesis already applied at time `at`.
    pub fn with_genesis(
        config: NodeConfig,
        allocations: Vec<crate::journal::GenesisAllocation>,
        pool: Amount,
        at: UnixTime,
    ) -> Result<Self, NodeError> {
        let mut node = Node::new(StorageKind::Memory);
        node.execute(None, at, Command::Genesis { config, allocations, pool })?;
        Ok(node)
    }

    /// Streams every journaled event to `sink` as NDJSON, in addition to
    /// keeping it in memory.
    pub fn set_journal_sink(&mut self, sink: Box<dyn Write + Send + Sync>) {
        self.sink = Some(sink);
    }

    fn build_store(&self, backends: usize) -> Result<ContentStore, NodeError> {
        let mut list: Vec<Arc<dyn StoreBackend>> = Vec::with_capacity(backends);
        for i in 0..backends {
            let id = backend_id(i);
            match &self.storage {
                StorageKind::Memory => list.push(Arc::new(MemoryBackend::new(id))),
                StorageKind::Disk(root) => {
                    let backend = DiskBackend::open(id.clone(), root.join(&id))
                        .map_err(|e| NodeError::Store(crate::store::StoreError::Backend(e.to_string())))?;
                    list.push(Arc::new(backend));
                }
            }
        }
        Ok(ContentStore::new(list, self.clock.clone()))
    }

    /// Runs one command. On success the command is journaled and its outcome
    /// returned; on failure the node is unchanged.
    pub fn execute(&mut self, caller: Option<Address>, at: UnixTime, command: Command) -> Result<Outcome, NodeError> {
        if at < self.last_at {
            return Err(NodeError::TimeWentBackwards { at, last: self.last_at });
        }
        match (&command, self.genesis_done) {
            (Command::Genesis { .. }, true) => return Err(NodeError::GenesisRepeated),
            (Command::Genesis { .. }, false) | (_, true) => {}
            (_, false) => return Err(NodeError::GenesisRequired),
        }
        self.clock.set(at);
        let mut subjects = Subjects::default();
        if let Some(c) = caller {
            subjects.addresses.insert(c);
        }
        let outcome = self.apply(caller, at, &command, &mut subjects)?;
        self.last_at = at;
        let event = Event {
            seq: self.journal.len() as u64,
            at,
            command,
            caller,
            subjects,
            outcome: serde_json::to_value(&outcome).expect("outcomes serialize"),
        };
        if let Some(sink) = self.sink.as_mut() {
            // The in-memory journal stays authoritative if the sink fails.
            let _ = write_event(sink.as_mut(), &event).and_then(|_| sink.flush());
        }
        self.journal.push(event);
        Ok(outcome)
    }

    /// Rebuilds a node by re-executing `events`, checking each outcome.
    pub fn replay(events: &[Event], storage: StorageKind) -> Result<Node, ReplayError> {
        if !matches!(events.first().map(|e| &e.command), Some(Command::Genesis { .. })) {
            return Err(ReplayError::MissingGenesis);
        }
        let mut node = Node::new(storage);
        for (i, e) in events.iter().enumerate() {
            if e.seq != i as u64 {
                return Err(ReplayError::SequenceGap { seq: e.seq, expected: i as u64 });
            }
            let outcome = node
                .execute(e.caller, e.at, e.command.clone())
                .map_err(|error| ReplayError::Failed { seq: e.seq, error })?;
            let replayed = serde_json::to_value(&outcome).expect("outcomes serialize");
            if replayed != e.outcome || node.journal[i].subjects != e.subjects {
                return Err(ReplayError::Diverged {
                    seq: e.seq,
                    recorded: e.outcome.to_string(),
                    replayed: replayed.to_string(),
                });
            }
        }
        Ok(node)
    }

    /// SHA-256 over a canonical serialization of the full state.
    pub fn state_digest(&self) -> String {
        let snap = Snapshot {
            config: &self.config,
            registry: &self.registry,
            ledger: &self.ledger,
            ballots: &self.ballots,
            results: &self.results,
            disputes: &self.disputes,
            precedents: &self.precedents,
            reputation: &self.reputation,
            collections: &self.collections,
            pins: &self.pins,
            params: &self.params,
            rewardable: &self.rewardable,
            epoch: self.epoch,
            epoch_reports: &self.epoch_reports,
            usage_log: &self.usage_log,
            objects: self.store.objects(),
            journal: &self.journal,
        };
        let bytes = serde_json::to_vec(&snap).expect("state serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Checks the global invariants and returns a description of each one
    /// that does not hold.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.ledger.is_conserved() {
            out.push(format!(
                "conservation: circulating {} != supply {}",
                self.ledger.circulating(),
                self.ledger.total_supply()
            ));
        }
        let mut expected: BTreeMap<Address, Amount> = BTreeMap::new();
        for r in self.registry.records() {
            if !r.stake.is_zero() {
                *expected.entry(r.creator).or_default() += r.stake;
            }
            if r.state.holds_stake() && r.stake < self.config.fees.registration_stake {
                out.push(format!("stake: {} is {} with only {} staked", r.prompt_id, r.state, r.stake));
            }
            match self.registry.lineage(&r.prompt_id) {
                Ok(line) if line.len() as u32 == r.version && line.last().is_some_and(|x| x.version == 1) => {}
                _ => out.push(format!("lineage: {} has version {} inconsistent with its ancestry", r.prompt_id, r.version)),
            }
        }
        for (id, ballots) in &self.ballots {
            let mut seen = BTreeSet::new();
            for b in ballots {
                if !seen.insert(b.validator) {
                    out.push(format!("ballots: {} voted twice on {id}", b.validator));
                }
            }
            let locked = self.registry.get(id).is_ok_and(|r| r.state == LifecycleState::UnderValidation);
            if locked {
                for b in ballots {
                    *expected.entry(b.validator).or_default() += b.stake;
                }
            }
        }
        for d in self.disputes.values().filter(|d| d.is_open()) {
            *expected.entry(d.reporter).or_default() += d.stake;
        }
        for c in self.collections.values() {
            *expected.entry(c.curator).or_default() += c.stake;
        }
        expected.retain(|_, v| !v.is_zero());
        if &expected != self.ledger.stakes() {
            out.push("stakes: ledger stakes do not match itemized stakes".into());
        }
        out
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn now(&self) -> UnixTime {
        self.last_at
    }

    pub fn store(&self) -> &ContentStore {
        &self.store
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn ballots(&self, prompt_id: &PromptId) -> &[ValidationBallot] {
        self.ballots.get(prompt_id).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn consensus(&self, prompt_id: &PromptId) -> Option<&ConsensusResult> {
        self.results.get(prompt_id)
    }

    pub fn dispute(&self, id: u64) -> Option<&Dispute> {
        self.disputes.get(&id)
    }

    pub fn disputes(&self) -> impl Iterator<Item = &Dispute> {
        self.disputes.values()
    }

    pub fn precedents(&self) -> &PrecedentLog {
        &self.precedents
    }

    pub fn collection(&self, id: u64) -> Option<&Collection> {
        self.collections.get(&id)
    }

    pub fn collections(&self) -> impl Iterator<Item = &Collection> {
        self.collections.values()
    }

    pub fn pins(&self, cid: &Cid) -> Option<&BTreeMap<Address, u32>> {
        self.pins.get(cid)
    }

    pub fn params(&self) -> &EconomicParams {
        &self.params
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn epoch_reports(&self) -> &[EpochReport] {
        &self.epoch_reports
    }

    pub fn usage_log(&self) -> &[(UnixTime, PromptId)] {
        &self.usage_log
    }

    pub fn journal(&self) -> &[Event] {
        &self.journal
    }

    pub fn pending_rewards(&self) -> &[RewardableBallot] {
        &self.rewardable
    }

    pub fn reputation_record(&self, addr: &Address) -> ReputationRecord {
        self.reputation.get(addr).cloned().unwrap_or_default()
    }

    pub fn reputation_of(&self, addr: &Address) -> f64 {
        self.reputation.get(addr).map(|r| r.score(self.engagement.as_ref())).unwrap_or(0.0)
    }

    pub fn reputation_records(&self) -> &BTreeMap<Address, ReputationRecord> {
        &self.reputation
    }

    /// The stored document behind a registered prompt.
    pub fn document(&self, prompt_id: &PromptId) -> Result<PromptDocument, NodeError> {
        let rec = self.registry.get(prompt_id).map_err(|_| NodeError::PromptNotFound(*prompt_id))?;
        let bytes = self.store.get(&rec.cid)?;
        crate::model::parse_document(&bytes, crate::model::ParseMode::Strict).map_err(|e| NodeError::InvalidDocument(e.to_string()))
    }

    /// Registrations of `cid` in registration order.
    pub fn registrations_of(&self, cid: &Cid) -> Vec<&PromptRecord> {
        self.registry.in_order().into_iter().filter(|r| r.cid == *cid).collect()
    }

    pub fn usage_summary(&self, rec: &PromptRecord) -> UsageSummary {
        UsageSummary {
            total_uses: rec.total_uses,
            success_rate: 0,
            average_rating: 0,
            derivatives: rec.derivative_count,
        }
    }
}

/// Typed wrappers over [`Node::execute`].
impl Node {
    pub fn store_document(&mut self, caller: Address, at: UnixTime, document: PromptDocument) -> Result<Cid, NodeError> {
        match self.execute(Some(caller), at, Command::StoreDocument { document })? {
            Outcome::Stored { cid } => Ok(cid),
            other => unreachable!("store_document produced {other:?}"),
        }
    }

    pub fn register_prompt(&mut self, creator: Address, at: UnixTime, cid: Cid, parent: Option<PromptId>) -> Result<PromptRecord, NodeError> {
        match self.execute(Some(creator), at, Command::Register { cid, parent })? {
            Outcome::Registered(r) => Ok(r),
            other => unreachable!("register produced {other:?}"),
        }
    }

    /// Stores `document` and registers it in one step.
    pub fn publish(&mut self, creator: Address, at: UnixTime, document: PromptDocument) -> Result<PromptRecord, NodeError> {
        let parent = document.provenance.parent_prompt_id;
        let cid = self.store_document(creator, at, document)?;
        self.register_prompt(creator, at, cid, parent)
    }

    pub fn submit_validation(
        &mut self,
        validator: Address,
        at: UnixTime,
        prompt_id: PromptId,
        score: u8,
        stake: Amount,
        expertise: Vec<String>,
    ) -> Result<ValidationBallot, NodeError> {
        let cmd = Command::SubmitValidation { prompt_id, score, stake, expertise, comment: String::new() };
        match self.execute(Some(validator), at, cmd)? {
            Outcome::Ballot(b) => Ok(b),
            other => unreachable!("submit_validation produced {other:?}"),
        }
    }

    pub fn finalize_validation(&mut self, caller: Address, at: UnixTime, prompt_id: PromptId) -> Result<ConsensusResult, NodeError> {
        match self.execute(Some(caller), at, Command::Finalize { prompt_id })? {
            Outcome::Finalized(r) => Ok(r),
            other => unreachable!("finalize produced {other:?}"),
        }
    }

    pub fn open_dispute(&mut self, reporter: Address, at: UnixTime, prompt_id: PromptId, violation: &str) -> Result<Dispute, NodeError> {
        match self.execute(Some(reporter), at, Command::OpenDispute { prompt_id, violation: violation.to_owned() })? {
            Outcome::Dispute(d) => Ok(d),
            other => unreachable!("open_dispute produced {other:?}"),
        }
    }

    pub fn resolve_dispute(&mut self, caller: Address, at: UnixTime, dispute_id: u64, votes: Vec<(Address, Verdict)>) -> Result<Dispute, NodeError> {
        match self.execute(Some(caller), at, Command::ResolveDispute { dispute_id, votes })? {
            Outcome::Dispute(d) => Ok(d),
            other => unreachable!("resolve_dispute produced {other:?}"),
        }
    }

    pub fn deprecate(&mut self, caller: Address, at: UnixTime, prompt_id: PromptId) -> Result<PromptRecord, NodeError> {
        match self.execute(Some(caller), at, Command::Deprecate { prompt_id })? {
            Outcome::Deprecated(r) => Ok(r),
            other => unreachable!("deprecate produced {other:?}"),
        }
    }

    pub fn record_usage(&mut self, user: Address, at: UnixTime, prompt_id: PromptId) -> Result<UsageSummary, NodeError> {
        match self.execute(Some(user), at, Command::RecordUsage { prompt_id })? {
            Outcome::Usage(u) => Ok(u),
            other => unreachable!("record_usage produced {other:?}"),
        }
    }

    pub fn create_collection(&mut self, curator: Address, at: UnixTime, name: &str, prompts: Vec<PromptId>) -> Result<Collection, NodeError> {
        match self.execute(Some(curator), at, Command::CreateCollection { name: name.to_owned(), prompts })? {
            Outcome::Collection(c) => Ok(c),
            other => unreachable!("create_collection produced {other:?}"),
        }
    }

    pub fn close_epoch(&mut self, at: UnixTime) -> Result<EpochReport, NodeError> {
        match self.execute(None, at, Command::CloseEpoch)? {
            Outcome::Epoch(r) => Ok(r),
            other => unreachable!("close_epoch produced {other:?}"),
        }
    }
}
