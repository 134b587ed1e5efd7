use std::collections::BTreeMap;

use promptchain_core::economy::{LedgerEntry, ReputationRecord};
use promptchain_core::governance::Verdict;
use promptchain_core::journal::{Command, GenesisAllocation, Outcome};
use promptchain_core::model::PromptDocument;
use promptchain_core::node::{Node, NodeConfig, NodeError};
use promptchain_core::registry::{LifecycleState, PromptId, PromptRecord};
use promptchain_core::{Address, Amount, UnixTime, UNITS_PER_PCT};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const T0: UnixTime = 1_700_000_000;
pub const DOMAINS: [&str; 4] = ["legal", "medical", "code", "finance"];

pub fn pct(n: u64) -> Amount {
    Amount::pct(n)
}

/// Validator history good enough to vote and to count as an expert anywhere.
pub fn seasoned() -> ReputationRecord {
    ReputationRecord {
        validated_prompts: 1,
        score_sum: 8,
        ballots: 10,
        unslashed: 10,
        activity: 20,
        domain_credit: DOMAINS.iter().map(|d| (d.to_string(), 5)).collect(),
    }
}

/// One command as the fuzzer issued it, with what the node made of it.
pub struct Applied {
    pub caller: Address,
    pub command: Command,
    pub result: Result<Outcome, NodeError>,
    /// Ledger movements the command caused.
    pub entries: Vec<LedgerEntry>,
}

pub struct World {
    pub node: Node,
    pub now: UnixTime,
    pub creators: Vec<Address>,
    pub validators: Vec<Address>,
    pub users: Vec<Address>,
    pub operator: Address,
    /// Sum of the genesis allocations and pool, computed here.
    pub supply: Amount,
    titles: u64,
}

impl World {
    pub fn new(tag: &str, pool: Amount) -> World {
        let named = |role: &str, n: usize| (0..n).map(|i| Address::derive(&format!("{tag}-{role}-{i}"))).collect::<Vec<_>>();
        let creators = named("creator", 6);
        let validators = named("validator", 8);
        let users = named("user", 6);
        let operator = Address::derive(&format!("{tag}-operator"));
        let mut allocations = Vec::new();
        let mut push = |a: &Address, balance: Amount, reputation: Option<ReputationRecord>| {
            allocations.push(GenesisAllocation { address: *a, balance, reputation });
        };
        creators.iter().for_each(|a| push(a, pct(100_000), None));
        validators.iter().for_each(|a| push(a, pct(100_000), Some(seasoned())));
        users.iter().for_each(|a| push(a, pct(20_000), None));
        push(&operator, Amount::ZERO, None);
        let supply = allocations.iter().fold(pool, |acc, g| acc + g.balance);
        let node = Node::with_genesis(NodeConfig::default(), allocations, pool, T0).expect("genesis");
        World { node, now: T0, creators, validators, users, operator, supply, titles: 0 }
    }

    pub fn exec(&mut self, caller: Address, command: Command) -> Applied {
        let before = self.node.ledger().journal().len();
        let result = self.node.execute(Some(caller), self.now, command.clone());
        let entries = self.node.ledger().journal()[before..].to_vec();
        Applied { caller, command, result, entries }
    }

    pub fn document(&mut self, creator: Address, domain: &str, parent: Option<PromptId>) -> PromptDocument {
        self.titles += 1;
        let mut d = PromptDocument::minimal(creator, self.now, &format!("Prompt {}", self.titles), domain, &format!("Handle request number {}.", self.titles));
        d.content.system = format!("You are an assistant for {domain} work. Be exact and brief.");
        d.provenance.parent_prompt_id = parent;
        d
    }

    /// Stores and registers a document; returns the register step.
    pub fn publish(&mut self, creator: Address, domain: &str, parent: Option<PromptId>) -> Vec<Applied> {
        let doc = self.document(creator, domain, parent);
        let stored = self.exec(creator, Command::StoreDocument { document: doc });
        let cid = match &stored.result {
            Ok(Outcome::Stored { cid }) => *cid,
            _ => return vec![stored],
        };
        let registered = self.exec(creator, Command::Register { cid, parent });
        vec![stored, registered]
    }

    pub fn prompts_in(&self, states: &[LifecycleState]) -> Vec<PromptRecord> {
        self.node.registry().records().filter(|r| states.contains(&r.state)).cloned().collect()
    }

    /// Issues one random command (two for a publication), advancing time.
    pub fn random_step(&mut self, rng: &mut impl Rng) -> Vec<Applied> {
        use LifecycleState::*;
        self.now += rng.random_range(1..=120);
        let roll = rng.random_range(0..100);
        let op = self.operator;
        match roll {
            0..=19 => {
                let creator = *self.creators.choose(rng).unwrap();
                let domain = *DOMAINS.choose(rng).unwrap();
                let parent = if rng.random_bool(0.3) {
                    self.prompts_in(&[Registered, UnderValidation, Validated, Disputed]).choose(rng).map(|r| r.prompt_id)
                } else {
                    None
                };
                self.publish(creator, domain, parent)
            }
            20..=49 => {
                let Some(p) = self.prompts_in(&[Registered, UnderValidation]).choose(rng).cloned() else { return vec![] };
                let validator = *self.validators.choose(rng).unwrap();
                let stake = if rng.random_bool(0.1) {
                    Amount::from_units(rng.random_range(0..50 * UNITS_PER_PCT))
                } else {
                    Amount::from_units(rng.random_range(50 * UNITS_PER_PCT..=120 * UNITS_PER_PCT))
                };
                let expertise = if rng.random_bool(0.5) { vec![p.domain.clone()] } else { vec![] };
                let command = Command::SubmitValidation { prompt_id: p.prompt_id, score: rng.random_range(0..=10), stake, expertise, comment: String::new() };
                vec![self.exec(validator, command)]
            }
            50..=61 => {
                let Some(p) = self.prompts_in(&[UnderValidation]).choose(rng).cloned() else { return vec![] };
                vec![self.exec(op, Command::Finalize { prompt_id: p.prompt_id })]
            }
            62..=76 => {
                let Some(p) = self.prompts_in(&[Validated]).choose(rng).cloned() else { return vec![] };
                let user = *self.users.choose(rng).unwrap();
                vec![self.exec(user, Command::RecordUsage { prompt_id: p.prompt_id })]
            }
            77..=80 => {
                let Some(p) = self.prompts_in(&[Validated]).choose(rng).cloned() else { return vec![] };
                let user = *self.users.choose(rng).unwrap();
                vec![self.exec(user, Command::OpenDispute { prompt_id: p.prompt_id, violation: "plagiarism".into() })]
            }
            81..=84 => {
                let open: Vec<u64> = self.node.disputes().filter(|d| d.is_open()).map(|d| d.id).collect();
                let Some(&dispute_id) = open.choose(rng) else { return vec![] };
                let voter = *self.validators.choose(rng).unwrap();
                let verdict = if rng.random_bool(0.5) { Verdict::Uphold } else { Verdict::Reject };
                match rng.random_range(0..3) {
                    0 => vec![self.exec(voter, Command::CastDisputeVote { dispute_id, verdict })],
                    1 => vec![self.exec(op, Command::ResolveDispute { dispute_id, votes: vec![] })],
                    _ => vec![self.exec(op, Command::ResolveDispute { dispute_id, votes: vec![(voter, verdict)] })],
                }
            }
            85..=89 => {
                let validated: Vec<PromptId> = self.prompts_in(&[Validated]).iter().map(|r| r.prompt_id).collect();
                let user = *self.users.choose(rng).unwrap();
                let existing: Vec<u64> = self.node.collections().filter(|c| c.curator == user).map(|c| c.id).collect();
                match (existing.choose(rng), validated.choose(rng)) {
                    (Some(&collection_id), Some(&p)) if rng.random_bool(0.5) => {
                        vec![self.exec(user, Command::UpdateCollection { collection_id, add: vec![p], remove: vec![] })]
                    }
                    (_, Some(_)) => {
                        let n = rng.random_range(1..=3.min(validated.len()));
                        let prompts = validated.choose_multiple(rng, n).copied().collect();
                        vec![self.exec(user, Command::CreateCollection { name: format!("set {}", self.now), prompts })]
                    }
                    _ => vec![],
                }
            }
            90..=92 => {
                let Some(p) = self.prompts_in(&[Validated, Disputed]).choose(rng).cloned() else { return vec![] };
                vec![self.exec(p.creator, Command::Deprecate { prompt_id: p.prompt_id })]
            }
            93..=95 => {
                let Some(p) = self.prompts_in(&[Registered, UnderValidation, Validated]).choose(rng).cloned() else { return vec![] };
                let owner = *self.users.choose(rng).unwrap();
                vec![self.exec(owner, Command::Pin { cid: p.cid, replication: rng.random_range(1..=3) })]
            }
            _ => vec![self.exec(op, Command::CloseEpoch)],
        }
    }

    /// Σ balances + Σ stakes + pool, summed here rather than by the ledger.
    pub fn holdings(&self) -> Amount {
        let l = self.node.ledger();
        let balances: Amount = l.balances().values().copied().sum();
        let stakes: Amount = l.stakes().values().copied().sum();
        balances + stakes + l.pool()
    }
}

pub fn count_by<T: Ord + Clone>(items: impl IntoIterator<Item = T>) -> BTreeMap<T, usize> {
    let mut m = BTreeMap::new();
    for i in items {
        *m.entry(i).or_insert(0) += 1;
    }
    m
}
