//! Agent strategies. Each strategy sees the node only through its public
//! reads and changes it only through [`Ctx::exec`].

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::governance::{Dispute, Verdict};
use crate::journal::{Command, Outcome};
use crate::model::PromptDocument;
use crate::node::{Node, NodeError};
use crate::primitives::{Address, Amount, UnixTime};
use crate::registry::{LifecycleState, PromptId};

pub const DOMAINS: [&str; 5] = ["legal", "medical", "code", "finance", "education"];

/// Shared system preambles, one per domain, so similar prompts share blocks.
pub fn system_block(domain: &str) -> String {
    format!(
        "You are a careful assistant specialised in {domain}. Answer precisely, cite the part of the input you rely on, \
         say when the input is insufficient, never invent facts, and keep the requested output format."
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    HonestCreator,
    Spammer,
    Validator,
    Sybil,
    Curator,
    Consumer,
    Plagiarist,
    Reporter,
}

/// What the simulator knows about a prompt that the protocol does not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTruth {
    pub quality: f64,
    pub author: AgentKind,
    pub plagiarized: bool,
}

/// A prompt as presented to reviewers.
#[derive(Debug, Clone)]
pub struct PromptView {
    pub id: PromptId,
    pub creator: Address,
    pub domain: String,
    pub truth: PromptTruth,
}

/// Validated prompts at the start of the tick, with sampling weights.
#[derive(Debug, Default)]
pub struct Catalog {
    pub entries: Vec<(PromptId, Address, u8)>,
    weights: Option<WeightedIndex<f64>>,
}

impl Catalog {
    pub fn build(node: &Node, preference: f64) -> Self {
        let entries: Vec<(PromptId, Address, u8)> = node
            .registry()
            .in_order()
            .into_iter()
            .filter(|r| r.state == LifecycleState::Validated)
            .map(|r| (r.prompt_id, r.creator, r.validation_score.unwrap_or(0)))
            .collect();
        let weights = WeightedIndex::new(entries.iter().map(|(_, _, s)| preference.powi(i32::from(*s)))).ok();
        Catalog { entries, weights }
    }

    /// A prompt drawn by score preference.
    pub fn sample(&self, rng: &mut impl RngCore) -> Option<PromptId> {
        self.weights.as_ref().map(|w| self.entries[w.sample(rng)].0)
    }

    /// The `n` best-scored prompts, oldest first among equals.
    pub fn top(&self, n: usize) -> Vec<PromptId> {
        let mut sorted: Vec<&(PromptId, Address, u8)> = self.entries.iter().collect();
        sorted.sort_by_key(|x| std::cmp::Reverse(x.2));
        sorted.into_iter().take(n).map(|e| e.0).collect()
    }
}

/// Everything a strategy may touch during its turn.
pub struct Ctx<'a> {
    pub node: &'a mut Node,
    pub rng: &'a mut ChaCha20Rng,
    pub at: UnixTime,
    pub tick: u64,
    pub epoch_length: u64,
    pub catalog: &'a Catalog,
    pub truth: &'a mut BTreeMap<PromptId, PromptTruth>,
    /// Prompts registered this tick, in order.
    pub fresh: &'a mut Vec<PromptId>,
    /// Rejected commands by error code.
    pub rejections: &'a mut BTreeMap<String, u64>,
}

impl Ctx<'_> {
    pub fn exec(&mut self, caller: Address, command: Command) -> Result<Outcome, NodeError> {
        let result = self.node.execute(Some(caller), self.at, command);
        if let Err(e) = &result {
            *self.rejections.entry(e.code().to_owned()).or_default() += 1;
        }
        result
    }

    /// Stores and registers a document, remembering its latent quality.
    pub fn publish(&mut self, creator: Address, document: PromptDocument, truth: PromptTruth) -> Option<PromptId> {
        let parent = document.provenance.parent_prompt_id;
        let Ok(Outcome::Stored { cid }) = self.exec(creator, Command::StoreDocument { document }) else {
            return None;
        };
        let Ok(Outcome::Registered(rec)) = self.exec(creator, Command::Register { cid, parent }) else {
            return None;
        };
        self.truth.insert(rec.prompt_id, truth);
        self.fresh.push(rec.prompt_id);
        Some(rec.prompt_id)
    }

    pub fn epoch(&self) -> u64 {
        self.tick / self.epoch_length
    }
}

/// A pluggable agent policy. Implementations override the hooks they need.
pub trait Strategy {
    fn kind(&self) -> AgentKind;

    /// Every account the agent controls.
    fn addresses(&self) -> Vec<Address>;

    /// Called once per tick, before reviews.
    fn act(&mut self, _ctx: &mut Ctx<'_>) {}

    /// Scores for a newly registered prompt, one per controlled account that
    /// wants to vote. `assigned` is set when the harness picked this agent as
    /// one of the prompt's reviewers.
    fn review(&mut self, _prompt: &PromptView, _assigned: bool, _rng: &mut ChaCha20Rng) -> Vec<(Address, u8)> {
        Vec::new()
    }

    /// Verdicts on an open dispute.
    fn judge(&mut self, _dispute: &Dispute, _truth: Option<&PromptTruth>) -> Vec<(Address, Verdict)> {
        Vec::new()
    }

    /// Latent mean quality of an honest creator.
    fn mean_quality(&self) -> Option<f64> {
        None
    }
}

fn noisy_score(quality: f64, sigma: f64, rng: &mut impl RngCore) -> u8 {
    let noise = if sigma > 0.0 { Normal::new(0.0, sigma).expect("valid sigma").sample(rng) } else { 0.0 };
    (quality + noise).round().clamp(0.0, 10.0) as u8
}

fn document(creator: Address, at: UnixTime, domain: &str, title: String, body: String) -> PromptDocument {
    let mut d = PromptDocument::minimal(creator, at, &title, domain, &body);
    d.content.system = system_block(domain);
    d.metadata.description = format!("{title} for {domain} work.");
    d.metadata.tags = vec![domain.to_owned(), "sim".to_owned()];
    d
}

pub struct HonestCreator {
    pub address: Address,
    pub domain: &'static str,
    pub mean_quality: f64,
    pub spread: f64,
    pub publish_rate: f64,
    pub published: u64,
}

impl Strategy for HonestCreator {
    fn kind(&self) -> AgentKind {
        AgentKind::HonestCreator
    }

    fn addresses(&self) -> Vec<Address> {
        vec![self.address]
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) {
        if !ctx.rng.random_bool(self.publish_rate) {
            return;
        }
        let noise: f64 = if self.spread > 0.0 { Normal::new(0.0, self.spread).expect("valid spread").sample(ctx.rng) } else { 0.0 };
        let quality = (self.mean_quality + noise).clamp(0.0, 10.0);
        self.published += 1;
        let title = format!("{} prompt {} by {}", self.domain, self.published, &self.address.to_string()[..10]);
        let body = format!("Task {} from {}: work through the {} input step by step.", self.published, self.address, self.domain);
        let doc = document(self.address, ctx.at, self.domain, title, body);
        ctx.publish(self.address, doc, PromptTruth { quality, author: AgentKind::HonestCreator, plagiarized: false });
    }

    fn mean_quality(&self) -> Option<f64> {
        Some(self.mean_quality)
    }
}

pub struct Spammer {
    pub address: Address,
    pub quality_max: f64,
    pub publish_rate: f64,
    pub published: u64,
}

impl Strategy for Spammer {
    fn kind(&self) -> AgentKind {
        AgentKind::Spammer
    }

    fn addresses(&self) -> Vec<Address> {
        vec![self.address]
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) {
        if !ctx.rng.random_bool(self.publish_rate) {
            return;
        }
        let quality = ctx.rng.random_range(0.0..=self.quality_max);
        let domain = DOMAINS[ctx.rng.random_range(0..DOMAINS.len())];
        self.published += 1;
        let doc = document(self.address, ctx.at, domain, format!("Best {domain} prompt ever #{}", self.published), format!("spam {} {}", self.address, self.published));
        ctx.publish(self.address, doc, PromptTruth { quality, author: AgentKind::Spammer, plagiarized: false });
    }
}

pub struct HonestValidator {
    pub address: Address,
    pub sigma: f64,
}

impl Strategy for HonestValidator {
    fn kind(&self) -> AgentKind {
        AgentKind::Validator
    }

    fn addresses(&self) -> Vec<Address> {
        vec![self.address]
    }

    fn review(&mut self, prompt: &PromptView, assigned: bool, rng: &mut ChaCha20Rng) -> Vec<(Address, u8)> {
        if !assigned || prompt.creator == self.address {
            return Vec::new();
        }
        vec![(self.address, noisy_score(prompt.truth.quality, self.sigma, rng))]
    }

    fn judge(&mut self, _dispute: &Dispute, truth: Option<&PromptTruth>) -> Vec<(Address, Verdict)> {
        let verdict = if truth.is_some_and(|t| t.plagiarized) { Verdict::Uphold } else { Verdict::Reject };
        vec![(self.address, verdict)]
    }
}

/// Votes with every identity on attacked prompts. With `bias` zero it is
/// indistinguishable from honest validators with the same noise.
pub struct SybilAttacker {
    pub identities: Vec<Address>,
    pub bias: f64,
    pub sigma: f64,
    pub attack_rate: f64,
}

impl Strategy for SybilAttacker {
    fn kind(&self) -> AgentKind {
        AgentKind::Sybil
    }

    fn addresses(&self) -> Vec<Address> {
        self.identities.clone()
    }

    fn review(&mut self, prompt: &PromptView, _assigned: bool, rng: &mut ChaCha20Rng) -> Vec<(Address, u8)> {
        if self.identities.is_empty() || !rng.random_bool(self.attack_rate) {
            return Vec::new();
        }
        let q = prompt.truth.quality;
        let target = if q >= 5.0 { q - self.bias } else { q + self.bias };
        self.identities.iter().map(|a| (*a, noisy_score(target, self.sigma, rng))).collect()
    }
}

pub struct Curator {
    pub address: Address,
    pub size: usize,
    pub refresh_every: u64,
    pub collection: Option<u64>,
    pub last_refresh: u64,
}

impl Strategy for Curator {
    fn kind(&self) -> AgentKind {
        AgentKind::Curator
    }

    fn addresses(&self) -> Vec<Address> {
        vec![self.address]
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) {
        let epoch = ctx.epoch();
        match self.collection {
            None if ctx.catalog.entries.len() >= self.size => {
                let prompts = ctx.catalog.top(self.size);
                let name = format!("Best of {}", &self.address.to_string()[..10]);
                if let Ok(Outcome::Collection(c)) = ctx.exec(self.address, Command::CreateCollection { name, prompts }) {
                    self.collection = Some(c.id);
                    self.last_refresh = epoch;
                }
            }
            Some(id) if epoch >= self.last_refresh + self.refresh_every => {
                self.last_refresh = epoch;
                let current: BTreeSet<PromptId> = ctx.node.collection(id).map(|c| c.prompts.clone()).unwrap_or_default();
                let wanted: BTreeSet<PromptId> = ctx.catalog.top(self.size).into_iter().collect();
                let add: Vec<PromptId> = wanted.difference(&current).copied().collect();
                let remove: Vec<PromptId> = current.difference(&wanted).copied().collect();
                if !add.is_empty() || !remove.is_empty() {
                    let _ = ctx.exec(self.address, Command::UpdateCollection { collection_id: id, add, remove });
                }
            }
            _ => {}
        }
    }
}

pub struct Consumer {
    pub address: Address,
    pub usage_rate: f64,
}

impl Strategy for Consumer {
    fn kind(&self) -> AgentKind {
        AgentKind::Consumer
    }

    fn addresses(&self) -> Vec<Address> {
        vec![self.address]
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) {
        let whole = self.usage_rate.floor();
        let uses = whole as u64 + u64::from(ctx.rng.random_bool(self.usage_rate - whole));
        for _ in 0..uses {
            let Some(prompt_id) = ctx.catalog.sample(ctx.rng) else { return };
            let _ = ctx.exec(self.address, Command::RecordUsage { prompt_id });
        }
    }
}

/// Republishes other people's Validated prompts under its own name.
pub struct Plagiarist {
    pub address: Address,
    pub publish_rate: f64,
}

impl Strategy for Plagiarist {
    fn kind(&self) -> AgentKind {
        AgentKind::Plagiarist
    }

    fn addresses(&self) -> Vec<Address> {
        vec![self.address]
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) {
        if ctx.catalog.entries.is_empty() || !ctx.rng.random_bool(self.publish_rate) {
            return;
        }
        let (original, creator, _) = ctx.catalog.entries[ctx.rng.random_range(0..ctx.catalog.entries.len())];
        if creator == self.address {
            return;
        }
        let Ok(mut doc) = ctx.node.document(&original) else { return };
        let quality = ctx.truth.get(&original).map_or(5.0, |t| t.quality);
        doc.provenance.creator = self.address;
        doc.provenance.timestamp = ctx.at;
        doc.provenance.parent_prompt_id = None;
        doc.provenance.contributors.clear();
        ctx.publish(self.address, doc, PromptTruth { quality, author: AgentKind::Plagiarist, plagiarized: true });
    }
}

/// Reports Validated prompts it recognises as copies.
pub struct Reporter {
    pub address: Address,
    pub detection_rate: f64,
    pub reported: BTreeSet<PromptId>,
}

impl Strategy for Reporter {
    fn kind(&self) -> AgentKind {
        AgentKind::Reporter
    }

    fn addresses(&self) -> Vec<Address> {
        vec![self.address]
    }

    fn act(&mut self, ctx: &mut Ctx<'_>) {
        let suspects: Vec<PromptId> = ctx
            .truth
            .iter()
            .filter(|(id, t)| t.plagiarized && !self.reported.contains(*id))
            .map(|(id, _)| *id)
            .filter(|id| ctx.node.registry().get(id).is_ok_and(|r| r.state == LifecycleState::Validated))
            .collect();
        for prompt_id in suspects {
            if !ctx.rng.random_bool(self.detection_rate) {
                continue;
            }
            if ctx.exec(self.address, Command::OpenDispute { prompt_id, violation: "plagiarism".into() }).is_ok() {
                self.reported.insert(prompt_id);
            }
        }
    }
}

/// Balance plus locked stake, summed over `addresses`.
pub fn wealth(node: &Node, addresses: &[Address]) -> Amount {
    addresses.iter().map(|a| node.ledger().balance(a) + node.ledger().staked(a)).sum()
}
