//! Deterministic multi-agent simulation of the network's economy.
//!
//! A scenario seeds one ChaCha generator, builds a genesis from its agent
//! populations and advances in ticks. Each tick every agent acts, reviewers
//! score the prompts registered in that tick, complete ballots are
//! finalized and open disputes voted on; every `epoch_length` ticks the
//! epoch closes and one row of metrics is recorded.

pub mod agents;
mod config;
mod metrics;
mod sybil;

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::economy::ReputationRecord;
use crate::journal::{Command, Event, GenesisAllocation, Outcome};
use crate::node::{Node, NodeError};
use crate::primitives::{Address, Amount};
use crate::registry::PromptId;

pub use agents::{AgentKind, Catalog, Ctx, PromptTruth, PromptView, Strategy};
pub use config::{
    ConsumerPopulation, CreatorPopulation, CuratorPopulation, GenesisAccount, PlagiaristPopulation, Populations, ReporterPopulation,
    ScenarioConfig, SpammerPopulation, SybilPopulation, ValidatorPopulation,
};
pub use metrics::{gini, EpochMetrics, ScenarioMetrics};
pub use sybil::{sybil_experiment, SybilRow, SybilTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    ConfigInvalid(String),
    #[error("gini of an empty list")]
    EmptyInput,
    #[error("genesis failed: {0}")]
    Genesis(NodeError),
}

/// History given to validator accounts at genesis, so they are eligible to
/// vote from the first tick.
pub fn seasoned_validator() -> ReputationRecord {
    ReputationRecord { validated_prompts: 1, score_sum: 8, ballots: 10, unslashed: 10, activity: 20, domain_credit: BTreeMap::new() }
}

/// The account that finalizes ballots, resolves disputes and closes epochs.
pub fn operator() -> Address {
    Address::derive("sim-operator")
}

struct Agent {
    strategy: Box<dyn Strategy>,
    addresses: Vec<Address>,
}

/// A scenario in progress.
pub struct Simulation {
    config: ScenarioConfig,
    node: Node,
    rng: ChaCha20Rng,
    agents: Vec<Agent>,
    truth: BTreeMap<PromptId, PromptTruth>,
    pending: Vec<PromptId>,
    rejections: BTreeMap<String, u64>,
    epochs: Vec<EpochMetrics>,
    initial_wealth: BTreeMap<Address, Amount>,
}

/// A finished run: the metrics plus the node, whose journal is the full
/// record of what happened.
pub struct SimOutcome {
    pub metrics: ScenarioMetrics,
    pub node: Node,
}

impl SimOutcome {
    pub fn journal(&self) -> &[Event] {
        self.node.journal()
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioMetrics, SimError> {
    Ok(Simulation::new(config.clone())?.run().metrics)
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let p = &config.populations;
        let mut agents: Vec<Agent> = Vec::new();
        let mut allocations: Vec<GenesisAllocation> = config
            .genesis
            .iter()
            .map(|g| GenesisAllocation { address: g.address, balance: g.balance, reputation: None })
            .collect();
        let mut add = |strategy: Box<dyn Strategy>, balance: Amount, reputation: Option<ReputationRecord>, allocations: &mut Vec<GenesisAllocation>| {
            let addresses = strategy.addresses();
            for a in &addresses {
                allocations.push(GenesisAllocation { address: *a, balance, reputation: reputation.clone() });
            }
            agents.push(Agent { strategy, addresses });
        };

        use agents::*;
        use rand::Rng;
        for i in 0..p.honest_creators.count {
            let c = &p.honest_creators;
            let s = HonestCreator {
                address: Address::derive(&format!("creator-{i}")),
                domain: DOMAINS[i % DOMAINS.len()],
                mean_quality: rng.random_range(c.quality_min..=c.quality_max),
                spread: c.spread,
                publish_rate: c.publish_rate,
                published: 0,
            };
            add(Box::new(s), c.balance, None, &mut allocations);
        }
        for i in 0..p.spammers.count {
            let s = &p.spammers;
            let a = Spammer { address: Address::derive(&format!("spammer-{i}")), quality_max: s.quality_max, publish_rate: s.publish_rate, published: 0 };
            add(Box::new(a), s.balance, None, &mut allocations);
        }
        for i in 0..p.plagiarists.count {
            let s = &p.plagiarists;
            add(Box::new(Plagiarist { address: Address::derive(&format!("plagiarist-{i}")), publish_rate: s.publish_rate }), s.balance, None, &mut allocations);
        }
        for i in 0..p.curators.count {
            let c = &p.curators;
            let s = Curator { address: Address::derive(&format!("curator-{i}")), size: c.collection_size, refresh_every: c.refresh_every, collection: None, last_refresh: 0 };
            add(Box::new(s), c.balance, None, &mut allocations);
        }
        for i in 0..p.consumers.count {
            let c = &p.consumers;
            add(Box::new(Consumer { address: Address::derive(&format!("consumer-{i}")), usage_rate: c.usage_rate }), c.balance, None, &mut allocations);
        }
        for i in 0..p.reporters.count {
            let r = &p.reporters;
            let s = Reporter { address: Address::derive(&format!("reporter-{i}")), detection_rate: r.detection_rate, reported: Default::default() };
            add(Box::new(s), r.balance, None, &mut allocations);
        }
        for i in 0..p.validators.count {
            let v = &p.validators;
            let s = HonestValidator { address: Address::derive(&format!("validator-{i}")), sigma: v.sigma };
            add(Box::new(s), v.balance, Some(seasoned_validator()), &mut allocations);
        }
        if p.sybil.identities > 0 {
            let s = &p.sybil;
            let identities: Vec<Address> = (0..s.identities).map(|j| Address::derive(&format!("sybil-{j}"))).collect();
            let share = Amount::from_units(s.budget.units() / s.identities as u128);
            let a = SybilAttacker { identities, bias: s.bias, sigma: p.validators.sigma, attack_rate: s.attack_rate };
            add(Box::new(a), share, Some(seasoned_validator()), &mut allocations);
        }

        let node = Node::with_genesis(config.overrides.clone(), allocations, config.pool, config.start_time).map_err(SimError::Genesis)?;
        let initial_wealth = agents.iter().flat_map(|a| a.addresses.iter()).map(|a| (*a, agents::wealth(&node, &[*a]))).collect();
        Ok(Simulation {
            config,
            node,
            rng,
            agents,
            truth: BTreeMap::new(),
            pending: Vec::new(),
            rejections: BTreeMap::new(),
            epochs: Vec::new(),
            initial_wealth,
        })
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn run(mut self) -> SimOutcome {
        let mut tracker = metrics::EpochTracker::start(&self.node, &self.agents_by_kind());
        for tick in 0..self.config.ticks {
            self.step(tick, &mut tracker);
            if (tick + 1) % self.config.epoch_length == 0 {
                let at = self.at(tick);
                let report = match self.node.execute(Some(operator()), at, Command::CloseEpoch) {
                    Ok(Outcome::Epoch(r)) => r,
                    other => panic!("epoch close failed: {other:?}"),
                };
                let row = tracker.close(&self.node, &report, &self.agents_by_kind());
                self.epochs.push(row);
            }
        }
        let metrics = metrics::summarize(
            std::mem::take(&mut self.epochs),
            &self.node,
            &self.truth,
            self.creator_qualities(),
            &self.agents_by_kind(),
            &self.initial_wealth,
            std::mem::take(&mut self.rejections),
        );
        SimOutcome { metrics, node: self.node }
    }

    fn at(&self, tick: u64) -> u64 {
        self.config.start_time + (tick + 1) * self.config.tick_seconds
    }

    fn agents_by_kind(&self) -> BTreeMap<AgentKind, Vec<Address>> {
        let mut out: BTreeMap<AgentKind, Vec<Address>> = BTreeMap::new();
        for a in &self.agents {
            out.entry(a.strategy.kind()).or_default().extend(&a.addresses);
        }
        out
    }

    fn creator_qualities(&self) -> Vec<(Address, f64)> {
        self.agents.iter().filter_map(|a| a.strategy.mean_quality().map(|q| (a.addresses[0], q))).collect()
    }

    fn step(&mut self, tick: u64, tracker: &mut metrics::EpochTracker) {
        let at = self.at(tick);
        let catalog = Catalog::build(&self.node, self.config.populations.consumers.preference);
        let mut fresh = Vec::new();
        {
            let mut ctx = Ctx {
                node: &mut self.node,
                rng: &mut self.rng,
                at,
                tick,
                epoch_length: self.config.epoch_length,
                catalog: &catalog,
                truth: &mut self.truth,
                fresh: &mut fresh,
                rejections: &mut self.rejections,
            };
            for agent in &mut self.agents {
                agent.strategy.act(&mut ctx);
            }
        }

        let validators: Vec<usize> =
            self.agents.iter().enumerate().filter(|(_, a)| a.strategy.kind() == AgentKind::Validator).map(|(i, _)| i).collect();
        let reviewers = self.config.populations.validators.reviewers_per_prompt.min(validators.len());
        let stakes = (self.config.populations.validators.stake, self.config.populations.sybil.stake);
        for id in &fresh {
            let rec = self.node.registry().get(id).expect("just registered").clone();
            let view = PromptView { id: *id, creator: rec.creator, domain: rec.domain.clone(), truth: self.truth[id].clone() };
            let chosen: Vec<usize> = sample(&mut self.rng, validators.len(), reviewers).into_iter().map(|k| validators[k]).collect();
            for (i, agent) in self.agents.iter_mut().enumerate() {
                let stake = if agent.strategy.kind() == AgentKind::Sybil { stakes.1 } else { stakes.0 };
                for (validator, score) in agent.strategy.review(&view, chosen.contains(&i), &mut self.rng) {
                    let cmd = Command::SubmitValidation { prompt_id: *id, score, stake, expertise: vec![], comment: String::new() };
                    if let Err(e) = self.node.execute(Some(validator), at, cmd) {
                        *self.rejections.entry(e.code().to_owned()).or_default() += 1;
                    }
                }
            }
        }

        self.pending.extend(fresh);
        let mut still = Vec::new();
        for id in std::mem::take(&mut self.pending) {
            match self.node.execute(Some(operator()), at, Command::Finalize { prompt_id: id }) {
                Ok(Outcome::Finalized(result)) => tracker.finalized(&result, self.truth.get(&id)),
                Err(NodeError::QuorumNotMet { .. }) => still.push(id),
                Err(NodeError::WrongState { .. }) => {}
                other => panic!("finalize failed: {other:?}"),
            }
        }
        self.pending = still;

        let open: Vec<(u64, PromptId)> = self.node.disputes().filter(|d| d.is_open()).map(|d| (d.id, d.prompt_id)).collect();
        for (dispute_id, prompt_id) in open {
            for agent in &mut self.agents {
                let dispute = self.node.dispute(dispute_id).expect("open").clone();
                for (voter, verdict) in agent.strategy.judge(&dispute, self.truth.get(&prompt_id)) {
                    if let Err(e) = self.node.execute(Some(voter), at, Command::CastDisputeVote { dispute_id, verdict }) {
                        *self.rejections.entry(e.code().to_owned()).or_default() += 1;
                    }
                }
            }
            if self.node.dispute(dispute_id).is_some_and(|d| !d.votes.is_empty()) {
                let resolved = self.node.execute(Some(operator()), at, Command::ResolveDispute { dispute_id, votes: vec![] });
                if let Ok(Outcome::Dispute(d)) = resolved {
                    tracker.resolved(&d);
                }
            }
        }
    }
}
