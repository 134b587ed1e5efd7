use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::agents::{wealth, AgentKind, PromptTruth};
use super::SimError;
use crate::economy::Role;
use crate::governance::{ConsensusResult, Dispute};
use crate::journal::EpochReport;
use crate::node::Node;
use crate::primitives::{Address, Amount, UNITS_PER_PCT};
use crate::registry::LifecycleState;

/// Gini coefficient by the sorted-rank formula
/// `G = 2·Σ i·x(i) / (n·Σx) − (n+1)/n`, with exact integer sums.
/// All-zero input counts as perfectly equal.
pub fn gini(values: &[Amount]) -> Result<f64, SimError> {
    if values.is_empty() {
        return Err(SimError::EmptyInput);
    }
    let mut xs: Vec<u128> = values.iter().map(|a| a.units()).collect();
    xs.sort_unstable();
    let n = xs.len() as u128;
    let total: u128 = xs.iter().sum();
    if total == 0 {
        return Ok(0.0);
    }
    let ranked: u128 = xs.iter().enumerate().map(|(i, x)| (i as u128 + 1) * x).sum();
    // 2·ranked ≥ (n+1)·total for sorted input, so this never underflows.
    let numerator = 2 * ranked - (n + 1) * total;
    Ok(numerator as f64 / (n * total) as f64)
}

fn signed_pct(after: Amount, before: Amount) -> f64 {
    (after.units() as i128 - before.units() as i128) as f64 / UNITS_PER_PCT as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: u64,
    pub rewards_by_role: BTreeMap<Role, Amount>,
    pub total_paid: Amount,
    /// Gini of agent wealth (balance plus stake) at the close.
    pub gini: f64,
    /// Mean |consensus − latent quality| over prompts finalized this epoch.
    pub consensus_error: Option<f64>,
    pub finalized: u64,
    /// Net wealth change of the Sybil identities over the epoch, in PCT.
    pub attacker_profit: f64,
    /// Mean honest validator's net change, times the number of identities.
    pub honest_equivalent_profit: f64,
    /// Share of finalized spam prompts that reached Validated, so far.
    pub spam_survival: f64,
    pub dedup_ratio: f64,
    pub uses: u64,
    pub pool: Amount,
    pub conserved: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariant_violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub epochs: Vec<EpochMetrics>,
    /// Mean creator reward per honest creator per epoch, grouped by decile
    /// of latent quality, lowest decile first.
    pub creator_reward_by_decile: Vec<f64>,
    /// Net wealth change per agent kind over the run, in PCT.
    pub net_by_kind: BTreeMap<AgentKind, f64>,
    pub prompts: u64,
    pub spam_prompts: u64,
    /// Spammers' net wealth change divided by the prompts they registered.
    pub spam_net_per_prompt: Option<f64>,
    pub events: u64,
    pub total_supply: Amount,
    pub supply_conserved: bool,
    pub state_digest: String,
    /// Commands the node refused, by error code.
    pub rejections: BTreeMap<String, u64>,
}

impl ScenarioMetrics {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epoch,creator_rewards,validator_rewards,curator_rewards,reporter_rewards,total_paid,gini,consensus_error,finalized,\
             attacker_profit,honest_equivalent_profit,spam_survival,dedup_ratio,uses,pool,conserved\n",
        );
        for e in &self.epochs {
            let role = |r: Role| e.rewards_by_role.get(&r).copied().unwrap_or(Amount::ZERO);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                e.epoch,
                role(Role::Creator),
                role(Role::Validator),
                role(Role::Curator),
                role(Role::Reporter),
                e.total_paid,
                e.gini,
                e.consensus_error.map(|x| x.to_string()).unwrap_or_default(),
                e.finalized,
                e.attacker_profit,
                e.honest_equivalent_profit,
                e.spam_survival,
                e.dedup_ratio,
                e.uses,
                e.pool,
                e.conserved
            );
        }
        out
    }

    /// No epoch broke conservation or any other invariant.
    pub fn invariants_hold(&self) -> bool {
        self.supply_conserved && self.epochs.iter().all(|e| e.conserved && e.invariant_violations.is_empty())
    }
}

/// Accumulates one epoch's observations.
pub(super) struct EpochTracker {
    sybil_start: Amount,
    validator_start: Amount,
    errors: Vec<f64>,
    reporter_paid: Amount,
    spam_finalized: u64,
    spam_validated: u64,
}

impl EpochTracker {
    pub fn start(node: &Node, kinds: &BTreeMap<AgentKind, Vec<Address>>) -> Self {
        let mut t = EpochTracker {
            sybil_start: Amount::ZERO,
            validator_start: Amount::ZERO,
            errors: Vec::new(),
            reporter_paid: Amount::ZERO,
            spam_finalized: 0,
            spam_validated: 0,
        };
        t.snapshot(node, kinds);
        t
    }

    fn snapshot(&mut self, node: &Node, kinds: &BTreeMap<AgentKind, Vec<Address>>) {
        self.sybil_start = wealth(node, kinds.get(&AgentKind::Sybil).map_or(&[], Vec::as_slice));
        self.validator_start = wealth(node, kinds.get(&AgentKind::Validator).map_or(&[], Vec::as_slice));
    }

    pub fn finalized(&mut self, result: &ConsensusResult, truth: Option<&PromptTruth>) {
        let Some(t) = truth else { return };
        self.errors.push((f64::from(result.consensus_score) - t.quality).abs());
        if t.author == AgentKind::Spammer {
            self.spam_finalized += 1;
            self.spam_validated += u64::from(result.final_state == LifecycleState::Validated);
        }
    }

    pub fn resolved(&mut self, dispute: &Dispute) {
        self.reporter_paid += dispute.reporter_reward;
    }

    pub fn close(
        &mut self,
        node: &Node,
        report: &EpochReport,
        kinds: &BTreeMap<AgentKind, Vec<Address>>,
    ) -> EpochMetrics {
        let mut rewards_by_role: BTreeMap<Role, Amount> = BTreeMap::new();
        for p in &report.payouts {
            *rewards_by_role.entry(p.role).or_insert(Amount::ZERO) += p.paid;
        }
        if !self.reporter_paid.is_zero() {
            *rewards_by_role.entry(Role::Reporter).or_insert(Amount::ZERO) += self.reporter_paid;
        }
        let everyone: Vec<Amount> = kinds.values().flatten().map(|a| node.ledger().balance(a) + node.ledger().staked(a)).collect();
        let sybils = kinds.get(&AgentKind::Sybil).map_or(&[][..], Vec::as_slice);
        let validators = kinds.get(&AgentKind::Validator).map_or(&[][..], Vec::as_slice);
        let attacker_profit = signed_pct(wealth(node, sybils), self.sybil_start);
        let honest_equivalent_profit = if validators.is_empty() {
            0.0
        } else {
            signed_pct(wealth(node, validators), self.validator_start) / validators.len() as f64 * sybils.len() as f64
        };
        let violations = node.check_invariants();
        let row = EpochMetrics {
            epoch: report.epoch,
            rewards_by_role,
            total_paid: report.total_paid + self.reporter_paid,
            gini: if everyone.is_empty() { 0.0 } else { gini(&everyone).expect("non-empty") },
            consensus_error: (!self.errors.is_empty()).then(|| self.errors.iter().sum::<f64>() / self.errors.len() as f64),
            finalized: self.errors.len() as u64,
            attacker_profit,
            honest_equivalent_profit,
            spam_survival: if self.spam_finalized == 0 { 0.0 } else { self.spam_validated as f64 / self.spam_finalized as f64 },
            dedup_ratio: node.store().stats().dedup_ratio,
            uses: report.usage,
            pool: node.ledger().pool(),
            conserved: node.ledger().is_conserved(),
            invariant_violations: violations,
        };
        self.errors.clear();
        self.reporter_paid = Amount::ZERO;
        self.snapshot(node, kinds);
        row
    }
}

pub(super) fn summarize(
    epochs: Vec<EpochMetrics>,
    node: &Node,
    truth: &BTreeMap<crate::registry::PromptId, PromptTruth>,
    mut creators: Vec<(Address, f64)>,
    kinds: &BTreeMap<AgentKind, Vec<Address>>,
    initial: &BTreeMap<Address, Amount>,
    rejections: BTreeMap<String, u64>,
) -> ScenarioMetrics {
    let mut creator_paid: BTreeMap<Address, Amount> = BTreeMap::new();
    for report in node.epoch_reports() {
        for p in report.payouts.iter().filter(|p| p.role == Role::Creator) {
            *creator_paid.entry(p.address).or_insert(Amount::ZERO) += p.paid;
        }
    }
    let n_epochs = epochs.len().max(1) as f64;
    creators.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let groups = creators.len().min(10);
    let creator_reward_by_decile: Vec<f64> = (0..groups)
        .map(|g| {
            let lo = g * creators.len() / groups;
            let hi = (g + 1) * creators.len() / groups;
            let members = &creators[lo..hi];
            let total: f64 = members.iter().map(|(a, _)| creator_paid.get(a).map_or(0.0, |x| x.as_pct_f64())).sum();
            total / members.len() as f64 / n_epochs
        })
        .collect();

    let net_by_kind: BTreeMap<AgentKind, f64> = kinds
        .iter()
        .map(|(k, addrs)| {
            let before: Amount = addrs.iter().map(|a| initial[a]).sum();
            (*k, signed_pct(wealth(node, addrs), before))
        })
        .collect();
    let spam_prompts = truth.values().filter(|t| t.author == AgentKind::Spammer).count() as u64;
    let spam_net_per_prompt = (spam_prompts > 0).then(|| net_by_kind.get(&AgentKind::Spammer).copied().unwrap_or(0.0) / spam_prompts as f64);

    ScenarioMetrics {
        epochs,
        creator_reward_by_decile,
        net_by_kind,
        prompts: node.registry().len() as u64,
        spam_prompts,
        spam_net_per_prompt,
        events: node.journal().len() as u64,
        total_supply: node.ledger().total_supply(),
        supply_conserved: node.ledger().is_conserved(),
        state_digest: node.state_digest(),
        rejections,
    }
}
