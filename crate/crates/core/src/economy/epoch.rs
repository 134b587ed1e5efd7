//! Epoch settlement: turning the epoch's activity into reward claims and
//! paying them from the pool.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::collections::Collection;
use super::ledger::Ledger;
use super::rewards::{
    creator_reward, curator_reward, validator_reward, EconomicParams, RewardRange,
};
use crate::primitives::{Address, Amount};
use crate::registry::{LifecycleState, PromptId, PromptRecord, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Creator,
    Validator,
    Curator,
    Reporter,
}

impl Role {
    pub fn range(self) -> RewardRange {
        match self {
            Role::Creator => RewardRange::CREATOR,
            Role::Validator => RewardRange::VALIDATOR,
            Role::Curator => RewardRange::CURATOR,
            Role::Reporter => RewardRange::REPORTER,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Creator => "creator",
            Role::Validator => "validator",
            Role::Curator => "curator",
            Role::Reporter => "reporter",
        })
    }
}

/// A ballot that finalized inside the consensus band and awaits payment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardableBallot {
    pub validator: Address,
    pub prompt_id: PromptId,
    pub accuracy: f64,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub role: Role,
    pub address: Address,
    pub amount: Amount,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payout {
    pub role: Role,
    pub address: Address,
    pub owed: Amount,
    pub paid: Amount,
    pub cause: String,
}

/// One claim per Validated prompt used this epoch.
pub fn creator_claims<'a>(records: impl IntoIterator<Item = &'a PromptRecord>, params: &EconomicParams) -> Vec<Claim> {
    records
        .into_iter()
        .filter(|r| r.state == LifecycleState::Validated && r.epoch_uses > 0)
        .filter_map(|r| {
            let amount = creator_reward(r.validation_score.unwrap_or(0), r.epoch_uses, r.derivative_count, params);
            (!amount.is_zero()).then(|| Claim {
                role: Role::Creator,
                address: r.creator,
                amount,
                cause: format!("prompt:{}", r.prompt_id),
            })
        })
        .collect()
}

pub fn validator_claims(ballots: &[RewardableBallot], params: &EconomicParams) -> Vec<Claim> {
    ballots
        .iter()
        .filter_map(|b| {
            let amount = validator_reward(b.accuracy, b.weight, params);
            (!amount.is_zero()).then(|| Claim {
                role: Role::Validator,
                address: b.validator,
                amount,
                cause: format!("ballot:{}:{}", b.prompt_id, b.validator),
            })
        })
        .collect()
}

/// Quality is the mean score of the collection's Validated members and usage
/// their uses this epoch. Collections without a Validated member earn nothing.
pub fn curator_claims<'a>(
    collections: impl IntoIterator<Item = &'a Collection>,
    registry: &Registry,
    params: &EconomicParams,
) -> Vec<Claim> {
    collections
        .into_iter()
        .filter_map(|c| {
            let members: Vec<&PromptRecord> = c
                .prompts
                .iter()
                .filter_map(|id| registry.get(id).ok())
                .filter(|r| r.state == LifecycleState::Validated)
                .collect();
            if members.is_empty() {
                return None;
            }
            let quality = members.iter().map(|r| f64::from(r.validation_score.unwrap_or(0))).sum::<f64>() / members.len() as f64;
            let usage: u64 = members.iter().map(|r| r.epoch_uses).sum();
            let amount = curator_reward(quality, usage, params);
            (!amount.is_zero()).then(|| Claim {
                role: Role::Curator,
                address: c.curator,
                amount,
                cause: format!("collection:{}", c.id),
            })
        })
        .collect()
}

const UNITS_PER_NANO: u128 = 1_000_000_000;

/// Decides what each claim is paid from a pool of `pool`. When the pool
/// covers every claim they are paid in full. Otherwise each is scaled by
/// `pool / owed` in whole nano-PCT, rounding down, and a scaled amount that
/// falls below its role's minimum is withheld.
pub fn settle(claims: Vec<Claim>, pool: Amount) -> Vec<Payout> {
    let total: Amount = claims.iter().map(|c| c.amount).sum();
    let short = total > pool;
    let pool_nanos = pool.units() / UNITS_PER_NANO;
    let total_nanos = total.units().div_ceil(UNITS_PER_NANO).max(1);
    claims
        .into_iter()
        .map(|c| {
            let paid = if short {
                let nanos = c.amount.units() / UNITS_PER_NANO * pool_nanos / total_nanos;
                let scaled = Amount::from_units(nanos * UNITS_PER_NANO);
                if c.role.range().contains(scaled) { scaled } else { Amount::ZERO }
            } else {
                c.amount
            };
            Payout { role: c.role, address: c.address, owed: c.amount, paid, cause: c.cause }
        })
        .collect()
}

/// Pays every claim the epoch's activity earned. Never mints: the sum paid is
/// at most the pool before the call.
pub fn distribute_epoch(
    ledger: &mut Ledger,
    registry: &Registry,
    rewardable: &[RewardableBallot],
    collections: &BTreeMap<u64, Collection>,
    params: &EconomicParams,
) -> Vec<Payout> {
    let mut claims = creator_claims(registry.records(), params);
    claims.extend(validator_claims(rewardable, params));
    claims.extend(curator_claims(collections.values(), registry, params));
    let payouts = settle(claims, ledger.pool());
    for p in &payouts {
        ledger
            .reward(&p.address, p.paid, &p.cause)
            .expect("settlement never exceeds the pool");
    }
    payouts
}

/// `address,role,amount,cause` with one row per payout.
pub fn payouts_csv(payouts: &[Payout]) -> String {
    let mut out = String::from("address,role,amount,cause\n");
    for p in payouts {
        let _ = writeln!(out, "{},{},{},{}", p.address, p.role, p.paid, p.cause);
    }
    out
}
