//! Reward formulas and the per-epoch parameter controller.

use serde::{Deserialize, Serialize};

use crate::primitives::Amount;

/// Reward coefficients plus the last observed velocity and cumulative usage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Pool outflow in the last epoch over total supply.
    pub token_velocity: f64,
    pub total_usage: u64,
}

impl Default for EconomicParams {
    fn default() -> Self {
        EconomicParams {
            alpha: 0.01,
            beta: 4.0,
            gamma: 0.005,
            token_velocity: 0.0,
            total_usage: 0,
        }
    }
}

/// Inclusive per-epoch range for a positive reward, in PCT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardRange {
    pub min: f64,
    pub max: f64,
}

impl RewardRange {
    pub const CREATOR: RewardRange = RewardRange { min: 0.0, max: 50.0 };
    pub const VALIDATOR: RewardRange = RewardRange { min: 2.0, max: 10.0 };
    pub const CURATOR: RewardRange = RewardRange { min: 5.0, max: 25.0 };
    pub const REPORTER: RewardRange = RewardRange { min: 5.0, max: 15.0 };

    /// Zero and negative rewards stay zero; positive ones are clamped.
    pub fn apply(self, raw: f64) -> f64 {
        if raw.is_nan() || raw <= 0.0 {
            0.0
        } else {
            raw.clamp(self.min, self.max)
        }
    }

    pub fn contains(self, paid: Amount) -> bool {
        paid.is_zero() || (Amount::from_pct_f64(self.min) <= paid && paid <= Amount::from_pct_f64(self.max))
    }
}

/// `α·Q·U·(1 + ln max(D, 1))` before clamping.
pub fn creator_reward_raw(q: u8, u: u64, d: u64, params: &EconomicParams) -> f64 {
    let multiplier = 1.0 + (d.max(1) as f64).ln();
    params.alpha * f64::from(q) * u as f64 * multiplier
}

pub fn creator_reward(q: u8, u: u64, d: u64, params: &EconomicParams) -> Amount {
    Amount::from_pct_f64(RewardRange::CREATOR.apply(creator_reward_raw(q, u, d, params)))
}

/// Accuracy of a ballot against the consensus, on [0, 1].
pub fn ballot_accuracy(score: u8, consensus: u8) -> f64 {
    1.0 - f64::from(score.abs_diff(consensus)) / 10.0
}

/// `β·accuracy·E` before clamping.
pub fn validator_reward_raw(accuracy: f64, expertise: u32, params: &EconomicParams) -> f64 {
    params.beta * accuracy * f64::from(expertise)
}

pub fn validator_reward(accuracy: f64, expertise: u32, params: &EconomicParams) -> Amount {
    Amount::from_pct_f64(RewardRange::VALIDATOR.apply(validator_reward_raw(accuracy, expertise, params)))
}

/// `γ·C_quality·C_usage` before clamping.
pub fn curator_reward_raw(quality: f64, usage: u64, params: &EconomicParams) -> f64 {
    params.gamma * quality * usage as f64
}

pub fn curator_reward(quality: f64, usage: u64, params: &EconomicParams) -> Amount {
    Amount::from_pct_f64(RewardRange::CURATOR.apply(curator_reward_raw(quality, usage, params)))
}

/// How the reporter of an upheld dispute is paid.
pub trait ReporterRewardPolicy {
    fn reward(&self, slashed: Amount) -> Amount;
}

/// `5 + 2·log2(slashed / 10 PCT)`, clamped to the reporter range.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogReporterReward;

impl ReporterRewardPolicy for LogReporterReward {
    fn reward(&self, slashed: Amount) -> Amount {
        let ratio = slashed.as_pct_f64() / 10.0;
        let raw = if ratio > 0.0 { 5.0 + 2.0 * ratio.log2() } else { 5.0 };
        Amount::from_pct_f64(raw.clamp(RewardRange::REPORTER.min, RewardRange::REPORTER.max))
    }
}

/// Controller settings for [`adjust_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdjustPolicy {
    pub target_velocity: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub epsilon: f64,
    /// Each coefficient stays within `[default / bound_factor, default * bound_factor]`.
    pub bound_factor: f64,
    pub anchor: EconomicParams,
}

impl Default for AdjustPolicy {
    fn default() -> Self {
        AdjustPolicy {
            target_velocity: 0.02,
            min_step: 0.9,
            max_step: 1.1,
            epsilon: 1e-9,
            bound_factor: 4.0,
            anchor: EconomicParams::default(),
        }
    }
}

impl AdjustPolicy {
    pub fn step(&self, epoch_velocity: f64) -> f64 {
        (self.target_velocity / epoch_velocity.max(self.epsilon)).clamp(self.min_step, self.max_step)
    }

    fn bound(&self, value: f64, anchor: f64) -> f64 {
        value.clamp(anchor / self.bound_factor, anchor * self.bound_factor)
    }
}

/// Scales α, β and γ by the damped ratio of target to observed velocity and
/// keeps each within its bounds.
pub fn adjust_params(current: &EconomicParams, policy: &AdjustPolicy, epoch_velocity: f64, epoch_usage: u64) -> EconomicParams {
    let k = policy.step(epoch_velocity);
    EconomicParams {
        alpha: policy.bound(current.alpha * k, policy.anchor.alpha),
        beta: policy.bound(current.beta * k, policy.anchor.beta),
        gamma: policy.bound(current.gamma * k, policy.anchor.gamma),
        token_velocity: epoch_velocity,
        total_usage: current.total_usage + epoch_usage,
    }
}

/// Fixed stakes and fees per action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeeSchedule {
    pub registration_stake: Amount,
    pub min_validation_stake: Amount,
    pub collection_stake: Amount,
    pub usage_fee: Amount,
    pub report_stake: Amount,
    /// Charged per replica beyond the first, per epoch.
    pub pin_fee_per_replica: Amount,
}

impl Default for FeeSchedule {
    fn default() -> Self {
        FeeSchedule {
            registration_stake: Amount::pct(100),
            min_validation_stake: Amount::pct(50),
            collection_stake: Amount::pct(200),
            usage_fee: Amount::from_decimal(1, 1),
            report_stake: Amount::pct(20),
            pin_fee_per_replica: Amount::pct(1),
        }
    }
}
