//! Token ledger, reward formulas, reputation and epoch settlement.

mod collections;
mod epoch;
mod ledger;
mod reputation;
mod rewards;

pub use collections::Collection;
pub use epoch::{
    creator_claims, curator_claims, distribute_epoch, payouts_csv, settle, validator_claims, Claim, Payout,
    RewardableBallot, Role,
};
pub use ledger::{EntryKind, Ledger, LedgerEntry, LedgerError};
pub use reputation::{reputation, EngagementPolicy, LogEngagement, ReputationInputs, ReputationRecord};
pub use rewards::{
    adjust_params, ballot_accuracy, creator_reward, creator_reward_raw, curator_reward, curator_reward_raw,
    validator_reward, validator_reward_raw, AdjustPolicy, EconomicParams, FeeSchedule, LogReporterReward, ReporterRewardPolicy,
    RewardRange,
};
