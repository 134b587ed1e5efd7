//! Stake-weighted validation, slashing and dispute escalation.

mod consensus;
mod dispute;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use consensus::{finalize_ballots, outside_band, tally, BallotOutcome, ConsensusResult, ValidationBallot};
pub use dispute::{tally_dispute, voter_threshold, Dispute, DisputeOutcome, DisputeVote, Precedent, PrecedentLog, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GovernanceError {
    #[error("quorum not met: {have} ballots, {need} required")]
    QuorumNotMet { have: usize, need: usize },
}

/// Runtime-configurable governance constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GovernanceParams {
    pub quorum: usize,
    /// Ballots further than this from consensus are slashed.
    pub slash_band: u8,
    /// Share of a slashed ballot's stake sent to the pool, in basis points.
    pub slash_fraction_bps: u32,
    pub expert_multiplier: u32,
    pub min_validator_rep: f64,
    /// Unslashed ballots in a domain needed before a declared expertise counts.
    pub expert_min_credit: u64,
    /// Consensus at or above this finalizes as Validated, below as Disputed.
    pub accept_threshold: u8,
    /// Dispute voters must reach this percentile of nonzero reputations.
    pub dispute_voter_percentile: u32,
}

impl Default for GovernanceParams {
    fn default() -> Self {
        GovernanceParams {
            quorum: 3,
            slash_band: 2,
            slash_fraction_bps: 5_000,
            expert_multiplier: 3,
            min_validator_rep: 1.0,
            expert_min_credit: 3,
            accept_threshold: 3,
            dispute_voter_percentile: 90,
        }
    }
}
