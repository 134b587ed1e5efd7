use serde::{Deserialize, Serialize};

use super::{GovernanceError, GovernanceParams};
use crate::economy::ballot_accuracy;
use crate::primitives::{Address, Amount, UnixTime};
use crate::registry::{LifecycleState, PromptId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationBallot {
    pub validator: Address,
    pub prompt_id: PromptId,
    pub score: u8,
    pub stake: Amount,
    pub expertise_domains: Vec<String>,
    pub comment: String,
    pub weight: u32,
    pub submitted_at: UnixTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BallotOutcome {
    /// Inside the band: stake returned in full, reward owed at epoch close.
    Rewarded { returned: Amount, accuracy: f64 },
    /// Outside the band: part of the stake goes to the pool.
    Slashed { slashed: Amount, returned: Amount },
}

impl BallotOutcome {
    pub fn is_slashed(&self) -> bool {
        matches!(self, BallotOutcome::Slashed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusResult {
    pub prompt_id: PromptId,
    pub consensus_score: u8,
    pub outcomes: Vec<(Address, BallotOutcome)>,
    pub final_state: LifecycleState,
}

/// Weighted mean of `(weight, score)` pairs rounded half up, in exact integer
/// arithmetic: `⌊(2N + D) / 2D⌋` with `N = Σ w·s`, `D = Σ w`.
pub fn tally(ballots: impl IntoIterator<Item = (u32, u8)>) -> Option<u8> {
    let (n, d) = ballots
        .into_iter()
        .fold((0u64, 0u64), |(n, d), (w, s)| (n + u64::from(w) * u64::from(s), d + u64::from(w)));
    (d > 0).then(|| ((2 * n + d) / (2 * d)) as u8)
}

/// Whether a ballot scored `score` lies outside the band around `consensus`.
pub fn outside_band(score: u8, consensus: u8, band: u8) -> bool {
    score.abs_diff(consensus) > band
}

/// Computes the consensus and each ballot's outcome. Pure: applying the
/// outcomes to the ledger is the caller's job.
pub fn finalize_ballots(
    prompt_id: PromptId,
    ballots: &[ValidationBallot],
    params: &GovernanceParams,
) -> Result<ConsensusResult, GovernanceError> {
    if ballots.len() < params.quorum {
        return Err(GovernanceError::QuorumNotMet { have: ballots.len(), need: params.quorum });
    }
    let consensus = tally(ballots.iter().map(|b| (b.weight, b.score))).expect("quorum is at least one ballot");
    let outcomes = ballots
        .iter()
        .map(|b| {
            let outcome = if outside_band(b.score, consensus, params.slash_band) {
                let slashed = b.stake.mul_ratio(u128::from(params.slash_fraction_bps), 10_000);
                BallotOutcome::Slashed { slashed, returned: b.stake - slashed }
            } else {
                BallotOutcome::Rewarded { returned: b.stake, accuracy: ballot_accuracy(b.score, consensus) }
            };
            (b.validator, outcome)
        })
        .collect();
    let final_state = if consensus >= params.accept_threshold {
        LifecycleState::Validated
    } else {
        LifecycleState::Disputed
    };
    Ok(ConsensusResult { prompt_id, consensus_score: consensus, outcomes, final_state })
}
