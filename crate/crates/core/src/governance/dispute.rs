use serde::{Deserialize, Serialize};

use crate::primitives::{Address, Amount, UnixTime};
use crate::registry::PromptId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Uphold,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisputeOutcome {
    Upheld,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisputeVote {
    pub voter: Address,
    /// Voter reputation when the vote was counted.
    pub weight: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispute {
    pub id: u64,
    pub prompt_id: PromptId,
    pub reporter: Address,
    pub stake: Amount,
    pub violation: String,
    pub domain: String,
    pub opened_at: UnixTime,
    /// Minimum reputation needed to vote, fixed when the dispute opens.
    pub voter_threshold: f64,
    pub votes: Vec<DisputeVote>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<DisputeOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_at: Option<UnixTime>,
    pub creator_slashed: Amount,
    pub reporter_reward: Amount,
}

impl Dispute {
    pub fn is_open(&self) -> bool {
        self.outcome.is_none()
    }

    pub fn has_voted(&self, voter: &Address) -> bool {
        self.votes.iter().any(|v| v.voter == *voter)
    }
}

/// Reputation-weighted majority. A tie keeps the status quo and rejects.
pub fn tally_dispute(votes: &[DisputeVote]) -> DisputeOutcome {
    let (up, down) = votes.iter().fold((0.0, 0.0), |(u, d), v| match v.verdict {
        Verdict::Uphold => (u + v.weight, d),
        Verdict::Reject => (u, d + v.weight),
    });
    if up > down {
        DisputeOutcome::Upheld
    } else {
        DisputeOutcome::Rejected
    }
}

/// Nearest-rank percentile of the nonzero reputations. With no nonzero
/// reputation at all the threshold is zero, and only positive reputations can
/// ever vote.
pub fn voter_threshold(reputations: impl IntoIterator<Item = f64>, percentile: u32) -> f64 {
    let mut xs: Vec<f64> = reputations.into_iter().filter(|r| *r > 0.0).collect();
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let rank = (u64::from(percentile.min(100)) * xs.len() as u64).div_ceil(100).max(1) as usize;
    xs[rank - 1]
}

/// A resolved dispute kept as precedent for similar cases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precedent {
    pub dispute_id: u64,
    pub prompt_id: PromptId,
    pub domain: String,
    pub violation: String,
    pub outcome: DisputeOutcome,
    pub resolved_at: UnixTime,
}

/// Append-only log of resolved disputes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecedentLog {
    entries: Vec<Precedent>,
}

impl PrecedentLog {
    pub fn append(&mut self, p: Precedent) {
        self.entries.push(p);
    }

    pub fn entries(&self) -> &[Precedent] {
        &self.entries
    }

    pub fn by_domain<'a>(&'a self, domain: &'a str) -> impl Iterator<Item = &'a Precedent> + 'a {
        self.entries.iter().filter(move |p| p.domain == domain)
    }

    pub fn matching<'a>(&'a self, domain: &'a str, violation: &'a str) -> impl Iterator<Item = &'a Precedent> + 'a {
        self.by_domain(domain).filter(move |p| p.violation == violation)
    }
}
