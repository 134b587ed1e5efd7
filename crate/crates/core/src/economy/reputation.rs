//! Reputation as the cube root of prompt quality, validation accuracy and
//! community engagement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReputationInputs {
    pub prompt_quality: f64,
    pub validation_accuracy: f64,
    pub community_engagement: f64,
}

/// `∛(Q·V·C)`; zero whenever any component is zero, and exactly `x` when all
/// three equal `x`. Components are multiplied in sorted order so the result
/// is exactly symmetric.
pub fn reputation(inputs: &ReputationInputs) -> f64 {
    let mut xs = [inputs.prompt_quality, inputs.validation_accuracy, inputs.community_engagement];
    xs.sort_by(f64::total_cmp);
    if xs[0] <= 0.0 || xs[0].is_nan() {
        return 0.0;
    }
    if xs[0] == xs[2] {
        return xs[0];
    }
    (xs[0] * xs[1] * xs[2]).cbrt()
}

/// Maps a raw activity count to the engagement component.
pub trait EngagementPolicy {
    fn engagement(&self, activity: u64) -> f64;
}

/// `min(10, ln(1 + activity))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogEngagement;

impl EngagementPolicy for LogEngagement {
    fn engagement(&self, activity: u64) -> f64 {
        (activity as f64).ln_1p().min(10.0)
    }
}

/// Per-address history the reputation inputs are computed from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReputationRecord {
    /// Prompts that finalized as Validated.
    pub validated_prompts: u64,
    /// Sum of their consensus scores.
    pub score_sum: u64,
    /// Finalized ballots.
    pub ballots: u64,
    /// Finalized ballots that were not slashed.
    pub unslashed: u64,
    /// Comments, ballots, curated collections and dispute participation.
    pub activity: u64,
    /// Unslashed ballots per prompt domain.
    pub domain_credit: BTreeMap<String, u64>,
}

impl ReputationRecord {
    pub fn inputs(&self, policy: &dyn EngagementPolicy) -> ReputationInputs {
        let prompt_quality = if self.validated_prompts == 0 {
            0.0
        } else {
            self.score_sum as f64 / self.validated_prompts as f64
        };
        let validation_accuracy = if self.ballots == 0 {
            0.0
        } else {
            10.0 * self.unslashed as f64 / self.ballots as f64
        };
        ReputationInputs {
            prompt_quality,
            validation_accuracy,
            community_engagement: policy.engagement(self.activity),
        }
    }

    pub fn score(&self, policy: &dyn EngagementPolicy) -> f64 {
        reputation(&self.inputs(policy))
    }

    pub fn credit_in(&self, domain: &str) -> u64 {
        self.domain_credit.get(domain).copied().unwrap_or(0)
    }

    /// Adds `other`'s counters to this record.
    pub fn absorb(&mut self, other: &ReputationRecord) {
        self.validated_prompts += other.validated_prompts;
        self.score_sum += other.score_sum;
        self.ballots += other.ballots;
        self.unslashed += other.unslashed;
        self.activity += other.activity;
        for (d, c) in &other.domain_credit {
            *self.domain_credit.entry(d.clone()).or_default() += c;
        }
    }
}
