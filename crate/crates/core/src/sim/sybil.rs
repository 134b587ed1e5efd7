use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ScenarioConfig, SimError, Simulation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SybilRow {
    pub identities: usize,
    /// Honest reviewers outweigh the attacker on every attacked prompt.
    pub honest_majority: bool,
    /// Attacker's net result over the run, in PCT.
    pub attacker_profit: f64,
    /// The same identities and budget voting honestly, same seed.
    pub honest_profit: f64,
    pub epoch_profits: Vec<f64>,
    pub negative_epochs: usize,
}

impl SybilRow {
    pub fn loses_every_epoch(&self) -> bool {
        !self.epoch_profits.is_empty() && self.negative_epochs == self.epoch_profits.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SybilTable {
    pub bias: f64,
    pub budget: crate::primitives::Amount,
    pub reviewers_per_prompt: usize,
    pub rows: Vec<SybilRow>,
}

impl SybilTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("identities,honest_majority,attacker_profit,honest_profit,negative_epochs,epochs\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.identities,
                r.honest_majority,
                r.attacker_profit,
                r.honest_profit,
                r.negative_epochs,
                r.epoch_profits.len()
            );
        }
        out
    }
}

/// Runs `base` once per entry of `ks` with the attacker's budget split over
/// that many identities, and once more with the same identities voting
/// honestly (zero bias) as the baseline.
pub fn sybil_experiment(base: &ScenarioConfig, ks: &[usize]) -> Result<SybilTable, SimError> {
    base.validate()?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(SimError::ConfigInvalid("identity counts must be a non-empty list of positive integers".into()));
    }
    let sybil = &base.populations.sybil;
    let reviewers = base.populations.validators.reviewers_per_prompt;
    let mut rows = Vec::new();
    for &k in ks {
        let mut attack = base.clone();
        attack.populations.sybil.identities = k;
        let mut honest = attack.clone();
        honest.populations.sybil.bias = 0.0;
        let a = Simulation::new(attack)?.run().metrics;
        let h = Simulation::new(honest)?.run().metrics;
        let epoch_profits: Vec<f64> = a.epochs.iter().map(|e| e.attacker_profit).collect();
        rows.push(SybilRow {
            identities: k,
            honest_majority: reviewers > k,
            attacker_profit: epoch_profits.iter().sum(),
            honest_profit: h.epochs.iter().map(|e| e.attacker_profit).sum(),
            negative_epochs: epoch_profits.iter().filter(|p| **p < 0.0).count(),
            epoch_profits,
        });
    }
    Ok(SybilTable { bias: sybil.bias, budget: sybil.budget, reviewers_per_prompt: reviewers, rows })
}
