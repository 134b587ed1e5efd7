//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use promptchain_core::api::{ApiConfig, ApiService};
use promptchain_core::governance::ValidationBallot;
use promptchain_core::registry::PromptId;
use promptchain_core::sim::{ScenarioConfig, Simulation};
use promptchain_core::{Address, Amount, ManualClock};

/// A mixed population small enough to run in milliseconds.
pub fn scenario(ticks: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig { seed: 1, ticks, epoch_length: 10, pool: Amount::pct(50_000), ..Default::default() };
    let p = &mut c.populations;
    p.honest_creators.count = 20;
    p.honest_creators.publish_rate = 0.2;
    p.spammers.count = 2;
    p.validators.count = 10;
    p.consumers.count = 10;
    p.curators.count = 2;
    c
}

/// An API service over the state a short scenario leaves behind, with the
/// ids of every registered prompt.
pub fn service(ticks: u64) -> (ApiService, Vec<PromptId>) {
    let outcome = Simulation::new(scenario(ticks)).expect("valid scenario").run();
    let ids = outcome.node.registry().in_order().into_iter().map(|r| r.prompt_id).collect();
    let clock = Arc::new(ManualClock::new(outcome.node.now()));
    let config = ApiConfig { seed: Some(1), ..ApiConfig::default() };
    (ApiService::from_journal(outcome.journal(), clock, config).expect("replayable"), ids)
}

pub fn ballots(scores: &[(u32, u8)]) -> Vec<ValidationBallot> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &(weight, score))| ValidationBallot {
            validator: Address([i as u8; 20]),
            prompt_id: PromptId([0; 32]),
            score,
            stake: Amount::pct(50),
            expertise_domains: vec![],
            comment: String::new(),
            weight,
            submitted_at: 0,
        })
        .collect()
}

/// `n` documents of roughly `size` bytes sharing one long preamble.
pub fn corpus(n: usize, size: usize) -> Vec<Vec<u8>> {
    let preamble = "You are a careful assistant. Answer precisely and keep the requested format. ".repeat(size / 160 + 1);
    (0..n).map(|i| format!("{preamble}\nTask {i}: {}", "x".repeat(size / 2)).into_bytes()).collect()
}
