use std::collections::BTreeMap;

use promptchain_core::economy::EntryKind;
use promptchain_core::governance::{finalize_ballots, BallotOutcome, GovernanceError, GovernanceParams, ValidationBallot};
use promptchain_core::journal::{Command, GenesisAllocation, Outcome};
use promptchain_core::model::PromptDocument;
use promptchain_core::node::{Node, NodeConfig, NodeError};
use promptchain_core::registry::{LifecycleState, PromptId};
use promptchain_core::{Address, Amount, UNITS_PER_PCT};

use crate::world::{seasoned, T0};
use crate::Report;

const MAX_BALLOTS: usize = 6;

/// Every multiset of at most `max` items drawn from `items`, as index lists
/// in non-decreasing order.
pub fn multisets(items: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &frontier {
            let start = m.last().copied().unwrap_or(0);
            for i in start..items {
                let mut grown: Vec<usize> = m.clone();
                grown.push(i);
                next.push(grown);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// The half-up rounded weighted mean, found by searching for the integer
/// whose half-open interval `[c - 1/2, c + 1/2)` holds `N / D`.
pub fn consensus_oracle(ballots: &[(u32, u8)]) -> u8 {
    let n: i64 = ballots.iter().map(|(w, s)| i64::from(*w) * i64::from(*s)).sum();
    let d: i64 = ballots.iter().map(|(w, _)| i64::from(*w)).sum();
    (0..=10i64)
        .find(|c| (2 * c - 1) * d <= 2 * n && 2 * n < (2 * c + 1) * d)
        .expect("mean of scores in 0..=10") as u8
}

#[derive(Debug, Clone, PartialEq)]
enum Expected {
    Slashed { slashed: Amount, returned: Amount },
    Kept { returned: Amount, accuracy: f64 },
}

fn expected_outcome(score: u8, consensus: u8, stake: Amount) -> Expected {
    let distance = score.abs_diff(consensus);
    if distance > 2 {
        let slashed = Amount::from_units(stake.units() / 2);
        Expected::Slashed { slashed, returned: Amount::from_units(stake.units() - slashed.units()) }
    } else {
        Expected::Kept { returned: stake, accuracy: f64::from(10 - distance) / 10.0 }
    }
}

fn matches(got: &BallotOutcome, want: &Expected) -> bool {
    match (got, want) {
        (BallotOutcome::Slashed { slashed, returned }, Expected::Slashed { slashed: s, returned: r }) => slashed == s && returned == r,
        (BallotOutcome::Rewarded { returned, accuracy }, Expected::Kept { returned: r, accuracy: a }) => {
            returned == r && (accuracy - a).abs() < 1e-12
        }
        _ => false,
    }
}

fn expected_state(consensus: u8) -> LifecycleState {
    if consensus >= 3 {
        LifecycleState::Validated
    } else {
        LifecycleState::Disputed
    }
}

/// Odd unit counts so that halving has a remainder to round.
fn stake_of(slot: usize) -> Amount {
    Amount::from_units(50 * UNITS_PER_PCT + 7 * slot as u128 + 1)
}

fn pure_grid() -> Result<usize, String> {
    let items: Vec<(u32, u8)> = (0..=10u8).flat_map(|s| [(1, s), (3, s)]).collect();
    let params = GovernanceParams::default();
    let mut checked = 0;
    for m in multisets(items.len(), MAX_BALLOTS) {
        let picked: Vec<(u32, u8)> = m.iter().map(|i| items[*i]).collect();
        let ballots: Vec<ValidationBallot> = picked
            .iter()
            .enumerate()
            .map(|(slot, (w, s))| ValidationBallot {
                validator: Address([slot as u8 + 1; 20]),
                prompt_id: PromptId([0; 32]),
                score: *s,
                stake: stake_of(slot),
                expertise_domains: vec![],
                comment: String::new(),
                weight: *w,
                submitted_at: 0,
            })
            .collect();
        let got = finalize_ballots(PromptId([0; 32]), &ballots, &params);
        if picked.len() < 3 {
            if got != Err(GovernanceError::QuorumNotMet { have: picked.len(), need: 3 }) {
                return Err(format!("{picked:?}: expected quorum failure, got {got:?}"));
            }
            checked += 1;
            continue;
        }
        let got = got.map_err(|e| format!("{picked:?}: {e}"))?;
        let c = consensus_oracle(&picked);
        if got.consensus_score != c || got.final_state != expected_state(c) {
            return Err(format!("{picked:?}: consensus {} {:?}, expected {c}", got.consensus_score, got.final_state));
        }
        for (slot, ((addr, outcome), (_, s))) in got.outcomes.iter().zip(&picked).enumerate() {
            let want = expected_outcome(*s, c, stake_of(slot));
            if *addr != ballots[slot].validator || !matches(outcome, &want) {
                return Err(format!("{picked:?}: ballot {slot} gave {outcome:?}, expected {want:?}"));
            }
        }
        checked += 1;
    }
    Ok(checked)
}

const DOMAIN: &str = "legal";
const BALANCE: u64 = 10_000;
const POOL: u64 = 100_000;

fn run_on_node(picked: &[(u32, u8)]) -> Result<(), String> {
    let creator = Address::derive("c5-creator");
    let operator = Address::derive("c5-operator");
    let validators: Vec<Address> = (0..MAX_BALLOTS).map(|i| Address::derive(&format!("c5-validator-{i}"))).collect();
    let mut allocations = vec![
        GenesisAllocation { address: creator, balance: Amount::pct(BALANCE), reputation: None },
        GenesisAllocation { address: operator, balance: Amount::ZERO, reputation: None },
    ];
    allocations.extend(validators.iter().map(|v| GenesisAllocation { address: *v, balance: Amount::pct(BALANCE), reputation: Some(seasoned()) }));
    let mut node = Node::with_genesis(NodeConfig::default(), allocations, Amount::pct(POOL), T0).map_err(|e| e.to_string())?;

    let doc = PromptDocument::minimal(creator, T0, "Clause finder", DOMAIN, "Find the indemnity clause.");
    let cid = match node.execute(Some(creator), T0 + 1, Command::StoreDocument { document: doc }) {
        Ok(Outcome::Stored { cid }) => cid,
        other => return Err(format!("store: {other:?}")),
    };
    let prompt_id = match node.execute(Some(creator), T0 + 2, Command::Register { cid, parent: None }) {
        Ok(Outcome::Registered(r)) => r.prompt_id,
        other => return Err(format!("register: {other:?}")),
    };
    for (slot, (w, s)) in picked.iter().enumerate() {
        let expertise = if *w == 3 { vec![DOMAIN.to_owned()] } else { vec![] };
        let cmd = Command::SubmitValidation { prompt_id, score: *s, stake: stake_of(slot), expertise, comment: String::new() };
        match node.execute(Some(validators[slot]), T0 + 3, cmd) {
            Ok(Outcome::Ballot(b)) if b.weight == *w => {}
            other => return Err(format!("ballot {slot}: {other:?}")),
        }
    }

    let pool_before = node.ledger().pool();
    let entries_before = node.ledger().journal().len();
    let result = node.execute(Some(operator), T0 + 4, Command::Finalize { prompt_id });
    let state = node.registry().get(&prompt_id).map_err(|e| e.to_string())?.state;
    if picked.len() < 3 {
        let refused = matches!(result, Err(NodeError::QuorumNotMet { have, need: 3 }) if have == picked.len());
        if !refused || state != LifecycleState::UnderValidation || node.ledger().journal().len() != entries_before {
            return Err(format!("expected quorum failure with no effect, got {result:?} and state {state}"));
        }
        return Ok(());
    }
    let r = match result {
        Ok(Outcome::Finalized(r)) => r,
        other => return Err(format!("finalize: {other:?}")),
    };
    let c = consensus_oracle(picked);
    if r.consensus_score != c || state != expected_state(c) {
        return Err(format!("consensus {} state {state}, expected {c} {:?}", r.consensus_score, expected_state(c)));
    }

    let mut slashed_total = 0u128;
    let by_addr: BTreeMap<Address, &BallotOutcome> = r.outcomes.iter().map(|(a, o)| (*a, o)).collect();
    for (slot, (_, s)) in picked.iter().enumerate() {
        let v = validators[slot];
        let want = expected_outcome(*s, c, stake_of(slot));
        let got = by_addr.get(&v).ok_or_else(|| format!("no outcome for ballot {slot}"))?;
        if !matches(got, &want) {
            return Err(format!("ballot {slot}: {got:?}, expected {want:?}"));
        }
        let lost = match want {
            Expected::Slashed { slashed, .. } => slashed.units(),
            Expected::Kept { .. } => 0,
        };
        slashed_total += lost;
        let balance = node.ledger().balance(&v).units();
        if balance != Amount::pct(BALANCE).units() - lost || !node.ledger().staked(&v).is_zero() {
            return Err(format!("validator {slot} holds {} with {} staked", node.ledger().balance(&v), node.ledger().staked(&v)));
        }
    }
    let creator_loss = match expected_state(c) {
        LifecycleState::Validated => 0,
        _ => 50 * UNITS_PER_PCT,
    };
    if node.ledger().balance(&creator).units() != Amount::pct(BALANCE).units() - creator_loss {
        return Err(format!("creator holds {}", node.ledger().balance(&creator)));
    }
    let slashes: u128 =
        node.ledger().journal()[entries_before..].iter().filter(|e| e.kind == EntryKind::Slash).map(|e| e.amount.units()).sum();
    if node.ledger().pool().units() != pool_before.units() + slashed_total + creator_loss || slashes != slashed_total + creator_loss {
        return Err(format!("pool moved from {pool_before} to {}", node.ledger().pool()));
    }
    Ok(())
}

fn node_grid() -> Result<usize, String> {
    let items: Vec<(u32, u8)> = (0..=5u8).flat_map(|s| [(1, 2 * s), (3, 2 * s)]).collect();
    let mut checked = 0;
    for m in multisets(items.len(), MAX_BALLOTS).into_iter().filter(|m| !m.is_empty()) {
        let picked: Vec<(u32, u8)> = m.iter().map(|i| items[*i]).collect();
        run_on_node(&picked).map_err(|e| format!("{picked:?}: {e}"))?;
        checked += 1;
    }
    Ok(checked)
}

pub fn run() -> Report {
    let pure = match pure_grid() {
        Ok(n) => n,
        Err(e) => return Report::fail(format!("full grid: {e}")),
    };
    let node = match node_grid() {
        Ok(n) => n,
        Err(e) => return Report::fail(format!("node grid: {e}")),
    };
    Report::pass(format!("{pure} multisets on the full grid, {node} through the node on the even-score grid"))
}
