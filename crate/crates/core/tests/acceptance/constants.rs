use promptchain_core::economy::{EntryKind, LedgerEntry, Role};
use promptchain_core::journal::{Command, Outcome};
use promptchain_core::node::NodeError;
use promptchain_core::{Amount, UNITS_PER_PCT};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::world::{count_by, Applied, World};
use crate::Report;

const SEQUENCES: u64 = 1_000;
const STEPS: usize = 40;

fn units(pct: u128) -> Amount {
    Amount::from_units(pct * UNITS_PER_PCT)
}

fn tenth() -> Amount {
    Amount::from_units(UNITS_PER_PCT / 10)
}

/// Paid rewards per role, in PCT: creators may earn nothing, the rest are
/// either zero or inside their band.
fn band(role: Role) -> (Amount, Amount) {
    match role {
        Role::Creator => (Amount::ZERO, units(50)),
        Role::Validator => (units(2), units(10)),
        Role::Curator => (units(5), units(25)),
        Role::Reporter => (units(5), units(15)),
    }
}

fn only_stake(a: &Applied, amount: Amount) -> Result<(), String> {
    match a.entries.as_slice() {
        [LedgerEntry { kind: EntryKind::Stake, from: Some(who), amount: got, .. }] if *who == a.caller && *got == amount => Ok(()),
        other => Err(format!("{} locked {:?}, expected one stake of {amount}", a.command.name(), other)),
    }
}

fn rewards(a: &Applied) -> Vec<Amount> {
    a.entries.iter().filter(|e| e.kind == EntryKind::Reward).map(|e| e.amount).collect()
}

fn check(a: &Applied) -> Result<(), String> {
    let name = a.command.name();
    if let Command::SubmitValidation { stake, .. } = &a.command {
        if *stake < units(50) && a.result.is_ok() {
            return Err(format!("ballot with stake {stake} was accepted"));
        }
        if let Err(NodeError::InsufficientStake { required, offered }) = &a.result {
            if *required != units(50) || offered != stake {
                return Err(format!("stake error reports {required} / {offered}"));
            }
        }
    }
    let Ok(outcome) = &a.result else {
        return match a.entries.is_empty() {
            true => Ok(()),
            false => Err(format!("failed {name} moved tokens")),
        };
    };
    match (&a.command, outcome) {
        (Command::Register { .. }, _) => only_stake(a, units(100)),
        (Command::SubmitValidation { stake, .. }, _) => only_stake(a, *stake),
        (Command::CreateCollection { .. }, _) => only_stake(a, units(200)),
        (Command::OpenDispute { .. }, _) => only_stake(a, units(20)),
        (Command::RecordUsage { .. }, _) => match a.entries.as_slice() {
            [LedgerEntry { kind: EntryKind::Fee, amount, .. }] if *amount == tenth() => Ok(()),
            other => Err(format!("usage charged {other:?}")),
        },
        (Command::CloseEpoch, Outcome::Epoch(report)) => {
            for p in &report.payouts {
                let (lo, hi) = band(p.role);
                if !p.paid.is_zero() && (p.paid < lo || p.paid > hi) {
                    return Err(format!("{} paid {} outside [{lo}, {hi}]", p.role, p.paid));
                }
            }
            let mut paid: Vec<Amount> = report.payouts.iter().map(|p| p.paid).filter(|p| !p.is_zero()).collect();
            let mut booked = rewards(a);
            paid.sort();
            booked.sort();
            match paid == booked {
                true => Ok(()),
                false => Err("epoch ledger rewards differ from the report".into()),
            }
        }
        (Command::ResolveDispute { .. }, _) => match rewards(a).iter().find(|r| **r < units(5) || **r > units(15)) {
            Some(r) => Err(format!("reporter paid {r}")),
            None => Ok(()),
        },
        _ => match rewards(a).is_empty() {
            true => Ok(()),
            false => Err(format!("{name} paid a reward")),
        },
    }
}

pub fn run() -> Report {
    let mut ok_by_name = Vec::new();
    let mut rewards_seen = 0usize;
    for seq in 0..SEQUENCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seq);
        let mut w = World::new(&format!("c1-{seq}"), units(1_000_000));
        for _ in 0..STEPS {
            for a in w.random_step(&mut rng) {
                if let Err(e) = check(&a) {
                    return Report::fail(format!("sequence {seq}: {e}"));
                }
                rewards_seen += rewards(&a).len();
                if a.result.is_ok() {
                    ok_by_name.push(a.command.name());
                }
            }
        }
        let last = w.exec(w.operator, Command::CloseEpoch);
        if let Err(e) = check(&last) {
            return Report::fail(format!("sequence {seq}, final epoch: {e}"));
        }
        rewards_seen += rewards(&last).len();
    }
    let counts = count_by(ok_by_name);
    let needed = ["register", "submit_validation", "finalize", "record_usage", "open_dispute", "resolve_dispute", "create_collection", "close_epoch"];
    if let Some(missing) = needed.iter().find(|n| !counts.contains_key(*n)) {
        return Report::fail(format!("no successful {missing} was generated"));
    }
    let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    Report::pass(format!("{SEQUENCES} sequences, {rewards_seen} rewards; {}", summary.join(" ")))
}
