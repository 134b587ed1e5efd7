use promptchain_core::Amount;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::world::{count_by, World};
use crate::Report;

const OPERATIONS: usize = 10_000;

pub fn run() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut w = World::new("c4", Amount::pct(200_000));
    let mut issued = 0;
    let mut applied = Vec::new();
    while issued < OPERATIONS {
        for a in w.random_step(&mut rng) {
            issued += 1;
            let held = w.holdings();
            if held != w.supply || w.node.ledger().total_supply() != w.supply {
                return Report::fail(format!(
                    "after operation {issued} ({}): holdings {held}, ledger supply {}, genesis {}",
                    a.command.name(),
                    w.node.ledger().total_supply(),
                    w.supply
                ));
            }
            if a.result.is_ok() {
                applied.push(a.command.name());
            }
        }
    }
    let counts = count_by(applied);
    let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    Report::pass(format!("{issued} operations, supply {} held throughout; {}", w.supply, summary.join(" ")))
}
