use promptchain_core::sim::{sybil_experiment, ScenarioConfig};

use crate::consensus::consensus_oracle;
use crate::Report;

const BAND: u8 = 2;
const STAKE: f64 = 50.0;
const EPOCHS: usize = 20;

/// What one ballot nets its owner at default parameters, in PCT: half the
/// stake when slashed, otherwise the clamped validator reward.
fn ballot_net(score: u8, consensus: u8, weight: u32) -> f64 {
    let distance = score.abs_diff(consensus);
    if distance > BAND {
        -STAKE / 2.0
    } else {
        let raw = 4.0 * (1.0 - f64::from(distance) / 10.0) * f64::from(weight);
        if raw <= 0.0 {
            0.0
        } else {
            raw.clamp(2.0, 10.0)
        }
    }
}

#[derive(Default)]
struct Tally {
    cases: usize,
    profitable: usize,
    example: Option<String>,
    displaced: usize,
    displaced_profitable: usize,
}

/// Honest reviewers all score the true quality `m`; the attacker's
/// identities all score `t` with `|t - m|` above the band; honest weight
/// exceeds attacker weight.
fn enumerate() -> Tally {
    let mut t = Tally::default();
    for honest in 1..=6usize {
        for honest_experts in 0..=honest {
            let hw = (honest - honest_experts) as u32 + 3 * honest_experts as u32;
            for k in 1..=4usize {
                for attacker_experts in 0..=k {
                    let aw = (k - attacker_experts) as u32 + 3 * attacker_experts as u32;
                    if hw <= aw {
                        continue;
                    }
                    for m in 0..=10u8 {
                        for target in (0..=10u8).filter(|x| x.abs_diff(m) > BAND) {
                            let mut ballots = vec![(1, m); honest - honest_experts];
                            ballots.extend(vec![(3, m); honest_experts]);
                            let attackers: Vec<u32> = std::iter::repeat_n(1, k - attacker_experts).chain(std::iter::repeat_n(3, attacker_experts)).collect();
                            ballots.extend(attackers.iter().map(|w| (*w, target)));
                            let c = consensus_oracle(&ballots);
                            let net: f64 = attackers.iter().map(|w| ballot_net(target, c, *w)).sum();
                            t.cases += 1;
                            if net >= 0.0 {
                                t.profitable += 1;
                                t.example.get_or_insert_with(|| {
                                    format!(
                                        "{honest} honest (weight {hw}) at {m}, {k} identities (weight {aw}) at {target}: consensus {c}, attacker nets {net:+}"
                                    )
                                });
                            }
                            if c.abs_diff(m) > BAND {
                                t.displaced += 1;
                                if net >= 0.0 {
                                    t.displaced_profitable += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    t
}

fn seeded_run() -> Result<String, String> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/sybil.json");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let config: ScenarioConfig = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    if config.populations.sybil.bias <= f64::from(BAND) {
        return Err(format!("scenario bias {} is not above the band", config.populations.sybil.bias));
    }
    let reviewers = config.populations.validators.reviewers_per_prompt;
    let ks: Vec<usize> = (1..reviewers).collect();
    let table = sybil_experiment(&config, &ks).map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    for row in &table.rows {
        if !row.honest_majority {
            return Err(format!("k={} is not outweighed", row.identities));
        }
        if row.epoch_profits.len() != EPOCHS || !row.loses_every_epoch() {
            return Err(format!("k={}: {} of {} epochs negative", row.identities, row.negative_epochs, row.epoch_profits.len()));
        }
        worst = row.epoch_profits.iter().copied().fold(worst, f64::max);
    }
    Ok(format!("seeded run k={ks:?} loses all {EPOCHS} epochs (best epoch {worst:+.2})"))
}

pub fn run() -> Report {
    let seeded = seeded_run();
    let t = enumerate();
    let restated = format!("{} of {} consensus-displacing cases profitable", t.displaced_profitable, t.displaced);
    match seeded {
        Err(e) => Report::fail(format!("seeded run: {e}; {restated}")),
        Ok(s) if t.profitable == 0 => Report::pass(format!("{s}; {} enumerated cases all lose; {restated}", t.cases)),
        Ok(s) => Report::fail(format!(
            "{s}; enumeration: {} of {} cases profitable, e.g. {}; {restated}",
            t.profitable,
            t.cases,
            t.example.unwrap_or_default()
        )),
    }
}
