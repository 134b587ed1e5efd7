use std::path::PathBuf;

use promptchain_core::journal::write_ndjson;
use promptchain_core::sim::{ScenarioConfig, Simulation};

use crate::Report;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(path: &std::path::Path) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn quality_alignment() -> Report {
    let config = match load(&dir().join("honest.json")) {
        Ok(c) => c,
        Err(e) => return Report::fail(e),
    };
    let p = &config.populations;
    if p.spammers.count + p.plagiarists.count + p.sybil.identities > 0 {
        return Report::fail("honest scenario contains adversaries");
    }
    let out = match Simulation::new(config) {
        Ok(s) => s.run(),
        Err(e) => return Report::fail(e.to_string()),
    };
    let m = &out.metrics;
    let deciles = &m.creator_reward_by_decile;
    let shown: Vec<String> = deciles.iter().map(|d| format!("{d:.2}")).collect();
    let detail = format!("{} epochs, decile means [{}]", m.epochs.len(), shown.join(", "));
    if m.epochs.len() != 50 || deciles.len() != 10 {
        return Report::fail(detail);
    }
    match deciles.windows(2).all(|w| w[0] < w[1]) {
        true => Report::pass(detail),
        false => Report::fail(detail),
    }
}

fn fingerprint(config: &ScenarioConfig) -> Result<(Vec<u8>, Vec<u8>), String> {
    let out = Simulation::new(config.clone()).map_err(|e| e.to_string())?.run();
    let mut journal = Vec::new();
    write_ndjson(&mut journal, out.journal()).map_err(|e| e.to_string())?;
    let metrics = serde_json::to_vec(&out.metrics).map_err(|e| e.to_string())?;
    Ok((journal, metrics))
}

pub fn determinism() -> Report {
    let mut files: Vec<PathBuf> = match std::fs::read_dir(dir()) {
        Ok(entries) => entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.extension().is_some_and(|x| x == "json")).collect(),
        Err(e) => return Report::fail(format!("scenarios: {e}")),
    };
    files.sort();
    if files.is_empty() {
        return Report::fail("no scenario files");
    }
    let mut names = Vec::new();
    let mut bytes = 0;
    for path in &files {
        let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let result = load(path).and_then(|c| Ok((fingerprint(&c)?, fingerprint(&c)?)));
        match result {
            Ok((a, b)) if a == b => {
                bytes += a.0.len();
                names.push(name);
            }
            Ok((a, b)) => {
                let which = if a.0 != b.0 { "journal" } else { "metrics" };
                return Report::fail(format!("{name}: {which} differs between runs"));
            }
            Err(e) => return Report::fail(e),
        }
    }
    Report::pass(format!("{} identical across two runs ({bytes} journal bytes)", names.join(", ")))
}
