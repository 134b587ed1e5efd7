use std::collections::{BTreeMap, BTreeSet};

use promptchain_core::journal::{Command, Outcome};
use promptchain_core::node::NodeError;
use promptchain_core::registry::{PromptId, PromptRecord};
use promptchain_core::Amount;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::world::{World, DOMAINS};
use crate::Report;

const REGISTRATIONS: usize = 500;

fn expected_id(r: &PromptRecord) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(r.cid.0);
    h.update(r.creator.0);
    h.update(r.timestamp.to_be_bytes());
    h.finalize().into()
}

pub fn run() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut w = World::new("c2", Amount::pct(1_000));
    let mut versions: BTreeMap<PromptId, u32> = BTreeMap::new();
    let mut ids = BTreeSet::new();
    let (mut roots, mut forks, mut deepest, mut duplicates) = (0, 0, 0, 0);

    for i in 0..REGISTRATIONS {
        w.now += rng.random_range(0..3);
        let creator = *w.creators.choose(&mut rng).unwrap();
        let known: Vec<PromptId> = versions.keys().copied().collect();
        let parent = if rng.random_bool(0.6) { known.choose(&mut rng).copied() } else { None };
        let domain = *DOMAINS.choose(&mut rng).unwrap();
        let steps = w.publish(creator, domain, parent);
        let rec = match steps.last().map(|a| &a.result) {
            Some(Ok(Outcome::Registered(rec))) => rec.clone(),
            other => return Report::fail(format!("registration {i} failed: {other:?}")),
        };

        let want = match parent {
            None => 1,
            Some(p) => versions[&p] + 1,
        };
        if rec.version != want || rec.parent_id != parent {
            return Report::fail(format!("registration {i}: version {} parent {:?}, expected {want}", rec.version, rec.parent_id));
        }
        if rec.prompt_id.0 != expected_id(&rec) || PromptId::derive(&rec.cid, &rec.creator, rec.timestamp) != rec.prompt_id {
            return Report::fail(format!("registration {i}: id does not match the hash of cid, creator and time"));
        }
        if !ids.insert(rec.prompt_id) {
            return Report::fail(format!("registration {i}: id {} repeated", rec.prompt_id));
        }
        match parent {
            None => roots += 1,
            Some(_) => forks += 1,
        }
        deepest = deepest.max(rec.version);
        versions.insert(rec.prompt_id, rec.version);

        if i % 5 == 0 {
            let again = w.exec(creator, Command::Register { cid: rec.cid, parent });
            match again.result {
                Err(NodeError::DuplicateRegistration(id)) if id == rec.prompt_id && again.entries.is_empty() => duplicates += 1,
                other => return Report::fail(format!("duplicate of registration {i} gave {other:?}")),
            }
        }
    }
    if w.node.registry().len() != REGISTRATIONS {
        return Report::fail(format!("registry holds {} records", w.node.registry().len()));
    }
    Report::pass(format!("{roots} roots, {forks} forks, deepest version {deepest}, {duplicates} duplicates rejected"))
}
