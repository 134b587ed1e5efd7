use promptchain_core::journal::{Command, Outcome};
use promptchain_core::model::canonical_serialize;
use promptchain_core::Amount;
use sha2::{Digest, Sha256};

use crate::world::World;
use crate::Report;

const DOCUMENTS: usize = 1_000;

fn system_block() -> String {
    let rules = [
        "Cite the governing clause by number before quoting it.",
        "Keep every answer under two hundred words unless asked otherwise.",
        "State plainly when the contract is silent on a point.",
        "Never invent parties, dates or amounts that are not in the text.",
        "Flag any term that conflicts with another term in the same agreement.",
        "Prefer the defined terms of the agreement over everyday wording.",
    ];
    let mut s = String::from("You are a careful contracts analyst working for an in-house legal team.\n");
    for round in 0..4 {
        for (i, r) in rules.iter().enumerate() {
            s.push_str(&format!("{}.{} {r}\n", round + 1, i + 1));
        }
    }
    s
}

pub fn run() -> Report {
    let mut w = World::new("c6", Amount::pct(1_000));
    let system = system_block();
    let mut canonical_total = 0u64;
    let mut stored = Vec::with_capacity(DOCUMENTS);
    for i in 0..DOCUMENTS {
        w.now += 1;
        let creator = w.creators[i % w.creators.len()];
        let mut doc = w.document(creator, "legal", None);
        doc.content.system = system.clone();
        doc.content.user = format!("Summarize clause {i} of the supplied agreement and list its obligations.");
        let bytes = match canonical_serialize(&doc) {
            Ok(b) => b,
            Err(e) => return Report::fail(format!("document {i}: {e}")),
        };
        canonical_total += bytes.len() as u64;
        match w.exec(creator, Command::StoreDocument { document: doc }).result {
            Ok(Outcome::Stored { cid }) => stored.push((cid, bytes)),
            other => return Report::fail(format!("document {i}: {other:?}")),
        }
    }

    let stats = w.node.store().stats();
    if stats.logical_bytes != canonical_total {
        return Report::fail(format!("logical bytes {} but documents total {canonical_total}", stats.logical_bytes));
    }
    for (i, (cid, bytes)) in stored.iter().enumerate() {
        let digest: [u8; 32] = Sha256::digest(bytes).into();
        if cid.0 != digest {
            return Report::fail(format!("document {i}: cid is not the digest of its bytes"));
        }
        match w.node.store().get(cid) {
            Ok(back) if back == *bytes => {}
            Ok(_) => return Report::fail(format!("document {i}: retrieved bytes differ")),
            Err(e) => return Report::fail(format!("document {i}: {e}")),
        }
    }
    let ratio = stats.physical_bytes as f64 / stats.logical_bytes as f64;
    let detail = format!("physical {} / logical {} = {ratio:.3}, {} objects", stats.physical_bytes, stats.logical_bytes, stats.object_count);
    match (stats.physical_bytes as f64) < 0.9 * stats.logical_bytes as f64 {
        true => Report::pass(detail),
        false => Report::fail(detail),
    }
}
