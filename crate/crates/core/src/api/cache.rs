//! Response cache with per-class TTLs and invalidation driven by journal events.

use std::collections::{BTreeSet, HashMap};

use parking_lot::RwLock;
use serde::Serialize;

use crate::journal::Subjects;
use crate::primitives::{Address, UnixTime};
use crate::registry::PromptId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TtlClass {
    Metadata60s,
    Validation300s,
    ImmutablePermanent,
}

impl TtlClass {
    /// Lifetime in seconds, `None` for entries that never expire.
    pub fn ttl(self) -> Option<u64> {
        match self {
            TtlClass::Metadata60s => Some(60),
            TtlClass::Validation300s => Some(300),
            TtlClass::ImmutablePermanent => None,
        }
    }
}

/// Something a cached response was computed from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dependency {
    Prompt(PromptId),
    Address(Address),
    Domain(String),
    Collection(u64),
    /// Any prompt record at all, for listings.
    AnyPrompt,
    /// Pool, parameters and other aggregates.
    Global,
}

#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub key: String,
    pub value: Vec<u8>,
    pub ttl_class: TtlClass,
    pub stored_at: UnixTime,
    pub deps: BTreeSet<Dependency>,
}

impl CacheEntry {
    pub fn is_live(&self, now: UnixTime) -> bool {
        match self.ttl_class.ttl() {
            Some(ttl) => now < self.stored_at + ttl,
            None => true,
        }
    }
}

fn touches(deps: &BTreeSet<Dependency>, s: &Subjects) -> bool {
    deps.iter().any(|d| match d {
        Dependency::Prompt(id) => s.prompts.contains(id),
        Dependency::Address(a) => s.addresses.contains(a),
        Dependency::Domain(x) => s.domains.contains(x),
        Dependency::Collection(c) => s.collections.contains(c),
        Dependency::AnyPrompt => !s.prompts.is_empty(),
        Dependency::Global => s.global,
    })
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub invalidations: u64,
}

#[derive(Debug, Default)]
pub struct ResponseCache {
    entries: RwLock<HashMap<String, CacheEntry>>,
    stats: RwLock<CacheStats>,
}

impl ResponseCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// The cached value for `key` if it is still live.
    pub fn get(&self, key: &str, now: UnixTime) -> Option<Vec<u8>> {
        let hit = self.entries.read().get(key).filter(|e| e.is_live(now)).map(|e| e.value.clone());
        let mut stats = self.stats.write();
        if hit.is_some() {
            stats.hits += 1;
        } else {
            stats.misses += 1;
        }
        hit
    }

    pub fn put(&self, key: String, value: Vec<u8>, ttl_class: TtlClass, deps: BTreeSet<Dependency>, now: UnixTime) {
        let entry = CacheEntry { key: key.clone(), value, ttl_class, stored_at: now, deps };
        self.entries.write().insert(key, entry);
    }

    /// Drops every entry whose dependencies an event touched. Permanent
    /// entries hold immutable data and are never dropped.
    pub fn invalidate(&self, subjects: &Subjects) -> usize {
        let mut entries = self.entries.write();
        let before = entries.len();
        entries.retain(|_, e| e.ttl_class == TtlClass::ImmutablePermanent || !touches(&e.deps, subjects));
        let dropped = before - entries.len();
        self.stats.write().invalidations += dropped as u64;
        dropped
    }

    pub fn purge_expired(&self, now: UnixTime) {
        self.entries.write().retain(|_, e| e.is_live(now));
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        *self.stats.read()
    }
}
