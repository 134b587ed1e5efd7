//! Filtered, at-least-once delivery of journal events.

use std::collections::{BTreeMap, BTreeSet};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::journal::Event;
use crate::primitives::Address;
use crate::registry::PromptId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubscribeError {
    #[error("a filter needs at least one prompt, address or domain")]
    BadFilter,
    #[error("unknown subscription {0}")]
    UnknownSubscription(u64),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubscriptionFilter {
    pub prompts: BTreeSet<PromptId>,
    pub addresses: BTreeSet<Address>,
    pub domains: BTreeSet<String>,
}

impl SubscriptionFilter {
    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty() && self.addresses.is_empty() && self.domains.is_empty()
    }

    pub fn matches(&self, event: &Event) -> bool {
        let s = &event.subjects;
        !self.prompts.is_disjoint(&s.prompts) || !self.addresses.is_disjoint(&s.addresses) || !self.domains.is_disjoint(&s.domains)
    }
}

#[derive(Debug, Clone)]
struct Subscription {
    filter: SubscriptionFilter,
    /// Every event before this sequence number has been acknowledged.
    next: u64,
}

#[derive(Debug, Default)]
pub struct Subscriptions {
    subs: Mutex<BTreeMap<u64, Subscription>>,
}

impl Subscriptions {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a filter that sees events from `from_seq` onwards.
    pub fn subscribe(&self, filter: SubscriptionFilter, from_seq: u64) -> Result<u64, SubscribeError> {
        if filter.is_empty() {
            return Err(SubscribeError::BadFilter);
        }
        let mut subs = self.subs.lock();
        let id = subs.last_key_value().map_or(0, |(k, _)| k + 1);
        subs.insert(id, Subscription { filter, next: from_seq });
        Ok(id)
    }

    /// Up to `max` unacknowledged matching events in sequence order. Events
    /// are returned again until acknowledged.
    pub fn poll(&self, id: u64, journal: &[Event], max: usize) -> Result<Vec<Event>, SubscribeError> {
        let subs = self.subs.lock();
        let sub = subs.get(&id).ok_or(SubscribeError::UnknownSubscription(id))?;
        let start = (sub.next as usize).min(journal.len());
        Ok(journal[start..].iter().filter(|e| sub.filter.matches(e)).take(max).cloned().collect())
    }

    /// Acknowledges every event up to and including `seq`.
    pub fn ack(&self, id: u64, seq: u64) -> Result<u64, SubscribeError> {
        let mut subs = self.subs.lock();
        let sub = subs.get_mut(&id).ok_or(SubscribeError::UnknownSubscription(id))?;
        sub.next = sub.next.max(seq + 1);
        Ok(sub.next)
    }

    pub fn filter(&self, id: u64) -> Result<SubscriptionFilter, SubscribeError> {
        self.subs.lock().get(&id).map(|s| s.filter.clone()).ok_or(SubscribeError::UnknownSubscription(id))
    }

    pub fn unsubscribe(&self, id: u64) -> bool {
        self.subs.lock().remove(&id).is_some()
    }
}
