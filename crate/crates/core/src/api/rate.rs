use std::collections::{HashMap, VecDeque};

use parking_lot::Mutex;

use crate::primitives::{Address, UnixTime};

/// Sliding one-minute window of requests per address.
#[derive(Debug)]
pub struct RateLimiter {
    per_minute: usize,
    windows: Mutex<HashMap<Address, VecDeque<UnixTime>>>,
}

impl RateLimiter {
    pub fn new(per_minute: usize) -> Self {
        RateLimiter { per_minute, windows: Mutex::new(HashMap::new()) }
    }

    /// Records a request and reports whether it is within the limit. Refused
    /// requests do not count against the window.
    pub fn check(&self, address: &Address, now: UnixTime) -> bool {
        let mut windows = self.windows.lock();
        let window = windows.entry(*address).or_default();
        while window.front().is_some_and(|t| *t + 60 <= now) {
            window.pop_front();
        }
        if window.len() >= self.per_minute {
            return false;
        }
        window.push_back(now);
        true
    }

    /// Seconds until `address` may make another request.
    pub fn retry_after(&self, address: &Address, now: UnixTime) -> u64 {
        let windows = self.windows.lock();
        match windows.get(address) {
            Some(w) if w.len() >= self.per_minute => (w[0] + 60).saturating_sub(now),
            _ => 0,
        }
    }
}
