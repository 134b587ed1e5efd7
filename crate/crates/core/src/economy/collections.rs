use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::primitives::{Address, Amount, UnixTime};
use crate::registry::PromptId;

/// A curated set of prompts backed by the curator's stake.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collection {
    pub id: u64,
    pub curator: Address,
    pub name: String,
    pub prompts: BTreeSet<PromptId>,
    pub stake: Amount,
    pub created_at: UnixTime,
    pub updated_at: UnixTime,
}
