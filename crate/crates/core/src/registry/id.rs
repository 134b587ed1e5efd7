use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use crate::primitives::{parse_prefixed_digest, Address, ParseValueError, UnixTime};
use crate::store::Cid;

pub const PROMPT_ID_PREFIX: &str = "pp1-";

/// Registry identifier of one registration, written `pp1-` + 64 hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PromptId(pub [u8; 32]);

impl PromptId {
    /// SHA-256 over the CID digest, the creator's address bytes and the
    /// registration time as a big-endian u64.
    pub fn derive(cid: &Cid, creator: &Address, timestamp: UnixTime) -> Self {
        let mut h = Sha256::new();
        h.update(cid.digest());
        h.update(creator.as_bytes());
        h.update(timestamp.to_be_bytes());
        PromptId(h.finalize().into())
    }
}

impl fmt::Display for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{PROMPT_ID_PREFIX}{}", hex::encode(self.0))
    }
}

impl fmt::Debug for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PromptId({self})")
    }
}

impl FromStr for PromptId {
    type Err = ParseValueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_prefixed_digest(s, PROMPT_ID_PREFIX).map(PromptId)
    }
}

impl Serialize for PromptId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PromptId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(de::Error::custom)
    }
}
