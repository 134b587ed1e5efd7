use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use crate::primitives::{parse_prefixed_digest, ParseValueError};

/// Content identifier: the SHA-256 digest of an object's bytes, written as
/// `pc1-` followed by 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cid(pub [u8; 32]);

pub const CID_PREFIX: &str = "pc1-";

pub fn compute_cid(bytes: &[u8]) -> Cid {
    Cid(Sha256::digest(bytes).into())
}

impl Cid {
    pub fn digest(&self) -> &[u8; 32] {
        &self.0
    }

    pub(crate) fn of_segments<'a>(segments: impl IntoIterator<Item = &'a [u8]>) -> Cid {
        let mut hasher = Sha256::new();
        for s in segments {
            hasher.update(s);
        }
        Cid(hasher.finalize().into())
    }
}

impl fmt::Display for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{CID_PREFIX}{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cid({self})")
    }
}

impl FromStr for Cid {
    type Err = ParseValueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_prefixed_digest(s, CID_PREFIX).map(Cid)
    }
}

impl Serialize for Cid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(de::Error::custom)
    }
}
