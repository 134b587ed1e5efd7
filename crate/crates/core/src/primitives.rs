//! Value types shared by every module: account addresses, token amounts and
//! the hex helpers used by the textual identifier forms.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Unix time in whole seconds.
pub type UnixTime = u64;

/// Number of minimal units in one PCT (18 decimal places).
pub const UNITS_PER_PCT: u128 = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseValueError {
    #[error("invalid address {0:?}: expected 0x followed by 40 hex characters")]
    Address(String),
    #[error("invalid token amount {0:?}")]
    Amount(String),
    #[error("invalid identifier {0:?}: expected {1} followed by 64 hex characters")]
    Identifier(String, &'static str),
}

/// A 20-byte account address, rendered as `0x` + 40 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0; 20]);

    /// Address owned by an Ed25519 public key: the first 20 bytes of its SHA-256.
    pub fn from_public_key(key: &[u8]) -> Self {
        let digest = Sha256::digest(key);
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest[..20]);
        Address(out)
    }

    /// Deterministic address for a label, used for simulated agents and fixtures.
    pub fn derive(label: &str) -> Self {
        Self::from_public_key(label.as_bytes())
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 20]
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

impl FromStr for Address {
    type Err = ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s
            .strip_prefix("0x")
            .ok_or_else(|| ParseValueError::Address(s.to_owned()))?;
        if body.len() != 40 || body.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(ParseValueError::Address(s.to_owned()));
        }
        let mut out = [0u8; 20];
        hex::decode_to_slice(body, &mut out).map_err(|_| ParseValueError::Address(s.to_owned()))?;
        Ok(Address(out))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// A non-negative PCT amount in minimal units (10^-18 PCT).
///
/// Serialized as an exact decimal PCT string (`"100"`, `"0.1"`), so journals
/// round-trip without loss.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Amount(u128);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub const fn from_units(units: u128) -> Self {
        Amount(units)
    }

    pub const fn pct(whole: u64) -> Self {
        Amount(whole as u128 * UNITS_PER_PCT)
    }

    /// `numerator / 10^decimals` PCT, e.g. `from_decimal(1, 1)` is 0.1 PCT.
    pub const fn from_decimal(numerator: u64, decimals: u32) -> Self {
        Amount(numerator as u128 * UNITS_PER_PCT / 10u128.pow(decimals))
    }

    /// Converts a floating PCT value, rounding to the nearest nano-PCT. Negative
    /// and non-finite inputs map to zero.
    pub fn from_pct_f64(value: f64) -> Self {
        if !value.is_finite() || value <= 0.0 {
            return Amount::ZERO;
        }
        let nanos = (value * 1e9).round();
        Amount(nanos as u128 * 1_000_000_000)
    }

    pub const fn units(self) -> u128 {
        self.0
    }

    pub fn as_pct_f64(self) -> f64 {
        let whole = self.0 / UNITS_PER_PCT;
        let frac = self.0 % UNITS_PER_PCT;
        whole as f64 + frac as f64 / UNITS_PER_PCT as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_add(rhs.0).map(Amount)
    }

    pub fn checked_sub(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_sub(rhs.0).map(Amount)
    }

    pub fn saturating_sub(self, rhs: Amount) -> Amount {
        Amount(self.0.saturating_sub(rhs.0))
    }

    /// `self * numerator / denominator`, rounding down.
    pub fn mul_ratio(self, numerator: u128, denominator: u128) -> Amount {
        assert!(denominator > 0, "zero denominator");
        let q = self.0 / denominator;
        let r = self.0 % denominator;
        Amount(q * numerator + r * numerator / denominator)
    }
}

impl Add for Amount {
    type Output = Amount;
    fn add(self, rhs: Amount) -> Amount {
        Amount(self.0.checked_add(rhs.0).expect("token amount overflow"))
    }
}

impl AddAssign for Amount {
    fn add_assign(&mut self, rhs: Amount) {
        *self = *self + rhs;
    }
}

impl Sub for Amount {
    type Output = Amount;
    fn sub(self, rhs: Amount) -> Amount {
        Amount(self.0.checked_sub(rhs.0).expect("token amount underflow"))
    }
}

impl Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, |a, b| a + b)
    }
}

impl<'a> Sum<&'a Amount> for Amount {
    fn sum<I: Iterator<Item = &'a Amount>>(iter: I) -> Amount {
        iter.copied().sum()
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / UNITS_PER_PCT;
        let frac = self.0 % UNITS_PER_PCT;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:018}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl fmt::Debug for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} PCT")
    }
}

impl FromStr for Amount {
    type Err = ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseValueError::Amount(s.to_owned());
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty()
            || frac.len() > 18
            || !whole.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || (s.contains('.') && frac.is_empty())
        {
            return Err(bad());
        }
        let whole: u128 = whole.parse().map_err(|_| bad())?;
        let frac_units: u128 = if frac.is_empty() {
            0
        } else {
            let padded = format!("{frac:0<18}");
            padded.parse().map_err(|_| bad())?
        };
        whole
            .checked_mul(UNITS_PER_PCT)
            .and_then(|w| w.checked_add(frac_units))
            .map(Amount)
            .ok_or_else(bad)
    }
}

impl Serialize for Amount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Amount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Whole(u64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(de::Error::custom),
            Repr::Whole(n) => Ok(Amount::pct(n)),
        }
    }
}

/// Parses `prefix` + 64 lowercase hex characters into a 32-byte digest.
pub(crate) fn parse_prefixed_digest(s: &str, prefix: &'static str) -> Result<[u8; 32], ParseValueError> {
    let bad = || ParseValueError::Identifier(s.to_owned(), prefix);
    let body = s.strip_prefix(prefix).ok_or_else(bad)?;
    if body.len() != 64 || body.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(bad());
    }
    let mut out = [0u8; 32];
    hex::decode_to_slice(body, &mut out).map_err(|_| bad())?;
    Ok(out)
}
