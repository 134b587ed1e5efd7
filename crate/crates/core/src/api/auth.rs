//! Challenge-response authentication with Ed25519 signatures, sessions and
//! time-limited delegation.

use std::collections::HashMap;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{Address, UnixTime};

const AUTH_DOMAIN: &[u8] = b"promptchain-auth-v1";
const DELEGATE_DOMAIN: &[u8] = b"promptchain-delegate-v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("signature does not verify")]
    BadSignature,
    #[error("credential has expired")]
    Expired,
    #[error("challenge was already used")]
    Replayed,
    #[error("unknown challenge")]
    UnknownChallenge,
    #[error("unknown or revoked session")]
    UnknownSession,
    #[error("malformed credential: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthChallenge {
    #[serde(with = "hex_bytes")]
    pub nonce: [u8; 32],
    pub address: Address,
    pub issued_at: UnixTime,
    pub ttl: u64,
}

impl AuthChallenge {
    /// The bytes a client signs: a domain tag, the nonce, the address and the
    /// issue time as big-endian u64.
    pub fn message(&self) -> Vec<u8> {
        let mut m = Vec::with_capacity(AUTH_DOMAIN.len() + 32 + 20 + 8);
        m.extend_from_slice(AUTH_DOMAIN);
        m.extend_from_slice(&self.nonce);
        m.extend_from_slice(&self.address.0);
        m.extend_from_slice(&self.issued_at.to_be_bytes());
        m
    }

    pub fn expires_at(&self) -> UnixTime {
        self.issued_at + self.ttl
    }
}

/// Authorization for `delegate` to act as `delegator` until `expires_at`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelegationGrant {
    pub delegator: Address,
    pub delegate: Address,
    pub expires_at: UnixTime,
}

impl DelegationGrant {
    pub fn message(&self) -> Vec<u8> {
        let mut m = Vec::with_capacity(DELEGATE_DOMAIN.len() + 48);
        m.extend_from_slice(DELEGATE_DOMAIN);
        m.extend_from_slice(&self.delegator.0);
        m.extend_from_slice(&self.delegate.0);
        m.extend_from_slice(&self.expires_at.to_be_bytes());
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    /// The address actions are attributed to.
    pub address: Address,
    /// For delegated sessions, the address holding the session.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delegate: Option<Address>,
    pub expires_at: UnixTime,
}

/// A client-side key pair.
#[derive(Debug, Clone)]
pub struct Keypair(SigningKey);

impl Keypair {
    pub fn generate(rng: &mut impl RngCore) -> Self {
        Keypair(SigningKey::from_bytes(&rng.random()))
    }

    pub fn from_secret(bytes: [u8; 32]) -> Self {
        Keypair(SigningKey::from_bytes(&bytes))
    }

    pub fn secret(&self) -> [u8; 32] {
        self.0.to_bytes()
    }

    pub fn public_key(&self) -> [u8; 32] {
        self.0.verifying_key().to_bytes()
    }

    pub fn address(&self) -> Address {
        Address::from_public_key(&self.public_key())
    }

    pub fn sign(&self, message: &[u8]) -> [u8; 64] {
        self.0.sign(message).to_bytes()
    }
}

/// Checks that `public_key` owns `address` and signed `message`.
pub fn verify(address: &Address, public_key: &[u8], message: &[u8], signature: &[u8]) -> Result<(), AuthError> {
    let key: [u8; 32] = public_key.try_into().map_err(|_| AuthError::Malformed("public key must be 32 bytes".into()))?;
    let sig: [u8; 64] = signature.try_into().map_err(|_| AuthError::Malformed("signature must be 64 bytes".into()))?;
    if Address::from_public_key(&key) != *address {
        return Err(AuthError::BadSignature);
    }
    let key = VerifyingKey::from_bytes(&key).map_err(|_| AuthError::BadSignature)?;
    key.verify(message, &Signature::from_bytes(&sig)).map_err(|_| AuthError::BadSignature)
}

#[derive(Debug, Clone, Copy)]
pub struct AuthConfig {
    pub challenge_ttl: u64,
    pub session_ttl: u64,
}

impl Default for AuthConfig {
    fn default() -> Self {
        AuthConfig { challenge_ttl: 300, session_ttl: 3_600 }
    }
}

/// Outstanding challenges and live sessions.
pub struct Authenticator<R> {
    config: AuthConfig,
    rng: R,
    challenges: HashMap<[u8; 32], (AuthChallenge, bool)>,
    sessions: HashMap<String, Session>,
}

impl<R: RngCore> Authenticator<R> {
    pub fn new(config: AuthConfig, rng: R) -> Self {
        Authenticator { config, rng, challenges: HashMap::new(), sessions: HashMap::new() }
    }

    pub fn issue_challenge(&mut self, address: Address, now: UnixTime) -> AuthChallenge {
        self.challenges.retain(|_, (c, used)| !*used && c.expires_at() >= now);
        let challenge = AuthChallenge { nonce: self.rng.random(), address, issued_at: now, ttl: self.config.challenge_ttl };
        self.challenges.insert(challenge.nonce, (challenge.clone(), false));
        challenge
    }

    /// Verifies a signed challenge and opens a session for its address.
    /// A challenge is usable exactly once and only until `issued_at + ttl`.
    pub fn verify_signature(&mut self, nonce: &[u8; 32], public_key: &[u8], signature: &[u8], now: UnixTime) -> Result<Session, AuthError> {
        let (challenge, used) = self.challenges.get(nonce).ok_or(AuthError::UnknownChallenge)?;
        if *used {
            return Err(AuthError::Replayed);
        }
        if now > challenge.expires_at() {
            return Err(AuthError::Expired);
        }
        verify(&challenge.address, public_key, &challenge.message(), signature)?;
        let address = challenge.address;
        self.challenges.get_mut(nonce).expect("present").1 = true;
        Ok(self.open(address, None, now + self.config.session_ttl))
    }

    /// Opens a session that acts as `grant.delegator`, held by the delegate
    /// whose own session is `holder`. It lasts until the grant expires.
    pub fn delegate(
        &mut self,
        holder: &Session,
        grant: &DelegationGrant,
        public_key: &[u8],
        signature: &[u8],
        now: UnixTime,
    ) -> Result<Session, AuthError> {
        if holder.address != grant.delegate || holder.delegate.is_some() {
            return Err(AuthError::BadSignature);
        }
        if now >= grant.expires_at {
            return Err(AuthError::Expired);
        }
        verify(&grant.delegator, public_key, &grant.message(), signature)?;
        Ok(self.open(grant.delegator, Some(grant.delegate), grant.expires_at))
    }

    fn open(&mut self, address: Address, delegate: Option<Address>, expires_at: UnixTime) -> Session {
        let token = hex::encode(self.rng.random::<[u8; 32]>());
        let session = Session { token: token.clone(), address, delegate, expires_at };
        self.sessions.insert(token, session.clone());
        session
    }

    pub fn session(&self, token: &str, now: UnixTime) -> Result<&Session, AuthError> {
        let s = self.sessions.get(token).ok_or(AuthError::UnknownSession)?;
        if now >= s.expires_at {
            return Err(AuthError::Expired);
        }
        Ok(s)
    }

    pub fn revoke(&mut self, token: &str) -> bool {
        self.sessions.remove(token).is_some()
    }
}

mod hex_bytes {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(&s).map_err(D::Error::custom)?;
        v.try_into().map_err(|_| D::Error::custom("expected 32 bytes"))
    }
}
