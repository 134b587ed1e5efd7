use serde::{Deserialize, Serialize};

use super::auth::AuthError;
use crate::node::NodeError;

/// The error body every endpoint returns: `{code, message, fields}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<String>>,
    #[serde(skip)]
    pub http_status: u16,
}

impl ApiError {
    pub fn new(http_status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiError { code: code.to_owned(), message: message.into(), fields: None, http_status }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "BAD_REQUEST", message)
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(404, "NOT_FOUND", what)
    }

    pub fn auth_required() -> Self {
        Self::new(401, "AUTH_REQUIRED", "this endpoint needs a session token")
    }

    pub fn rate_limited(retry_after: u64) -> Self {
        Self::new(429, "RATE_LIMITED", format!("rate limit exceeded, retry in {retry_after} s"))
    }

    pub fn with_fields(mut self, fields: Vec<String>) -> Self {
        self.fields = Some(fields);
        self
    }
}

impl From<NodeError> for ApiError {
    fn from(e: NodeError) -> Self {
        let status = match &e {
            NodeError::InsufficientBalance { .. } => 402,
            NodeError::Unauthorized(_) | NodeError::InsufficientReputation { .. } | NodeError::InsufficientVoterReputation { .. } => 403,
            NodeError::SelfValidation => 403,
            NodeError::PromptNotFound(_)
            | NodeError::DisputeNotFound(_)
            | NodeError::CollectionNotFound(_)
            | NodeError::UnknownCid(_)
            | NodeError::NotPinned(_) => 404,
            NodeError::SchemaInvalid(_) => 422,
            NodeError::InvalidScore(_)
            | NodeError::InvalidDocument(_)
            | NodeError::InvalidParent(_)
            | NodeError::InsufficientStake { .. }
            | NodeError::NoVotes(_) => 400,
            NodeError::DuplicateRegistration(_)
            | NodeError::AlreadyValidated { .. }
            | NodeError::AlreadyVoted { .. }
            | NodeError::AlreadyResolved(_)
            | NodeError::WrongState { .. }
            | NodeError::NotValidated(_)
            | NodeError::DisputePending(_)
            | NodeError::QuorumNotMet { .. }
            | NodeError::GenesisRepeated => 409,
            NodeError::GenesisRequired | NodeError::TimeWentBackwards { .. } => 503,
            NodeError::Store(crate::store::StoreError::InvalidReplication) => 400,
            NodeError::Store(_) | NodeError::Ledger(_) => 500,
        };
        let fields = match &e {
            NodeError::SchemaInvalid(report) => Some(report.fields()),
            NodeError::InsufficientStake { .. } => Some(vec!["stake".into()]),
            NodeError::InvalidScore(_) => Some(vec!["score".into()]),
            _ => None,
        };
        ApiError { code: e.code().to_owned(), message: e.to_string(), fields, http_status: status }
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        let code = match e {
            AuthError::BadSignature => "BAD_SIGNATURE",
            AuthError::Expired => "EXPIRED",
            AuthError::Replayed => "REPLAYED",
            AuthError::UnknownChallenge => "UNKNOWN_CHALLENGE",
            AuthError::UnknownSession => "UNKNOWN_SESSION",
            AuthError::Malformed(_) => "MALFORMED_CREDENTIAL",
        };
        ApiError::new(401, code, e.to_string())
    }
}
