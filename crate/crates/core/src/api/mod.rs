//! Transport-independent REST service over a [`Node`].
//!
//! [`ApiService::handle`] takes a parsed request and returns a status code and
//! JSON body; an HTTP server only has to translate to and from these types.
//! Reads go through a TTL cache that journal events invalidate, writes go
//! through the node's single-writer lock and are attributed to the session's
//! address.

pub mod auth;
pub mod cache;
pub mod error;
pub mod rate;
pub mod search;
pub mod subscribe;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clock::Clock;
use crate::governance::Verdict;
use crate::journal::{Command, Event, Outcome};
use crate::model::{PromptDocument, ValidationSummary, ValidatorEntry};
use crate::node::{Node, ReplayError, StorageKind};
use crate::primitives::{Address, Amount, UnixTime};
use crate::registry::PromptId;
use crate::store::Cid;

pub use auth::{AuthChallenge, AuthConfig, AuthError, Authenticator, DelegationGrant, Keypair, Session};
pub use cache::{CacheStats, Dependency, ResponseCache, TtlClass};
pub use error::ApiError;
pub use rate::RateLimiter;
pub use search::{Page, PromptSummary, SearchIndex, SearchQuery, TrendingItem};
pub use subscribe::{SubscribeError, SubscriptionFilter, Subscriptions};

pub const API_PREFIX: &str = "/api/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Get,
    Post,
    Put,
    Delete,
}

impl std::str::FromStr for Method {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self, ApiError> {
        match s.to_ascii_uppercase().as_str() {
            "GET" => Ok(Method::Get),
            "POST" => Ok(Method::Post),
            "PUT" => Ok(Method::Put),
            "DELETE" => Ok(Method::Delete),
            other => Err(ApiError::new(405, "METHOD_NOT_ALLOWED", format!("method {other} is not supported"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiRequest {
    pub method: Method,
    pub path: String,
    pub query: BTreeMap<String, String>,
    /// Bearer session token.
    pub token: Option<String>,
    pub body: Value,
}

impl ApiRequest {
    /// A request for `target`, which may carry a `?k=v&...` query string.
    pub fn new(method: Method, target: impl Into<String>) -> Self {
        let target = target.into();
        let (path, query) = match target.split_once('?') {
            Some((p, q)) => (p.to_owned(), q.split('&').filter_map(|kv| kv.split_once('=')).map(|(k, v)| (k.to_owned(), v.to_owned())).collect()),
            None => (target, BTreeMap::new()),
        };
        ApiRequest { method, path, query, token: None, body: Value::Null }
    }

    pub fn get(path: impl Into<String>) -> Self {
        Self::new(Method::Get, path)
    }

    pub fn post(path: impl Into<String>, body: Value) -> Self {
        Self::new(Method::Post, path).body(body)
    }

    pub fn put(path: impl Into<String>, body: Value) -> Self {
        Self::new(Method::Put, path).body(body)
    }

    pub fn delete(path: impl Into<String>) -> Self {
        Self::new(Method::Delete, path)
    }

    pub fn body(mut self, body: Value) -> Self {
        self.body = body;
        self
    }

    pub fn token(mut self, token: &str) -> Self {
        self.token = Some(token.to_owned());
        self
    }

    pub fn query(mut self, key: &str, value: impl ToString) -> Self {
        self.query.insert(key.to_owned(), value.to_string());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CacheStatus {
    Hit,
    Miss,
    Bypass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Vec<u8>,
    pub cache: CacheStatus,
}

impl ApiResponse {
    fn json(status: u16, value: &impl Serialize) -> Self {
        ApiResponse { status, body: serde_json::to_vec(value).expect("responses serialize"), cache: CacheStatus::Bypass }
    }

    fn error(e: &ApiError) -> Self {
        Self::json(e.http_status, e)
    }

    pub fn json_body(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or(Value::Null)
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub auth: AuthConfig,
    pub rate_limit_per_minute: usize,
    /// The only address allowed to close epochs through the API.
    pub operator: Option<Address>,
    /// Seeds challenge nonces and session tokens; random when absent.
    pub seed: Option<u64>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig { auth: AuthConfig::default(), rate_limit_per_minute: 60, operator: None, seed: None }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Value) -> ApiResult<T> {
    let body = if body.is_null() { json!({}) } else { body.clone() };
    serde_json::from_value(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn parse_param<T: std::str::FromStr>(name: &str, raw: &str) -> ApiResult<T> {
    raw.parse().map_err(|_| ApiError::bad_request(format!("invalid {name} {raw:?}")).with_fields(vec![name.to_owned()]))
}

fn query_param<T: std::str::FromStr>(req: &ApiRequest, name: &str) -> ApiResult<Option<T>> {
    req.query.get(name).map(|raw| parse_param(name, raw)).transpose()
}

fn hex_field<const N: usize>(name: &str, raw: &str) -> ApiResult<[u8; N]> {
    hex::decode(raw.trim_start_matches("0x"))
        .ok()
        .and_then(|v| v.try_into().ok())
        .ok_or_else(|| ApiError::bad_request(format!("{name} must be {N} hex-encoded bytes")).with_fields(vec![name.to_owned()]))
}

#[derive(Deserialize)]
struct ChallengeBody {
    address: Address,
}

#[derive(Deserialize)]
struct VerifyBody {
    nonce: String,
    public_key: String,
    signature: String,
}

#[derive(Deserialize)]
struct DelegateBody {
    grant: DelegationGrant,
    public_key: String,
    signature: String,
}

#[derive(Deserialize)]
struct DocumentBody {
    document: PromptDocument,
}

#[derive(Deserialize)]
struct ValidateBody {
    score: u8,
    stake: Amount,
    #[serde(default)]
    expertise: Vec<String>,
    #[serde(default)]
    comment: String,
}

#[derive(Deserialize)]
struct DisputeBody {
    violation: String,
}

#[derive(Deserialize)]
struct VoteBody {
    verdict: Verdict,
}

#[derive(Deserialize)]
struct ResolveBody {
    #[serde(default)]
    votes: Vec<(Address, Verdict)>,
}

#[derive(Deserialize)]
struct CollectionBody {
    name: String,
    #[serde(default)]
    prompts: Vec<PromptId>,
}

#[derive(Deserialize)]
struct CollectionUpdateBody {
    #[serde(default)]
    add: Vec<PromptId>,
    #[serde(default)]
    remove: Vec<PromptId>,
}

#[derive(Deserialize)]
struct PinBody {
    replication: u32,
}

#[derive(Deserialize)]
struct AckBody {
    seq: u64,
}

/// The REST facade. Safe to share across request handlers.
pub struct ApiService {
    node: RwLock<Node>,
    clock: Arc<dyn Clock>,
    config: ApiConfig,
    auth: Mutex<Authenticator<ChaCha20Rng>>,
    cache: ResponseCache,
    limiter: RateLimiter,
    index: RwLock<SearchIndex>,
    subscriptions: Subscriptions,
}

impl ApiService {
    pub fn new(node: Node, clock: Arc<dyn Clock>, config: ApiConfig) -> Self {
        let rng = match config.seed {
            Some(seed) => ChaCha20Rng::seed_from_u64(seed),
            None => ChaCha20Rng::from_rng(&mut rand::rng()),
        };
        let mut index = SearchIndex::default();
        for r in node.registry().in_order() {
            if let Ok(doc) = node.document(&r.prompt_id) {
                index.insert(r.prompt_id, &doc);
            }
        }
        ApiService {
            node: RwLock::new(node),
            clock,
            auth: Mutex::new(Authenticator::new(config.auth, rng)),
            cache: ResponseCache::new(),
            limiter: RateLimiter::new(config.rate_limit_per_minute),
            index: RwLock::new(index),
            subscriptions: Subscriptions::new(),
            config,
        }
    }

    /// A service over the state a journal describes.
    pub fn from_journal(events: &[Event], clock: Arc<dyn Clock>, config: ApiConfig) -> Result<Self, ReplayError> {
        Ok(Self::new(Node::replay(events, StorageKind::Memory)?, clock, config))
    }

    /// Read access to the node behind the service.
    pub fn with_node<T>(&self, f: impl FnOnce(&Node) -> T) -> T {
        f(&self.node.read())
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.cache.stats()
    }

    pub fn subscriptions(&self) -> &Subscriptions {
        &self.subscriptions
    }

    /// Journal events from `after` onwards that match `filter`.
    pub fn events_matching(&self, filter: &SubscriptionFilter, after: u64, max: usize) -> Vec<Event> {
        let node = self.node.read();
        let start = (after as usize).min(node.journal().len());
        node.journal()[start..].iter().filter(|e| filter.matches(e)).take(max).cloned().collect()
    }

    pub fn journal_len(&self) -> usize {
        self.node.read().journal().len()
    }

    /// Appends every event accepted from now on to `sink`.
    pub fn set_journal_sink(&self, sink: Box<dyn std::io::Write + Send + Sync>) {
        self.node.write().set_journal_sink(sink);
    }

    pub fn handle(&self, req: &ApiRequest) -> ApiResponse {
        match self.dispatch(req) {
            Ok(resp) => resp,
            Err(e) => ApiResponse::error(&e),
        }
    }

    fn session(&self, req: &ApiRequest, now: UnixTime) -> ApiResult<Option<Session>> {
        match &req.token {
            None => Ok(None),
            Some(t) => Ok(Some(self.auth.lock().session(t, now)?.clone())),
        }
    }

    fn dispatch(&self, req: &ApiRequest) -> ApiResult<ApiResponse> {
        let now = self.clock.now();
        let path = req.path.strip_prefix(API_PREFIX).ok_or_else(|| ApiError::not_found(format!("no route for {}", req.path)))?;
        let segments: Vec<&str> = path.trim_matches('/').split('/').filter(|s| !s.is_empty()).collect();
        let session = self.session(req, now)?;

        let limited = match (&session, segments.as_slice(), req.method) {
            (Some(s), _, _) => Some(s.address),
            (None, ["auth", "challenge"], Method::Post) => parse_body::<ChallengeBody>(&req.body).ok().map(|b| b.address),
            _ => None,
        };
        if let Some(addr) = limited {
            if !self.limiter.check(&addr, now) {
                return Err(ApiError::rate_limited(self.limiter.retry_after(&addr, now)));
            }
        }
        let caller = || session.as_ref().map(|s| s.address).ok_or_else(ApiError::auth_required);

        use Method::*;
        match (req.method, segments.as_slice()) {
            (Get, ["health"]) => Ok(ApiResponse::json(200, &json!({"status": "ok", "events": self.journal_len()}))),
            (Post, ["auth", "challenge"]) => {
                let body: ChallengeBody = parse_body(&req.body)?;
                Ok(ApiResponse::json(200, &self.auth.lock().issue_challenge(body.address, now)))
            }
            (Post, ["auth", "verify"]) => {
                let body: VerifyBody = parse_body(&req.body)?;
                let nonce: [u8; 32] = hex_field("nonce", &body.nonce)?;
                let key: [u8; 32] = hex_field("public_key", &body.public_key)?;
                let sig: [u8; 64] = hex_field("signature", &body.signature)?;
                Ok(ApiResponse::json(200, &self.auth.lock().verify_signature(&nonce, &key, &sig, now)?))
            }
            (Post, ["auth", "delegate"]) => {
                let holder = session.clone().ok_or_else(ApiError::auth_required)?;
                let body: DelegateBody = parse_body(&req.body)?;
                let key: [u8; 32] = hex_field("public_key", &body.public_key)?;
                let sig: [u8; 64] = hex_field("signature", &body.signature)?;
                Ok(ApiResponse::json(200, &self.auth.lock().delegate(&holder, &body.grant, &key, &sig, now)?))
            }

            (Post, ["prompts"]) => {
                let body: DocumentBody = parse_body(&req.body)?;
                self.publish(caller()?, body.document, None)
            }
            (Get, ["prompts", "search"]) => self.search(req, now),
            (Get, ["prompts", "trending"]) => {
                let limit = query_param(req, "limit")?;
                self.cached(req, now, TtlClass::Metadata60s, [Dependency::AnyPrompt].into(), |node, index| {
                    Ok(json!({ "window_seconds": search::TRENDING_WINDOW, "items": search::trending(node, index, now, limit) }))
                })
            }
            (Get, ["prompts", "recent"]) => {
                let limit = query_param(req, "limit")?;
                let cursor = req.query.get("cursor").cloned();
                self.cached(req, now, TtlClass::Metadata60s, [Dependency::AnyPrompt].into(), |node, index| {
                    serde_json::to_value(search::recent(node, index, &cursor, limit).map_err(ApiError::bad_request)?).map_err(internal)
                })
            }
            (Get, ["prompts", id]) => {
                let id: PromptId = parse_param("prompt id", id)?;
                self.cached(req, now, TtlClass::Metadata60s, [Dependency::Prompt(id)].into(), |node, _| prompt_view(node, &id))
            }
            (Put, ["prompts", id]) => {
                let parent: PromptId = parse_param("prompt id", id)?;
                let mut body: DocumentBody = parse_body(&req.body)?;
                body.document.provenance.parent_prompt_id.get_or_insert(parent);
                self.publish(caller()?, body.document, Some(parent))
            }
            (Delete, ["prompts", id]) => {
                let prompt_id = parse_param("prompt id", id)?;
                self.command(caller()?, now, Command::Deprecate { prompt_id }, 200)
            }
            (Post, ["prompts", id, "validate"]) => {
                let prompt_id = parse_param("prompt id", id)?;
                let b: ValidateBody = parse_body(&req.body)?;
                let cmd = Command::SubmitValidation { prompt_id, score: b.score, stake: b.stake, expertise: b.expertise, comment: b.comment };
                self.command(caller()?, now, cmd, 201)
            }
            (Get, ["prompts", id, "validations"]) => {
                let id: PromptId = parse_param("prompt id", id)?;
                self.cached(req, now, TtlClass::Validation300s, [Dependency::Prompt(id)].into(), |node, _| {
                    node.registry().get(&id).map_err(|_| ApiError::from(crate::node::NodeError::PromptNotFound(id)))?;
                    Ok(json!({ "prompt_id": id, "ballots": node.ballots(&id), "consensus": node.consensus(&id) }))
                })
            }
            (Post, ["prompts", id, "finalize"]) => {
                let prompt_id = parse_param("prompt id", id)?;
                self.command(caller()?, now, Command::Finalize { prompt_id }, 200)
            }
            (Post, ["prompts", id, "dispute"]) => {
                let prompt_id = parse_param("prompt id", id)?;
                let b: DisputeBody = parse_body(&req.body)?;
                self.command(caller()?, now, Command::OpenDispute { prompt_id, violation: b.violation }, 201)
            }
            (Post, ["prompts", id, "use"]) => {
                let prompt_id = parse_param("prompt id", id)?;
                self.command(caller()?, now, Command::RecordUsage { prompt_id }, 200)
            }
            (Get, ["prompts", id, "lineage"]) => {
                let id: PromptId = parse_param("prompt id", id)?;
                self.cached(req, now, TtlClass::Metadata60s, [Dependency::AnyPrompt].into(), |node, index| {
                    let line = node.registry().lineage(&id).map_err(|_| ApiError::from(crate::node::NodeError::PromptNotFound(id)))?;
                    Ok(json!({ "lineage": line.into_iter().map(|r| search::summarize(index, r)).collect::<Vec<_>>() }))
                })
            }

            (Get, ["disputes", id]) => {
                let id: u64 = parse_param("dispute id", id)?;
                self.fresh(|node| node.dispute(id).map(|d| json!(d)).ok_or_else(|| crate::node::NodeError::DisputeNotFound(id).into()))
            }
            (Post, ["disputes", id, "votes"]) => {
                let dispute_id = parse_param("dispute id", id)?;
                let b: VoteBody = parse_body(&req.body)?;
                self.command(caller()?, now, Command::CastDisputeVote { dispute_id, verdict: b.verdict }, 200)
            }
            (Post, ["disputes", id, "resolve"]) => {
                let dispute_id = parse_param("dispute id", id)?;
                let b: ResolveBody = parse_body(&req.body)?;
                self.command(caller()?, now, Command::ResolveDispute { dispute_id, votes: b.votes }, 200)
            }
            (Get, ["precedents"]) => {
                let domain = req.query.get("domain").cloned();
                self.fresh(|node| {
                    let p = node.precedents();
                    Ok(match &domain {
                        Some(d) => json!(p.by_domain(d).collect::<Vec<_>>()),
                        None => json!(p.entries()),
                    })
                })
            }

            (Get, ["users", addr]) => {
                let a: Address = parse_param("address", addr)?;
                self.cached(req, now, TtlClass::Metadata60s, [Dependency::Address(a)].into(), |node, _| {
                    let prompts = node.registry().records().filter(|r| r.creator == a).count();
                    Ok(json!({
                        "address": a,
                        "balance": node.ledger().balance(&a),
                        "staked": node.ledger().staked(&a),
                        "reputation": node.reputation_of(&a),
                        "prompts": prompts,
                        "collections": node.collections().filter(|c| c.curator == a).map(|c| c.id).collect::<Vec<_>>(),
                    }))
                })
            }
            (Get, ["users", addr, "prompts"]) => {
                let a: Address = parse_param("address", addr)?;
                self.cached(req, now, TtlClass::Metadata60s, [Dependency::Address(a), Dependency::AnyPrompt].into(), |node, index| {
                    let items: Vec<PromptSummary> =
                        node.registry().in_order().into_iter().filter(|r| r.creator == a).map(|r| search::summarize(index, r)).collect();
                    Ok(json!({ "address": a, "items": items }))
                })
            }
            (Get, ["users", addr, "reputation"]) => {
                let a: Address = parse_param("address", addr)?;
                self.cached(req, now, TtlClass::Metadata60s, [Dependency::Address(a)].into(), |node, _| {
                    let record = node.reputation_record(&a);
                    let inputs = record.inputs(&crate::economy::LogEngagement);
                    Ok(json!({ "address": a, "score": node.reputation_of(&a), "inputs": inputs, "history": record }))
                })
            }

            (Post, ["collections"]) => {
                let b: CollectionBody = parse_body(&req.body)?;
                self.command(caller()?, now, Command::CreateCollection { name: b.name, prompts: b.prompts }, 201)
            }
            (Get, ["collections", id]) => {
                let id: u64 = parse_param("collection id", id)?;
                let members = self.with_node(|n| n.collection(id).map(|c| c.prompts.clone()).unwrap_or_default());
                let mut deps: BTreeSet<Dependency> = members.into_iter().map(Dependency::Prompt).collect();
                deps.insert(Dependency::Collection(id));
                self.cached(req, now, TtlClass::Metadata60s, deps, |node, index| {
                    let c = node.collection(id).ok_or(crate::node::NodeError::CollectionNotFound(id))?;
                    let members: Vec<PromptSummary> =
                        c.prompts.iter().filter_map(|p| node.registry().get(p).ok()).map(|r| search::summarize(index, r)).collect();
                    Ok(json!({ "collection": c, "members": members }))
                })
            }
            (Put, ["collections", id, "prompts"]) => {
                let collection_id = parse_param("collection id", id)?;
                let b: CollectionUpdateBody = parse_body(&req.body)?;
                self.command(caller()?, now, Command::UpdateCollection { collection_id, add: b.add, remove: b.remove }, 200)
            }

            (Get, ["analytics", "usage"]) => self.cached(req, now, TtlClass::Metadata60s, [Dependency::AnyPrompt].into(), |node, _| {
                let mut by_domain: BTreeMap<&str, u64> = BTreeMap::new();
                let mut by_state: BTreeMap<String, u64> = BTreeMap::new();
                for r in node.registry().records() {
                    *by_domain.entry(r.domain.as_str()).or_default() += r.total_uses;
                    *by_state.entry(r.state.to_string()).or_default() += 1;
                }
                let since = now.saturating_sub(search::TRENDING_WINDOW);
                Ok(json!({
                    "total_uses": node.usage_log().len(),
                    "uses_last_24h": node.usage_log().iter().filter(|(at, _)| *at > since).count(),
                    "by_domain": by_domain,
                    "prompts_by_state": by_state,
                    "epoch": node.epoch(),
                }))
            }),
            (Get, ["analytics", "tokens"]) => self.fresh(|node| {
                let l = node.ledger();
                let staked: Amount = l.stakes().values().copied().sum();
                let last = node.epoch_reports().last();
                Ok(json!({
                    "total_supply": l.total_supply(),
                    "circulating": l.circulating(),
                    "balances": l.balances().values().copied().sum::<Amount>(),
                    "staked": staked,
                    "pool": l.pool(),
                    "params": node.params(),
                    "epoch": node.epoch(),
                    "last_epoch_paid": last.map(|r| r.total_paid),
                    "last_epoch_velocity": last.map(|r| r.velocity),
                }))
            }),

            (Get, ["content", cid]) => {
                let cid: Cid = parse_param("cid", cid)?;
                let bytes = self.with_node(|n| n.store().get(&cid)).map_err(crate::node::NodeError::from)?;
                let key = cache_key(req);
                if let Some(hit) = self.cache.get(&key, now) {
                    return Ok(ApiResponse { status: 200, body: hit, cache: CacheStatus::Hit });
                }
                let doc: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
                let resp = ApiResponse::json(200, &json!({ "cid": cid, "document": doc }));
                self.cache.put(key, resp.body.clone(), TtlClass::ImmutablePermanent, BTreeSet::new(), now);
                Ok(ApiResponse { cache: CacheStatus::Miss, ..resp })
            }
            (Post, ["content", cid, "pin"]) => {
                let cid = parse_param("cid", cid)?;
                let b: PinBody = parse_body(&req.body)?;
                self.command(caller()?, now, Command::Pin { cid, replication: b.replication }, 200)
            }
            (Delete, ["content", cid, "pin"]) => {
                let cid = parse_param("cid", cid)?;
                self.command(caller()?, now, Command::Unpin { cid }, 200)
            }
            (Get, ["store", "stats"]) => self.fresh(|node| Ok(json!(node.store().stats()))),

            (Post, ["epochs", "close"]) => {
                let who = caller()?;
                if self.config.operator != Some(who) {
                    return Err(ApiError::new(403, "UNAUTHORIZED", "only the operator can close an epoch"));
                }
                self.command(who, now, Command::CloseEpoch, 200)
            }
            (Get, ["epochs"]) => self.fresh(|node| Ok(json!(node.epoch_reports()))),

            (Post, ["subscriptions"]) => {
                caller()?;
                let filter: SubscriptionFilter = parse_body(&req.body)?;
                let from = query_param(req, "from")?.unwrap_or(self.journal_len() as u64);
                let id = self.subscriptions.subscribe(filter, from).map_err(|e| ApiError::bad_request(e.to_string()).with_code("BAD_FILTER"))?;
                Ok(ApiResponse::json(201, &json!({ "id": id })))
            }
            (Get, ["subscriptions", id, "events"]) => {
                let id: u64 = parse_param("subscription id", id)?;
                let max = query_param(req, "max")?.unwrap_or(100);
                let events = self.with_node(|n| self.subscriptions.poll(id, n.journal(), max)).map_err(|e| ApiError::not_found(e.to_string()))?;
                Ok(ApiResponse::json(200, &events))
            }
            (Post, ["subscriptions", id, "ack"]) => {
                let id: u64 = parse_param("subscription id", id)?;
                let b: AckBody = parse_body(&req.body)?;
                let next = self.subscriptions.ack(id, b.seq).map_err(|e| ApiError::not_found(e.to_string()))?;
                Ok(ApiResponse::json(200, &json!({ "next": next })))
            }
            (Get, ["journal"]) => {
                let after: u64 = query_param(req, "after")?.unwrap_or(0);
                let limit: usize = query_param(req, "limit")?.unwrap_or(1_000);
                self.fresh(|node| {
                    let start = (after as usize).min(node.journal().len());
                    Ok(json!(&node.journal()[start..(start + limit).min(node.journal().len())]))
                })
            }

            _ => Err(ApiError::not_found(format!("no route for {:?} {}", req.method, req.path))),
        }
    }

    fn fresh(&self, f: impl FnOnce(&Node) -> ApiResult<Value>) -> ApiResult<ApiResponse> {
        let node = self.node.read();
        Ok(ApiResponse::json(200, &f(&node)?))
    }

    /// Serves from cache when possible. The computation and the insert both
    /// happen under the node read lock, so no write can slip between them.
    fn cached(
        &self,
        req: &ApiRequest,
        now: UnixTime,
        class: TtlClass,
        deps: BTreeSet<Dependency>,
        compute: impl FnOnce(&Node, &SearchIndex) -> ApiResult<Value>,
    ) -> ApiResult<ApiResponse> {
        let key = cache_key(req);
        let node = self.node.read();
        if let Some(hit) = self.cache.get(&key, now) {
            return Ok(ApiResponse { status: 200, body: hit, cache: CacheStatus::Hit });
        }
        let value = compute(&node, &self.index.read())?;
        let resp = ApiResponse::json(200, &value);
        self.cache.put(key, resp.body.clone(), class, deps, now);
        Ok(ApiResponse { cache: CacheStatus::Miss, ..resp })
    }

    fn search(&self, req: &ApiRequest, now: UnixTime) -> ApiResult<ApiResponse> {
        let q = SearchQuery {
            q: req.query.get("q").cloned(),
            domain: req.query.get("domain").cloned(),
            min_score: query_param(req, "min_score")?,
            creator: query_param(req, "creator")?,
            min_creator_reputation: query_param(req, "min_creator_reputation")?,
            from: query_param(req, "from")?,
            to: query_param(req, "to")?,
            include_deprecated: query_param(req, "include_deprecated")?.unwrap_or(false),
            cursor: req.query.get("cursor").cloned(),
            limit: query_param(req, "limit")?,
        };
        self.cached(req, now, TtlClass::Metadata60s, [Dependency::AnyPrompt].into(), |node, index| {
            serde_json::to_value(search::search(node, index, &q).map_err(ApiError::bad_request)?).map_err(internal)
        })
    }

    /// Runs one command as `caller`, then invalidates the cache for and
    /// indexes whatever the resulting events touched.
    fn execute(&self, caller: Address, now: UnixTime, cmd: Command) -> ApiResult<Outcome> {
        let mut node = self.node.write();
        let at = now.max(node.now());
        let before = node.journal().len();
        let result = node.execute(Some(caller), at, cmd);
        for e in &node.journal()[before..] {
            self.cache.invalidate(&e.subjects);
        }
        if let Ok(Outcome::Registered(r)) = &result {
            if let Ok(doc) = node.document(&r.prompt_id) {
                self.index.write().insert(r.prompt_id, &doc);
            }
        }
        Ok(result?)
    }

    fn command(&self, caller: Address, now: UnixTime, cmd: Command, status: u16) -> ApiResult<ApiResponse> {
        let outcome = self.execute(caller, now, cmd)?;
        Ok(ApiResponse::json(status, &outcome_body(outcome)))
    }

    /// Stores the document, then registers it: the store-verify-register flow.
    fn publish(&self, caller: Address, document: PromptDocument, parent: Option<PromptId>) -> ApiResult<ApiResponse> {
        let parent = parent.or(document.provenance.parent_prompt_id);
        let cid = match self.execute(caller, self.clock.now(), Command::StoreDocument { document })? {
            Outcome::Stored { cid } => cid,
            other => unreachable!("store produced {other:?}"),
        };
        self.command(caller, self.clock.now(), Command::Register { cid, parent }, 201)
    }
}

impl ApiError {
    fn with_code(mut self, code: &str) -> Self {
        self.code = code.to_owned();
        self
    }
}

fn internal(e: serde_json::Error) -> ApiError {
    ApiError::new(500, "INTERNAL", e.to_string())
}

fn cache_key(req: &ApiRequest) -> String {
    let mut key = req.path.clone();
    for (k, v) in &req.query {
        key.push(if key.contains('?') { '&' } else { '?' });
        key.push_str(k);
        key.push('=');
        key.push_str(v);
    }
    key
}

/// The JSON returned for a command: the outcome's own payload.
fn outcome_body(outcome: Outcome) -> Value {
    let mut v = serde_json::to_value(&outcome).expect("outcomes serialize");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("kind");
    }
    v
}

fn prompt_view(node: &Node, id: &PromptId) -> ApiResult<Value> {
    let record = node.registry().get(id).map_err(|_| crate::node::NodeError::PromptNotFound(*id))?;
    let mut document = node.document(id)?;
    let ballots = node.ballots(id);
    document.validation_summary = ValidationSummary {
        score: record.validation_score.map_or(0, u32::from),
        validators: ballots
            .iter()
            .map(|b| ValidatorEntry { address: b.validator, score: b.score.into(), comment: b.comment.clone(), expertise: b.expertise_domains.clone() })
            .collect(),
        domain_expert_count: ballots.iter().filter(|b| b.weight > 1).count() as u64,
        general_user_count: ballots.iter().filter(|b| b.weight == 1).count() as u64,
    };
    document.usage_summary = node.usage_summary(record);
    let children: Vec<PromptId> = node.registry().children(id).into_iter().map(|r| r.prompt_id).collect();
    Ok(json!({
        "record": record,
        "document": document,
        "consensus": node.consensus(id),
        "children": children,
    }))
}
