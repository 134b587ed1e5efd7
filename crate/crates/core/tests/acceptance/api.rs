use std::sync::Arc;

use promptchain_core::api::{ApiConfig, ApiRequest, ApiResponse, ApiService, AuthChallenge, CacheStatus, Keypair, TtlClass};
use promptchain_core::journal::GenesisAllocation;
use promptchain_core::model::PromptDocument;
use promptchain_core::node::{Node, NodeConfig};
use promptchain_core::registry::PromptId;
use promptchain_core::{Amount, ManualClock};
use serde_json::{json, Value};

use crate::world::{seasoned, T0};
use crate::Report;

fn key(name: &str) -> Keypair {
    let mut secret = [7u8; 32];
    secret[..name.len()].copy_from_slice(name.as_bytes());
    Keypair::from_secret(secret)
}

struct Api {
    svc: ApiService,
    clock: Arc<ManualClock>,
}

type Step<T> = Result<T, String>;

impl Api {
    fn new() -> Api {
        let mut allocations = Vec::new();
        for (name, pct) in [("ana", 5_000), ("ben", 2_000), ("cam", 500), ("poor", 45), ("op", 0)] {
            allocations.push(GenesisAllocation { address: key(name).address(), balance: Amount::pct(pct), reputation: None });
        }
        for v in ["v1", "v2", "v3"] {
            allocations.push(GenesisAllocation { address: key(v).address(), balance: Amount::pct(5_000), reputation: Some(seasoned()) });
        }
        let node = Node::with_genesis(NodeConfig::default(), allocations, Amount::pct(50_000), T0).expect("genesis");
        let clock = Arc::new(ManualClock::new(T0));
        let config = ApiConfig { rate_limit_per_minute: 1_000_000, operator: Some(key("op").address()), seed: Some(9), ..ApiConfig::default() };
        Api { svc: ApiService::new(node, clock.clone(), config), clock }
    }

    fn call(&self, req: ApiRequest) -> ApiResponse {
        self.svc.handle(&req)
    }

    fn ok(&self, req: ApiRequest) -> Step<Value> {
        let what = format!("{:?} {}", req.method, req.path);
        let resp = self.call(req);
        match resp.is_success() {
            true => Ok(resp.json_body()),
            false => Err(format!("{what} -> {} {}", resp.status, String::from_utf8_lossy(&resp.body))),
        }
    }

    fn login(&self, name: &str) -> Step<String> {
        let kp = key(name);
        let ch: AuthChallenge = serde_json::from_value(self.ok(ApiRequest::post("/api/v1/auth/challenge", json!({ "address": kp.address() })))?)
            .map_err(|e| e.to_string())?;
        let body = json!({
            "nonce": hex::encode(ch.nonce),
            "public_key": hex::encode(kp.public_key()),
            "signature": hex::encode(kp.sign(&ch.message())),
        });
        let v = self.ok(ApiRequest::post("/api/v1/auth/verify", body))?;
        v["token"].as_str().map(str::to_owned).ok_or_else(|| "no token".into())
    }

    fn publish(&self, who: &str, title: &str) -> Step<PromptId> {
        let doc = PromptDocument::minimal(key(who).address(), T0, title, "legal", "Summarize the clause in one paragraph.");
        let v = self.ok(ApiRequest::post("/api/v1/prompts", json!({ "document": doc })).token(&self.login(who)?))?;
        serde_json::from_value(v["prompt_id"].clone()).map_err(|e| e.to_string())
    }

    fn validate(&self, id: PromptId, score: u8) -> Step<()> {
        for v in ["v1", "v2", "v3"] {
            let body = json!({ "score": score, "stake": "50" });
            self.ok(ApiRequest::post(format!("/api/v1/prompts/{id}/validate"), body).token(&self.login(v)?))?;
        }
        self.ok(ApiRequest::post(format!("/api/v1/prompts/{id}/finalize"), Value::Null).token(&self.login("op")?))?;
        Ok(())
    }
}

fn check(routes: &mut Vec<&'static str>, route: &'static str, v: Step<Value>, ok: impl Fn(&Value) -> bool) -> Step<Value> {
    let v = v?;
    if !ok(&v) {
        return Err(format!("{route}: unexpected body {v}"));
    }
    routes.push(route);
    Ok(v)
}

/// Every route of the published endpoint table, exercised once with valid input.
fn endpoints(api: &Api) -> Step<Vec<&'static str>> {
    let ana = api.login("ana")?;
    let ben = api.login("ben")?;
    let cam = api.login("cam")?;
    let a = key("ana").address();
    let mut r = Vec::new();
    let any = |_: &Value| true;
    let len = |v: &Value, n: usize| v.as_array().map(Vec::len) == Some(n);

    let id = api.publish("ana", "Indemnity clause finder")?;
    r.push("POST /prompts");
    api.validate(id, 8)?;
    let fork = PromptDocument::minimal(a, T0, "Indemnity clause finder, strict", "legal", "Quote the clause, then summarize it.");
    check(&mut r, "PUT /prompts/:id", api.ok(ApiRequest::put(format!("/api/v1/prompts/{id}"), json!({ "document": fork })).token(&ana)), |v| v["version"] == 2)?;
    check(&mut r, "GET /prompts/:id", api.ok(ApiRequest::get(format!("/api/v1/prompts/{id}"))), |v| v["record"]["state"] == "Validated")?;
    check(&mut r, "GET /prompts/search", api.ok(ApiRequest::get("/api/v1/prompts/search?domain=legal&min_score=8")), |v| !len(&v["items"], 0))?;
    api.ok(ApiRequest::post(format!("/api/v1/prompts/{id}/use"), Value::Null).token(&ben))?;
    check(&mut r, "GET /prompts/trending", api.ok(ApiRequest::get("/api/v1/prompts/trending")), |v| v["items"][0]["window_uses"] == 1)?;
    check(&mut r, "GET /prompts/recent", api.ok(ApiRequest::get("/api/v1/prompts/recent")), any)?;
    check(&mut r, "GET /prompts/:id/validations", api.ok(ApiRequest::get(format!("/api/v1/prompts/{id}/validations"))), |v| len(&v["ballots"], 3))?;
    let second = api.publish("ana", "Termination notice checker")?;
    let ballot = json!({ "score": 7, "stake": "60" });
    check(&mut r, "POST /prompts/:id/validate", api.ok(ApiRequest::post(format!("/api/v1/prompts/{second}/validate"), ballot).token(&api.login("v1")?)), |v| {
        v["score"] == 7
    })?;
    check(&mut r, "GET /users/:addr", api.ok(ApiRequest::get(format!("/api/v1/users/{a}"))), |v| v["prompts"] == 3)?;
    check(&mut r, "GET /users/:addr/prompts", api.ok(ApiRequest::get(format!("/api/v1/users/{a}/prompts"))), |v| len(&v["items"], 3))?;
    check(&mut r, "GET /users/:addr/reputation", api.ok(ApiRequest::get(format!("/api/v1/users/{a}/reputation"))), |v| v["score"].is_number())?;
    let c = check(&mut r, "POST /collections", api.ok(ApiRequest::post("/api/v1/collections", json!({ "name": "Contracts", "prompts": [id] })).token(&ben)), any)?;
    let cid = c["id"].as_u64().ok_or("collection id")?;
    check(&mut r, "GET /collections/:id", api.ok(ApiRequest::get(format!("/api/v1/collections/{cid}"))), |v| len(&v["members"], 1))?;
    let change = json!({ "add": [second], "remove": [id] });
    check(&mut r, "PUT /collections/:id/prompts", api.ok(ApiRequest::put(format!("/api/v1/collections/{cid}/prompts"), change).token(&ben)), |v| {
        v["prompts"] == json!([second])
    })?;
    check(&mut r, "GET /analytics/usage", api.ok(ApiRequest::get("/api/v1/analytics/usage")), |v| v["total_uses"] == 1)?;
    check(&mut r, "GET /analytics/tokens", api.ok(ApiRequest::get("/api/v1/analytics/tokens")), |v| v["total_supply"] == v["circulating"])?;
    let report = json!({ "violation": "plagiarism" });
    check(&mut r, "POST /prompts/:id/dispute", api.ok(ApiRequest::post(format!("/api/v1/prompts/{id}/dispute"), report).token(&cam)), |v| v["stake"] == "20")?;
    let third = api.publish("ana", "Governing law detector")?;
    check(&mut r, "DELETE /prompts/:id", api.ok(ApiRequest::delete(format!("/api/v1/prompts/{third}")).token(&ana)), |v| v["state"] == "Deprecated")?;
    Ok(r)
}

fn balance_message(api: &Api) -> Step<String> {
    let doc = PromptDocument::minimal(key("poor").address(), T0, "Cheap", "legal", "Summarize.");
    let resp = api.call(ApiRequest::post("/api/v1/prompts", json!({ "document": doc })).token(&api.login("poor")?));
    let body = resp.json_body();
    let want = "You need at least 100 PCT tokens to register a prompt. Your current balance is 45 PCT.";
    match (resp.status, body["message"].as_str()) {
        (402, Some(m)) if m == want => Ok(m.to_owned()),
        (s, m) => Err(format!("got {s} {m:?}")),
    }
}

fn ttl_classes(api: &Api) -> Step<()> {
    if (TtlClass::Metadata60s.ttl(), TtlClass::Validation300s.ttl(), TtlClass::ImmutablePermanent.ttl()) != (Some(60), Some(300), None) {
        return Err("class lifetimes".into());
    }
    let id = api.publish("ben", "Payment terms reader")?;
    let cid = api.svc.with_node(|n| n.registry().get(&id).map(|r| r.cid)).map_err(|e| e.to_string())?;
    let meta = format!("/api/v1/prompts/{id}");
    let votes = format!("/api/v1/prompts/{id}/validations");
    let content = format!("/api/v1/content/{cid}");
    let status = |p: &str| api.call(ApiRequest::get(p)).cache;
    for p in [&meta, &votes, &content] {
        if status(p) != CacheStatus::Miss {
            return Err(format!("{p} was cached before first read"));
        }
    }
    let mut timeline = Vec::new();
    api.clock.advance(59);
    timeline.push((59, status(&meta), CacheStatus::Hit, "metadata"));
    api.clock.advance(1);
    timeline.push((60, status(&meta), CacheStatus::Miss, "metadata"));
    api.clock.advance(239);
    timeline.push((299, status(&votes), CacheStatus::Hit, "validations"));
    api.clock.advance(1);
    timeline.push((300, status(&votes), CacheStatus::Miss, "validations"));
    api.clock.advance(400 * 86_400);
    timeline.push((400 * 86_400 + 300, status(&content), CacheStatus::Hit, "content"));
    for (t, got, want, what) in timeline {
        if got != want {
            return Err(format!("{what} at +{t}s: {got:?}, expected {want:?}"));
        }
    }
    Ok(())
}

fn invalidation(api: &Api) -> Step<()> {
    let id = api.publish("ben", "Warranty scope summarizer")?;
    let path = format!("/api/v1/prompts/{id}");
    let first = api.call(ApiRequest::get(&path));
    api.clock.advance(5);
    let second = api.call(ApiRequest::get(&path));
    if second.cache != CacheStatus::Hit || second.body != first.body {
        return Err("second read within the TTL was not served from cache".into());
    }
    api.validate(id, 9)?;
    api.clock.advance(5);
    let third = api.call(ApiRequest::get(&path));
    let v = third.json_body();
    match (third.cache, v["record"]["state"].as_str(), &v["document"]["validation"]["score"]) {
        (CacheStatus::Miss, Some("Validated"), s) if *s == 9 => Ok(()),
        (c, state, s) => Err(format!("read 10s later: {c:?}, state {state:?}, score {s}")),
    }
}

fn replay(api: &Api) -> Step<usize> {
    let journal = api.svc.with_node(|n| n.journal().to_vec());
    let cold = ApiService::from_journal(&journal, api.clock.clone(), ApiConfig::default()).map_err(|e| e.to_string())?;
    let ids: Vec<PromptId> = api.svc.with_node(|n| n.registry().in_order().iter().map(|r| r.prompt_id).collect());
    let (a, b) = (key("ana").address(), key("ben").address());
    let mut paths = vec![
        "/api/v1/prompts/search?domain=legal".to_owned(),
        "/api/v1/prompts/trending".to_owned(),
        "/api/v1/prompts/recent".to_owned(),
        "/api/v1/collections/0".to_owned(),
        "/api/v1/analytics/usage".to_owned(),
        "/api/v1/analytics/tokens".to_owned(),
        "/api/v1/store/stats".to_owned(),
        "/api/v1/epochs".to_owned(),
        "/api/v1/precedents".to_owned(),
        "/api/v1/disputes/0".to_owned(),
        "/api/v1/journal".to_owned(),
    ];
    for who in [a, b] {
        paths.extend([format!("/api/v1/users/{who}"), format!("/api/v1/users/{who}/prompts"), format!("/api/v1/users/{who}/reputation")]);
    }
    for id in &ids {
        paths.extend([format!("/api/v1/prompts/{id}"), format!("/api/v1/prompts/{id}/validations"), format!("/api/v1/prompts/{id}/lineage")]);
    }
    for p in &paths {
        let live = api.call(ApiRequest::get(p));
        let again = cold.handle(&ApiRequest::get(p));
        if !live.is_success() || live.body != again.body {
            return Err(format!("{p}: live {} and replayed {} differ", live.status, again.status));
        }
    }
    if api.svc.with_node(Node::state_digest) != cold.with_node(Node::state_digest) {
        return Err("state digests differ".into());
    }
    Ok(paths.len())
}

pub fn run() -> Report {
    let api = Api::new();
    let result = (|| -> Step<String> {
        let routes = endpoints(&api).map_err(|e| format!("endpoints: {e}"))?;
        let n = routes.iter().collect::<std::collections::BTreeSet<_>>().len();
        if n != 18 {
            return Err(format!("only {n} distinct routes exercised"));
        }
        let msg = balance_message(&api).map_err(|e| format!("balance error: {e}"))?;
        ttl_classes(&api).map_err(|e| format!("ttl: {e}"))?;
        invalidation(&api).map_err(|e| format!("invalidation: {e}"))?;
        api.ok(ApiRequest::post("/api/v1/epochs/close", Value::Null).token(&api.login("op")?))?;
        let replayed = replay(&api).map_err(|e| format!("replay: {e}"))?;
        Ok(format!("{n} endpoints answered; \"{msg}\"; ttl 60/300/permanent; invalidation before ttl; {replayed} reads identical after replay"))
    })();
    match result {
        Ok(detail) => Report::pass(detail),
        Err(e) => Report::fail(e),
    }
}
