//! HTTP adapter over [`ApiService`]: every request is translated into an
//! [`ApiRequest`], plus one streaming route that pushes a subscription's
//! events as NDJSON over a held-open response.

use std::convert::Infallible;
use std::fs::{self, File, OpenOptions};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, HeaderValue, Method as HttpMethod, StatusCode, Uri};
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use promptchain_core::api::{ApiConfig, ApiError, ApiRequest, ApiService, Method};
use promptchain_core::journal::{write_ndjson, GenesisAllocation};
use promptchain_core::node::{Node, NodeConfig};
use promptchain_core::{Address, Amount, Clock, SystemClock};
use serde::Deserialize;

use crate::{read_journal, CliError};

const POLL_INTERVAL: Duration = Duration::from_millis(100);
const STREAM_BATCH: usize = 64;

/// Initial state for a server started on an empty state directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisFile {
    #[serde(default)]
    pub config: NodeConfig,
    pub pool: Amount,
    pub accounts: Vec<GenesisAllocation>,
    #[serde(default)]
    pub operator: Option<Address>,
}

pub fn journal_path(state: &Path) -> PathBuf {
    state.join("journal.ndjson")
}

/// Opens the service persisted in `state`, creating it from `genesis` when
/// the directory holds no journal yet. New events are appended to the
/// journal file as they are accepted.
pub fn open_service(state: &Path, genesis: Option<&Path>, operator: Option<Address>) -> Result<ApiService, CliError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(state).map_err(io(state))?;
    let journal = journal_path(state);
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let mut config = ApiConfig { operator, ..ApiConfig::default() };

    let existing = journal.exists() && fs::metadata(&journal).map_err(io(&journal))?.len() > 0;
    let service = if existing {
        let events = read_journal(&journal)?;
        ApiService::from_journal(&events, clock, config)?
    } else {
        let path = genesis.ok_or_else(|| CliError::Usage(format!("{} has no journal; pass --genesis", state.display())))?;
        let text = fs::read_to_string(path).map_err(io(path))?;
        let g: GenesisFile = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        config.operator = config.operator.or(g.operator);
        let node = Node::with_genesis(g.config, g.accounts, g.pool, clock.now())
            .map_err(|e| CliError::Usage(format!("genesis rejected: {e}")))?;
        let mut w = BufWriter::new(File::create(&journal).map_err(io(&journal))?);
        write_ndjson(&mut w, node.journal()).map_err(io(&journal))?;
        ApiService::new(node, clock, config)
    };
    let sink = OpenOptions::new().append(true).open(&journal).map_err(io(&journal))?;
    service.set_journal_sink(Box::new(sink));
    Ok(service)
}

pub fn router(service: Arc<ApiService>) -> Router {
    Router::new()
        .route("/api/v1/subscriptions/{id}/stream", get(stream))
        .fallback(dispatch)
        .with_state(service)
}

fn json_response(status: u16, body: Vec<u8>) -> Response {
    let mut resp = Response::new(Body::from(body));
    *resp.status_mut() = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    resp.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    resp
}

fn error_response(e: &ApiError) -> Response {
    json_response(e.http_status, serde_json::to_vec(e).expect("errors serialize"))
}

async fn dispatch(State(service): State<Arc<ApiService>>, method: HttpMethod, uri: Uri, headers: HeaderMap, body: Bytes) -> Response {
    let method: Method = match method.as_str().parse() {
        Ok(m) => m,
        Err(e) => return error_response(&e),
    };
    let target = uri.path_and_query().map_or(uri.path(), |p| p.as_str());
    let mut req = ApiRequest::new(method, target);
    let bearer = headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()).and_then(|v| v.strip_prefix("Bearer "));
    if let Some(token) = bearer {
        req = req.token(token.trim());
    }
    if !body.is_empty() {
        match serde_json::from_slice(&body) {
            Ok(v) => req.body = v,
            Err(e) => return error_response(&ApiError::bad_request(format!("body is not JSON: {e}"))),
        }
    }
    let resp = match tokio::task::spawn_blocking(move || service.handle(&req)).await {
        Ok(r) => r,
        Err(e) => return error_response(&ApiError::new(500, "INTERNAL", e.to_string())),
    };
    let cache = format!("{:?}", resp.cache).to_ascii_uppercase();
    let mut out = json_response(resp.status, resp.body);
    out.headers_mut().insert("x-cache", HeaderValue::from_str(&cache).expect("ascii"));
    out
}

async fn stream(State(service): State<Arc<ApiService>>, UrlPath(id): UrlPath<u64>) -> Response {
    if let Err(e) = service.subscriptions().filter(id) {
        return error_response(&ApiError::new(404, "SUBSCRIPTION_NOT_FOUND", e.to_string()));
    }
    let events = futures::stream::unfold(service, move |service| async move {
        loop {
            let batch = service.with_node(|n| service.subscriptions().poll(id, n.journal(), STREAM_BATCH));
            match batch {
                Err(_) => return None,
                Ok(events) if events.is_empty() => tokio::time::sleep(POLL_INTERVAL).await,
                Ok(events) => {
                    let mut buf = Vec::new();
                    write_ndjson(&mut buf, &events).expect("writing to memory");
                    let last = events.last().expect("non-empty").seq;
                    let _ = service.subscriptions().ack(id, last);
                    return Some((Ok::<_, Infallible>(Bytes::from(buf)), service));
                }
            }
        }
    });
    let mut resp = Response::new(Body::from_stream(events));
    resp.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("application/x-ndjson"));
    resp
}

/// Binds `port` on localhost (0 picks a free one), prints the bound address
/// and serves until the process is stopped.
pub async fn serve(service: ApiService, port: u16) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(service))).await?;
    Ok(())
}
