//! In-process inverted index, faceted search and ranked listings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::PromptDocument;
use crate::node::Node;
use crate::primitives::{Address, UnixTime};
use crate::registry::{LifecycleState, PromptId, PromptRecord};

pub const DEFAULT_PAGE: usize = 20;
pub const MAX_PAGE: usize = 100;
pub const TRENDING_WINDOW: u64 = 24 * 60 * 60;

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
}

/// Term → prompt postings over titles, descriptions, tags and domains.
#[derive(Debug, Default, Clone)]
pub struct SearchIndex {
    postings: HashMap<String, BTreeSet<PromptId>>,
    titles: HashMap<PromptId, String>,
}

impl SearchIndex {
    pub fn insert(&mut self, id: PromptId, doc: &PromptDocument) {
        let m = &doc.metadata;
        let fields = [m.title.as_str(), m.description.as_str(), m.domain.as_str()]
            .into_iter()
            .chain(m.tags.iter().map(String::as_str))
            .chain(m.subdomains.iter().map(String::as_str));
        for field in fields {
            for t in tokens(field) {
                self.postings.entry(t).or_default().insert(id);
            }
        }
        self.titles.insert(id, m.title.clone());
    }

    /// Prompts containing every term of `text`.
    pub fn matching(&self, text: &str) -> BTreeSet<PromptId> {
        let mut terms = tokens(text).peekable();
        if terms.peek().is_none() {
            return BTreeSet::new();
        }
        let mut out: Option<BTreeSet<PromptId>> = None;
        for t in terms {
            let hits = self.postings.get(&t).cloned().unwrap_or_default();
            out = Some(match out {
                None => hits,
                Some(acc) => acc.intersection(&hits).copied().collect(),
            });
        }
        out.unwrap_or_default()
    }

    pub fn title(&self, id: &PromptId) -> Option<&str> {
        self.titles.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.titles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.titles.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchQuery {
    pub q: Option<String>,
    pub domain: Option<String>,
    pub min_score: Option<u8>,
    pub creator: Option<Address>,
    pub min_creator_reputation: Option<f64>,
    pub from: Option<UnixTime>,
    pub to: Option<UnixTime>,
    pub include_deprecated: bool,
    pub cursor: Option<String>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSummary {
    pub prompt_id: PromptId,
    pub title: String,
    pub domain: String,
    pub creator: Address,
    pub version: u32,
    pub state: LifecycleState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_score: Option<u8>,
    pub timestamp: UnixTime,
    pub total_uses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    /// Pass back as `cursor` for the next page; absent on the last page.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_cursor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendingItem {
    #[serde(flatten)]
    pub prompt: PromptSummary,
    pub window_uses: u64,
}

pub fn summarize(index: &SearchIndex, r: &PromptRecord) -> PromptSummary {
    PromptSummary {
        prompt_id: r.prompt_id,
        title: index.title(&r.prompt_id).unwrap_or_default().to_owned(),
        domain: r.domain.clone(),
        creator: r.creator,
        version: r.version,
        state: r.state,
        validation_score: r.validation_score,
        timestamp: r.timestamp,
        total_uses: r.total_uses,
    }
}

fn parse_cursor(cursor: &Option<String>) -> Result<Option<u64>, String> {
    cursor.as_deref().map(|c| c.parse::<u64>().map_err(|_| format!("invalid cursor {c:?}"))).transpose()
}

fn page_limit(limit: Option<usize>) -> usize {
    limit.unwrap_or(DEFAULT_PAGE).clamp(1, MAX_PAGE)
}

/// Matches in registration order. The cursor is the last sequence number
/// seen, so records registered between pages land after it and are never
/// skipped or repeated.
pub fn search(node: &Node, index: &SearchIndex, query: &SearchQuery) -> Result<Page<PromptSummary>, String> {
    let after = parse_cursor(&query.cursor)?;
    let limit = page_limit(query.limit);
    let text = query.q.as_deref().filter(|q| !q.trim().is_empty()).map(|q| index.matching(q));
    let mut reps: BTreeMap<Address, f64> = BTreeMap::new();
    let mut items = Vec::new();
    let mut more = false;
    for r in node.registry().in_order() {
        if after.is_some_and(|a| r.seq <= a) {
            continue;
        }
        if !query.include_deprecated && r.state == LifecycleState::Deprecated {
            continue;
        }
        if query.domain.as_ref().is_some_and(|d| *d != r.domain)
            || query.min_score.is_some_and(|m| r.validation_score.is_none_or(|s| s < m))
            || query.creator.is_some_and(|c| c != r.creator)
            || query.from.is_some_and(|t| r.timestamp < t)
            || query.to.is_some_and(|t| r.timestamp > t)
            || text.as_ref().is_some_and(|ids| !ids.contains(&r.prompt_id))
        {
            continue;
        }
        if let Some(min) = query.min_creator_reputation {
            let rep = *reps.entry(r.creator).or_insert_with(|| node.reputation_of(&r.creator));
            if rep < min {
                continue;
            }
        }
        if items.len() == limit {
            more = true;
            break;
        }
        items.push((r.seq, summarize(index, r)));
    }
    let next_cursor = if more { items.last().map(|(seq, _)| seq.to_string()) } else { None };
    Ok(Page { items: items.into_iter().map(|(_, s)| s).collect(), next_cursor })
}

/// Newest first. The cursor is the oldest sequence number returned.
pub fn recent(node: &Node, index: &SearchIndex, cursor: &Option<String>, limit: Option<usize>) -> Result<Page<PromptSummary>, String> {
    let before = parse_cursor(cursor)?;
    let limit = page_limit(limit);
    let mut records: Vec<&PromptRecord> = node
        .registry()
        .in_order()
        .into_iter()
        .filter(|r| r.state != LifecycleState::Deprecated && before.is_none_or(|b| r.seq < b))
        .collect();
    records.reverse();
    let more = records.len() > limit;
    records.truncate(limit);
    let next_cursor = if more { records.last().map(|r| r.seq.to_string()) } else { None };
    Ok(Page { items: records.into_iter().map(|r| summarize(index, r)).collect(), next_cursor })
}

/// Most used over the trailing window ending at `now`; ties go to the
/// earlier registration.
pub fn trending(node: &Node, index: &SearchIndex, now: UnixTime, limit: Option<usize>) -> Vec<TrendingItem> {
    let since = now.saturating_sub(TRENDING_WINDOW);
    let mut counts: BTreeMap<PromptId, u64> = BTreeMap::new();
    for (at, id) in node.usage_log().iter().rev() {
        if *at <= since {
            break;
        }
        *counts.entry(*id).or_default() += 1;
    }
    let mut ranked: Vec<(&PromptRecord, u64)> = counts
        .into_iter()
        .filter_map(|(id, n)| node.registry().get(&id).ok().map(|r| (r, n)))
        .filter(|(r, _)| r.state != LifecycleState::Deprecated)
        .collect();
    ranked.sort_by(|(a, na), (b, nb)| nb.cmp(na).then(a.seq.cmp(&b.seq)));
    ranked
        .into_iter()
        .take(page_limit(limit))
        .map(|(r, n)| TrendingItem { prompt: summarize(index, r), window_uses: n })
        .collect()
}
