//! Canonical byte form of a prompt document.
//!
//! Only `content`, `metadata` and `provenance` are hashed. Fields appear in
//! schema order, there is no whitespace, strings are UTF-8 with JSON escaping,
//! and numbers use the shortest round-trip decimal form. Negative zero is
//! written as zero so that equal documents always produce equal bytes.

use std::ops::Range;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{validate_schema, ModelError, PromptContent, PromptDocument, PromptMetadata, Provenance};

/// How unknown JSON fields are treated by [`parse_document`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Unknown fields are a parse error.
    #[default]
    Strict,
    /// Unknown fields are dropped.
    Lenient,
}

#[derive(Serialize)]
struct CanonicalView<'a> {
    content: CanonicalContent<'a>,
    metadata: &'a PromptMetadata,
    provenance: &'a Provenance,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CanonicalContent<'a> {
    system: &'a str,
    user: &'a str,
    examples: &'a [super::Example],
    temperature: f64,
    max_tokens: u64,
}

impl<'a> CanonicalContent<'a> {
    fn new(c: &'a PromptContent) -> Self {
        CanonicalContent {
            system: &c.system,
            user: &c.user,
            examples: &c.examples,
            // -0.0 == 0.0 but would print differently.
            temperature: if c.temperature == 0.0 { 0.0 } else { c.temperature },
            max_tokens: c.max_tokens,
        }
    }
}

const SYSTEM_PREFIX: &[u8] = br#"{"content":{"system":""#;

/// Canonical bytes of `doc`. Fails with `SchemaInvalid` when the document does
/// not pass [`validate_schema`].
pub fn canonical_serialize(doc: &PromptDocument) -> Result<Vec<u8>, ModelError> {
    let report = validate_schema(doc);
    if !report.is_ok() {
        return Err(ModelError::SchemaInvalid(report));
    }
    let view = CanonicalView {
        content: CanonicalContent::new(&doc.content),
        metadata: &doc.metadata,
        provenance: &doc.provenance,
    };
    Ok(serde_json::to_vec(&view).expect("document serialization is infallible"))
}

/// Byte range of the escaped `content.system` string inside canonical bytes.
/// The store keeps this range as its own block so prompts sharing a system
/// block share storage.
pub fn system_block_range(doc: &PromptDocument) -> Range<usize> {
    let escaped = serde_json::to_string(&doc.content.system).expect("string serialization");
    let start = SYSTEM_PREFIX.len();
    start..start + escaped.len() - 2
}

/// Keys allowed at each object position of the wire schema.
fn known_keys(path: &str) -> Option<&'static [&'static str]> {
    Some(match path {
        "" => &["promptId", "version", "content", "metadata", "provenance", "validation", "usage"],
        "content" => &["system", "user", "examples", "temperature", "maxTokens"],
        "content.examples[]" => &["input", "output"],
        "metadata" => &[
            "title",
            "description",
            "domain",
            "subdomain",
            "targetModels",
            "outputFormat",
            "language",
            "tags",
            "difficulty",
            "estimatedTokens",
        ],
        "metadata.targetModels[]" => &["provider", "model", "version", "performance"],
        "provenance" => &["creator", "timestamp", "parentPromptId", "contributors", "license"],
        "provenance.contributors[]" => &["address", "contribution", "timestamp"],
        "validation" => &["score", "validators", "domainExperts", "generalUsers"],
        "validation.validators[]" => &["address", "score", "comment", "expertise"],
        "usage" => &["totalUses", "successRate", "averageRating", "derivatives"],
        _ => return None,
    })
}

fn child_path(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_owned()
    } else {
        format!("{parent}.{key}")
    }
}

fn prune_unknown(value: &mut Value, path: &str, mode: ParseMode) -> Result<(), ModelError> {
    match value {
        Value::Object(map) => {
            if let Some(allowed) = known_keys(path) {
                check_object(map, path, allowed, mode)?;
                for (key, child) in map.iter_mut() {
                    prune_unknown(child, &child_path(path, key), mode)?;
                }
            }
        }
        Value::Array(items) => {
            let item_path = format!("{path}[]");
            for item in items {
                prune_unknown(item, &item_path, mode)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn check_object(
    map: &mut Map<String, Value>,
    path: &str,
    allowed: &[&str],
    mode: ParseMode,
) -> Result<(), ModelError> {
    let unknown: Vec<String> = map
        .keys()
        .filter(|k| !allowed.contains(&k.as_str()))
        .cloned()
        .collect();
    match mode {
        ParseMode::Strict => match unknown.first() {
            Some(key) => Err(ModelError::Parse(format!("unknown field `{}`", child_path(path, key)))),
            None => Ok(()),
        },
        ParseMode::Lenient => {
            for key in unknown {
                map.remove(&key);
            }
            Ok(())
        }
    }
}

/// Parses the external JSON encoding. Any well-formed encoding of a valid
/// document is accepted, canonical or not; `promptId` and `version` are
/// registry-side fields and are dropped.
pub fn parse_document(bytes: &[u8], mode: ParseMode) -> Result<PromptDocument, ModelError> {
    let mut value: Value = serde_json::from_slice(bytes).map_err(|e| ModelError::Parse(e.to_string()))?;
    if !value.is_object() {
        return Err(ModelError::Parse("document must be a JSON object".into()));
    }
    prune_unknown(&mut value, "", mode)?;
    if let Value::Object(map) = &mut value {
        map.remove("promptId");
        map.remove("version");
    }
    let doc: PromptDocument = serde_json::from_value(value).map_err(|e| ModelError::Parse(e.to_string()))?;
    let report = validate_schema(&doc);
    if !report.is_ok() {
        return Err(ModelError::SchemaInvalid(report));
    }
    Ok(doc)
}
