//! The prompt document schema: content, descriptive metadata, provenance and
//! the two server-populated summaries.
//!
//! Field names on the wire follow the published JSON layout exactly
//! (`maxTokens`, `targetModels`, `parentPromptId`, ...). Registry-side fields
//! (`promptId`, `version`) are accepted on input but never stored in the
//! document; they are derived by the registry after the content is hashed.

mod canonical;
mod schema;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{Address, UnixTime};
use crate::registry::PromptId;

pub use canonical::{canonical_serialize, parse_document, system_block_range, ParseMode};
pub use schema::{validate_schema, SchemaReport, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("document violates schema: {0}")]
    SchemaInvalid(SchemaReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PromptDocument {
    pub content: PromptContent,
    pub metadata: PromptMetadata,
    pub provenance: Provenance,
    #[serde(default, rename = "validation")]
    pub validation_summary: ValidationSummary,
    #[serde(default, rename = "usage")]
    pub usage_summary: UsageSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PromptContent {
    #[serde(default)]
    pub system: String,
    pub user: String,
    #[serde(default)]
    pub examples: Vec<Example>,
    pub temperature: f64,
    pub max_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PromptMetadata {
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub domain: String,
    #[serde(default, rename = "subdomain")]
    pub subdomains: Vec<String>,
    #[serde(default)]
    pub target_models: Vec<TargetModel>,
    pub output_format: OutputFormat,
    #[serde(default)]
    pub language: String,
    #[serde(default)]
    pub tags: Vec<String>,
    pub difficulty: u32,
    #[serde(default)]
    pub estimated_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetModel {
    pub provider: String,
    pub model: String,
    #[serde(default)]
    pub version: String,
    /// Success rate on this model, 0–100.
    pub performance: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Text,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Provenance {
    pub creator: Address,
    pub timestamp: UnixTime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_prompt_id: Option<PromptId>,
    #[serde(default)]
    pub contributors: Vec<Contributor>,
    #[serde(default)]
    pub license: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contributor {
    pub address: Address,
    pub contribution: String,
    pub timestamp: UnixTime,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ValidationSummary {
    #[serde(default)]
    pub score: u32,
    #[serde(default)]
    pub validators: Vec<ValidatorEntry>,
    #[serde(default, rename = "domainExperts")]
    pub domain_expert_count: u64,
    #[serde(default, rename = "generalUsers")]
    pub general_user_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidatorEntry {
    pub address: Address,
    pub score: u32,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub expertise: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct UsageSummary {
    #[serde(default)]
    pub total_uses: u64,
    #[serde(default)]
    pub success_rate: u32,
    #[serde(default)]
    pub average_rating: u32,
    #[serde(default)]
    pub derivatives: u64,
}

impl PromptDocument {
    /// A minimal valid document, handy as a starting point for builders and tests.
    pub fn minimal(creator: Address, timestamp: UnixTime, title: &str, domain: &str, user: &str) -> Self {
        PromptDocument {
            content: PromptContent {
                system: String::new(),
                user: user.to_owned(),
                examples: Vec::new(),
                temperature: 0.7,
                max_tokens: 512,
            },
            metadata: PromptMetadata {
                title: title.to_owned(),
                description: String::new(),
                domain: domain.to_owned(),
                subdomains: Vec::new(),
                target_models: Vec::new(),
                output_format: OutputFormat::Text,
                language: "en".to_owned(),
                tags: Vec::new(),
                difficulty: 5,
                estimated_tokens: 0,
            },
            provenance: Provenance {
                creator,
                timestamp,
                parent_prompt_id: None,
                contributors: Vec::new(),
                license: "CC-BY-4.0".to_owned(),
            },
            validation_summary: ValidationSummary::default(),
            usage_summary: UsageSummary::default(),
        }
    }
}
