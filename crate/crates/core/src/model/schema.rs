use std::fmt;

use serde::Serialize;

use super::PromptDocument;

/// One violated bound: the dotted field path and the bound it broke.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub bound: String,
}

impl Violation {
    fn new(field: impl Into<String>, bound: &str) -> Self {
        Violation {
            field: field.into(),
            bound: bound.to_owned(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SchemaReport {
    pub violations: Vec<Violation>,
}

impl SchemaReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn fields(&self) -> Vec<String> {
        self.violations.iter().map(|v| v.field.clone()).collect()
    }
}

impl fmt::Display for SchemaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{} must be {}", v.field, v.bound))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

fn non_empty(out: &mut Vec<Violation>, field: impl Into<String>, value: &str) {
    if value.trim().is_empty() {
        out.push(Violation::new(field, "non-empty"));
    }
}

fn at_most(out: &mut Vec<Violation>, field: impl Into<String>, value: u32, max: u32) {
    if value > max {
        out.push(Violation::new(field, &format!("0–{max}")));
    }
}

/// Checks every bound of the document schema. Violations are returned as
/// values; an empty report means the document is valid.
pub fn validate_schema(doc: &PromptDocument) -> SchemaReport {
    let mut v = Vec::new();

    let content = &doc.content;
    non_empty(&mut v, "content.user", &content.user);
    if !(content.temperature.is_finite() && (0.0..=2.0).contains(&content.temperature)) {
        v.push(Violation::new("content.temperature", "0–2"));
    }
    for (i, ex) in content.examples.iter().enumerate() {
        non_empty(&mut v, format!("content.examples[{i}].input"), &ex.input);
        non_empty(&mut v, format!("content.examples[{i}].output"), &ex.output);
    }

    let meta = &doc.metadata;
    non_empty(&mut v, "metadata.title", &meta.title);
    non_empty(&mut v, "metadata.domain", &meta.domain);
    for (i, m) in meta.target_models.iter().enumerate() {
        at_most(&mut v, format!("metadata.targetModels[{i}].performance"), m.performance, 100);
    }
    at_most(&mut v, "metadata.difficulty", meta.difficulty, 10);

    let prov = &doc.provenance;
    if prov.creator.is_zero() {
        v.push(Violation::new("provenance.creator", "a valid address"));
    }
    for (i, pair) in prov.contributors.windows(2).enumerate() {
        if pair[1].timestamp < pair[0].timestamp {
            v.push(Violation::new(
                format!("provenance.contributors[{}].timestamp", i + 1),
                "non-decreasing",
            ));
        }
    }

    let val = &doc.validation_summary;
    at_most(&mut v, "validation.score", val.score, 10);
    for (i, entry) in val.validators.iter().enumerate() {
        at_most(&mut v, format!("validation.validators[{i}].score"), entry.score, 10);
    }

    let usage = &doc.usage_summary;
    at_most(&mut v, "usage.successRate", usage.success_rate, 100);
    at_most(&mut v, "usage.averageRating", usage.average_rating, 10);

    SchemaReport { violations: v }
}
