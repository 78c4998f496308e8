//! File formats for corpora, inventories, sampled tool lists, gold sets and
//! model predictions.
//!
//! Record-per-line JSON throughout. The corpus reader is deliberately
//! lenient: rows that fail to parse or violate the polarity contract are
//! collected with their line numbers instead of aborting, because real corpus
//! dumps arrive dirty and the audit stage wants to count exactly that dirt.
//! Everything else (inventories, gold sets, predictions, config files) is
//! read strictly since those are either hand-maintained or produced by this
//! tool, and silent repair would hide bugs.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use callforge_core::audit::{NormalizationMap, PrunePlan};
use callforge_core::metrics::MetricsReport;
use callforge_core::schema::{validate_inventory, Sample, ToolSchema};
use callforge_core::serializer::SerializedExample;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// One corpus row: the sample itself plus optional sidecar fields used by
/// serialization. `reasoning` switches the row to the think-block template;
/// `token_count` overrides the built-in counter (for corpora pre-tokenized
/// with the real tokenizer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    #[serde(flatten)]
    pub sample: Sample,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_count: Option<usize>,
}

/// A row the corpus reader refused, with the 1-based line number and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub line: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusLoad {
    pub rows: Vec<CorpusRow>,
    pub skipped: Vec<RowError>,
}

/// Gold row for evaluation: the sample plus the tool names that were offered
/// in its prompt. Hallucination scoring needs the offered slice, not the full
/// inventory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRow {
    #[serde(flatten)]
    pub sample: Sample,
    pub offered_tools: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub output: String,
}

/// Output of the tool sampling stage: which tools each sample's prompt offers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledToolsRow {
    pub id: String,
    pub tools: Vec<String>,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

/// Lenient corpus reader. Blank lines are ignored; malformed rows, rows whose
/// `requires_function` flag disagrees with the presence of `target`, and rows
/// reusing an earlier id are skipped and reported.
pub fn read_corpus(path: &Path) -> Result<CorpusLoad> {
    let content = read_file(path)?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        match serde_json::from_str::<CorpusRow>(line) {
            Ok(row) => {
                if !row.sample.polarity_consistent() {
                    skipped.push(RowError {
                        line: lineno,
                        error: format!(
                            "sample {}: requires_function disagrees with target presence",
                            row.sample.id
                        ),
                    });
                } else if !seen.insert(row.sample.id.clone()) {
                    skipped.push(RowError {
                        line: lineno,
                        error: format!("duplicate sample id {}", row.sample.id),
                    });
                } else {
                    rows.push(row);
                }
            }
            Err(e) => skipped.push(RowError { line: lineno, error: e.to_string() }),
        }
    }
    Ok(CorpusLoad { rows, skipped })
}

/// Strict line-oriented reader: any bad row is fatal with its line number.
pub fn read_jsonl_strict<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let content = read_file(path)?;
    let mut rows = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str::<T>(line).map_err(|e| {
            CliError::input(format!("{} line {}: {e}", path.display(), idx + 1))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldRow>> {
    let rows: Vec<GoldRow> = read_jsonl_strict(path)?;
    let mut seen = BTreeSet::new();
    for row in &rows {
        if !row.sample.polarity_consistent() {
            return Err(CliError::input(format!(
                "gold sample {}: requires_function disagrees with target presence",
                row.sample.id
            )));
        }
        if let Some(target) = &row.sample.target {
            if !row.offered_tools.iter().any(|t| t == &target.tool_name) {
                return Err(CliError::input(format!(
                    "gold sample {}: target tool {} is not among its offered_tools",
                    row.sample.id, target.tool_name
                )));
            }
        }
        if !seen.insert(row.sample.id.clone()) {
            return Err(CliError::input(format!(
                "duplicate gold sample id {}",
                row.sample.id
            )));
        }
    }
    Ok(rows)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let rows: Vec<PredictionRow> = read_jsonl_strict(path)?;
    let mut seen = BTreeSet::new();
    for row in &rows {
        if !seen.insert(row.id.clone()) {
            return Err(CliError::input(format!("duplicate prediction id {}", row.id)));
        }
    }
    Ok(rows)
}

pub fn read_inventory(path: &Path) -> Result<Vec<ToolSchema>> {
    let content = read_file(path)?;
    let tools: Vec<ToolSchema> = serde_json::from_str(&content)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    validate_inventory(&tools)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(tools)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let content = read_file(path)?;
    serde_json::from_str(&content)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read_normalization_map(path: &Path) -> Result<NormalizationMap> {
    read_json(path)
}

pub fn read_prune_plan(path: &Path) -> Result<PrunePlan> {
    read_json(path)
}

pub fn read_serialized(path: &Path) -> Result<Vec<SerializedExample>> {
    read_jsonl_strict(path)
}

pub fn read_report(path: &Path) -> Result<MetricsReport> {
    read_json(path)
}

/// Renders rows as record-per-line JSON. Returned as a buffer so callers can
/// hash and write atomically in one step.
pub fn to_jsonl<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut out = String::new();
    for row in rows {
        let line = serde_json::to_string(row)
            .map_err(|e| CliError::internal(format!("serializing row: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::internal(format!("serializing json: {e}")))?;
    out.push('\n');
    Ok(out)
}
