//! Scoring of parsed completions against gold samples.
//!
//! Each record gets exactly one error class by a fixed precedence, so the
//! class distribution always sums to one. Argument quality uses F1 over
//! exact (key, value) pairs: string values are compared after NFC and trim,
//! integers and floats compare numerically, and nested structures compare
//! recursively. Aggregation turns record scores into corpus-level rates with
//! per-dialect and per-domain breakdowns, and rendering emits either stable
//! JSON or a markdown report.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::parser::{ParsedKind, ParsedOutput};
use crate::schema::{normalize_surface, Sample};

/// Mutually exclusive outcome classes, in reporting order. Precedence when
/// several could apply: parse failure, then hallucination, then missed call
/// or correct abstention, then wrong function, then argument mismatch, then
/// correct.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    ParseFailure,
    /// Called when it should not have, or called a tool it was never offered.
    ToolHallucination,
    WrongFunction,
    ArgumentMismatch,
    Correct,
    /// Positive sample answered without a call.
    MissedCall,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 6] = [
        ErrorClass::ParseFailure,
        ErrorClass::ToolHallucination,
        ErrorClass::WrongFunction,
        ErrorClass::ArgumentMismatch,
        ErrorClass::Correct,
        ErrorClass::MissedCall,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ErrorClass::ParseFailure => "parse_failure",
            ErrorClass::ToolHallucination => "tool_hallucination",
            ErrorClass::WrongFunction => "wrong_function",
            ErrorClass::ArgumentMismatch => "argument_mismatch",
            ErrorClass::Correct => "correct",
            ErrorClass::MissedCall => "missed_call",
        }
    }
}

/// Everything measured about one (sample, prediction) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub sample_id: String,
    pub error_class: ErrorClass,
    /// Whether the prediction parsed into a call.
    pub called: bool,
    pub name_correct: bool,
    pub arg_precision: f64,
    pub arg_recall: f64,
    pub arg_f1: f64,
    /// F1 over argument keys alone, ignoring values.
    pub arg_key_f1: f64,
    pub arg_exact: bool,
    /// Right tool and exactly the gold arguments.
    pub full_match: bool,
    pub had_think_block: bool,
}

impl RecordScore {
    fn uncalled(sample_id: &str, class: ErrorClass, had_think_block: bool) -> Self {
        RecordScore {
            sample_id: sample_id.to_string(),
            error_class: class,
            called: false,
            name_correct: false,
            arg_precision: 0.0,
            arg_recall: 0.0,
            arg_f1: 0.0,
            arg_key_f1: 0.0,
            arg_exact: false,
            full_match: false,
            had_think_block,
        }
    }
}

/// Deep value equality for argument comparison. Strings compare after NFC
/// and trim, numbers compare numerically (3 equals 3.0), everything else is
/// structural.
fn values_match(a: &serde_json::Value, b: &serde_json::Value) -> bool {
    use serde_json::Value;
    match (a, b) {
        (Value::String(x), Value::String(y)) => normalize_surface(x) == normalize_surface(y),
        (Value::Number(x), Value::Number(y)) => {
            let ints = (int_of(x), int_of(y));
            match ints {
                (Some(i), Some(j)) => i == j,
                _ => x.as_f64() == y.as_f64(),
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(u, v)| values_match(u, v))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x.iter().all(|(k, u)| y.get(k).is_some_and(|v| values_match(u, v)))
        }
        (Value::Null, Value::Null) => true,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        _ => false,
    }
}

fn int_of(n: &serde_json::Number) -> Option<i128> {
    n.as_i64()
        .map(i128::from)
        .or_else(|| n.as_u64().map(i128::from))
}

struct ArgScores {
    precision: f64,
    recall: f64,
    f1: f64,
    key_f1: f64,
    exact: bool,
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn score_arguments(
    predicted: &BTreeMap<String, serde_json::Value>,
    gold: &BTreeMap<String, serde_json::Value>,
) -> ArgScores {
    let matched_pairs = predicted
        .iter()
        .filter(|(k, v)| gold.get(*k).is_some_and(|g| values_match(v, g)))
        .count();
    let matched_keys = predicted.keys().filter(|k| gold.contains_key(*k)).count();

    // empty sides score perfect by convention, so an all-empty match is exact
    let over = |count: usize, total: usize| {
        if total == 0 {
            1.0
        } else {
            count as f64 / total as f64
        }
    };
    let precision = over(matched_pairs, predicted.len());
    let recall = over(matched_pairs, gold.len());
    let key_precision = over(matched_keys, predicted.len());
    let key_recall = over(matched_keys, gold.len());

    ArgScores {
        precision,
        recall,
        f1: f1_of(precision, recall),
        key_f1: f1_of(key_precision, key_recall),
        exact: matched_pairs == predicted.len() && matched_pairs == gold.len(),
    }
}

/// Classifies and scores one parsed prediction against its sample.
///
/// `offered_tools` is the tool slice this sample's prompt actually declared;
/// a parsed call outside it is a hallucination no matter what it names.
/// Argument scores are computed for every parsed call on a positive, even
/// when the tool name is wrong, so argument quality can be read independent
/// of routing quality.
pub fn score_record(sample: &Sample, parsed: &ParsedOutput, offered_tools: &[String]) -> RecordScore {
    debug_assert!(sample.polarity_consistent(), "polarity checked at load time");

    match parsed.kind {
        ParsedKind::ParseFailure => {
            RecordScore::uncalled(&sample.id, ErrorClass::ParseFailure, parsed.had_think_block)
        }
        ParsedKind::NoCall => {
            let class = if sample.requires_function {
                ErrorClass::MissedCall
            } else {
                ErrorClass::Correct
            };
            RecordScore::uncalled(&sample.id, class, parsed.had_think_block)
        }
        ParsedKind::ParsedCall => {
            let call = parsed.call.as_ref().expect("parsed call carries a call");
            if !sample.requires_function {
                return RecordScore {
                    called: true,
                    ..RecordScore::uncalled(
                        &sample.id,
                        ErrorClass::ToolHallucination,
                        parsed.had_think_block,
                    )
                };
            }

            let gold = sample.target.as_ref();
            let name_correct = gold.is_some_and(|g| g.tool_name == call.tool_name);
            let empty = BTreeMap::new();
            let args = score_arguments(
                &call.arguments,
                gold.map(|g| &g.arguments).unwrap_or(&empty),
            );

            let class = if !offered_tools.contains(&call.tool_name) {
                ErrorClass::ToolHallucination
            } else if !name_correct {
                ErrorClass::WrongFunction
            } else if !args.exact {
                ErrorClass::ArgumentMismatch
            } else {
                ErrorClass::Correct
            };

            RecordScore {
                sample_id: sample.id.clone(),
                error_class: class,
                called: true,
                name_correct,
                arg_precision: args.precision,
                arg_recall: args.recall,
                arg_f1: args.f1,
                arg_key_f1: args.key_f1,
                arg_exact: args.exact,
                full_match: name_correct && args.exact,
                had_think_block: parsed.had_think_block,
            }
        }
    }
}

/// Per-group slice of the corpus in a breakdown table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    /// All records in the group, positives and negatives.
    pub n: usize,
    pub positives: usize,
    /// Name accuracy over the group's positives; absent when it has none.
    pub function_name_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub parse_failure_rate: f64,
    /// Complement of the parse failure rate.
    pub format_validity: f64,
    pub function_name_accuracy: Option<f64>,
    pub full_call_match: Option<f64>,
    pub mean_arg_f1: Option<f64>,
    pub mean_arg_key_f1: Option<f64>,
    pub arg_exact_rate: Option<f64>,
    pub tool_call_rate: f64,
    pub hallucination_rate: f64,
    /// Calls on negative samples, over all records.
    pub hallucination_on_negative: f64,
    /// Calls to tools outside the offered slice, over all records.
    pub hallucination_unoffered_tool: f64,
    pub abstention_accuracy: Option<f64>,
    pub think_before_call_rate: Option<f64>,
    /// Fraction of records where calling or abstaining matched the label.
    pub decision_accuracy: f64,
    pub error_distribution: BTreeMap<ErrorClass, f64>,
    pub by_dialect: BTreeMap<String, GroupStats>,
    pub by_domain: BTreeMap<String, GroupStats>,
    /// Definitions and provenance strings carried into rendered reports.
    pub notes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("cannot aggregate zero records")]
    EmptyInput,
    #[error("{scores} scores but {samples} samples")]
    LengthMismatch { scores: usize, samples: usize },
    #[error("score {score_id:?} does not line up with sample {sample_id:?} at index {index}")]
    IdMismatch {
        index: usize,
        score_id: String,
        sample_id: String,
    },
    #[error("duplicate sample id {id:?}")]
    DuplicateId { id: String },
}

struct GroupAccum {
    n: usize,
    positives: usize,
    names_correct: usize,
}

/// Combines aligned record scores and samples into a corpus report.
pub fn aggregate(scores: &[RecordScore], samples: &[Sample]) -> Result<MetricsReport, MetricsError> {
    if scores.len() != samples.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            samples: samples.len(),
        });
    }
    if scores.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut seen = BTreeSet::new();
    for (index, (score, sample)) in scores.iter().zip(samples).enumerate() {
        if score.sample_id != sample.id {
            return Err(MetricsError::IdMismatch {
                index,
                score_id: score.sample_id.clone(),
                sample_id: sample.id.clone(),
            });
        }
        if !seen.insert(sample.id.as_str()) {
            return Err(MetricsError::DuplicateId {
                id: sample.id.clone(),
            });
        }
    }

    let n = scores.len();
    let nf = n as f64;
    let mut class_counts: BTreeMap<ErrorClass, usize> =
        ErrorClass::ALL.iter().map(|c| (*c, 0)).collect();
    let mut positives = 0usize;
    let mut negatives = 0usize;
    let mut names_correct = 0usize;
    let mut full_matches = 0usize;
    let mut called = 0usize;
    let mut called_on_positive = 0usize;
    let mut called_on_negative = 0usize;
    let mut unoffered_calls = 0usize;
    let mut abstained_correctly = 0usize;
    let mut decisions_correct = 0usize;
    let mut think_calls = 0usize;
    let mut f1_sum = 0.0;
    let mut key_f1_sum = 0.0;
    let mut exact_count = 0usize;
    let mut by_dialect: BTreeMap<String, GroupAccum> = BTreeMap::new();
    let mut by_domain: BTreeMap<String, GroupAccum> = BTreeMap::new();

    for (score, sample) in scores.iter().zip(samples) {
        *class_counts.get_mut(&score.error_class).expect("all classes present") += 1;

        if sample.requires_function {
            positives += 1;
            if score.name_correct {
                names_correct += 1;
            }
            if score.full_match {
                full_matches += 1;
            }
            if score.called {
                called_on_positive += 1;
                f1_sum += score.arg_f1;
                key_f1_sum += score.arg_key_f1;
                if score.arg_exact {
                    exact_count += 1;
                }
                if score.error_class == ErrorClass::ToolHallucination {
                    unoffered_calls += 1;
                }
            }
        } else {
            negatives += 1;
            if score.called {
                called_on_negative += 1;
            } else if score.error_class == ErrorClass::Correct {
                abstained_correctly += 1;
            }
        }

        if score.called {
            called += 1;
            if score.had_think_block {
                think_calls += 1;
            }
        }
        if score.called == sample.requires_function {
            decisions_correct += 1;
        }

        for (map, key) in [
            (&mut by_dialect, sample.dialect.name().to_string()),
            (&mut by_domain, sample.domain.clone()),
        ] {
            let group = map.entry(key).or_insert(GroupAccum {
                n: 0,
                positives: 0,
                names_correct: 0,
            });
            group.n += 1;
            if sample.requires_function {
                group.positives += 1;
                if score.name_correct {
                    group.names_correct += 1;
                }
            }
        }
    }

    let ratio = |count: usize, total: usize| {
        if total == 0 {
            None
        } else {
            Some(count as f64 / total as f64)
        }
    };
    let finish_groups = |map: BTreeMap<String, GroupAccum>| {
        map.into_iter()
            .map(|(key, g)| {
                (
                    key,
                    GroupStats {
                        n: g.n,
                        positives: g.positives,
                        function_name_accuracy: ratio(g.names_correct, g.positives),
                    },
                )
            })
            .collect()
    };

    let parse_failure_rate = class_counts[&ErrorClass::ParseFailure] as f64 / nf;
    let mut notes = BTreeMap::new();
    notes.insert(
        "arg_f1".to_string(),
        "per-record F1 over exact (key, value) argument pairs; strings compared after NFC and trim, numbers numerically".to_string(),
    );
    notes.insert(
        "decision_accuracy".to_string(),
        "fraction of records where producing a call (or not) matched requires_function".to_string(),
    );
    notes.insert(
        "hallucination_rate".to_string(),
        "calls on negatives plus calls to unoffered tools, over all records".to_string(),
    );
    notes.insert(
        "think_before_call_rate".to_string(),
        "fraction of parsed calls whose completion opened with a reasoning block".to_string(),
    );

    Ok(MetricsReport {
        n,
        parse_failure_rate,
        format_validity: 1.0 - parse_failure_rate,
        function_name_accuracy: ratio(names_correct, positives),
        full_call_match: ratio(full_matches, positives),
        mean_arg_f1: (called_on_positive > 0).then(|| f1_sum / called_on_positive as f64),
        mean_arg_key_f1: (called_on_positive > 0).then(|| key_f1_sum / called_on_positive as f64),
        arg_exact_rate: ratio(exact_count, called_on_positive),
        tool_call_rate: called as f64 / nf,
        hallucination_rate: class_counts[&ErrorClass::ToolHallucination] as f64 / nf,
        hallucination_on_negative: called_on_negative as f64 / nf,
        hallucination_unoffered_tool: unoffered_calls as f64 / nf,
        abstention_accuracy: ratio(abstained_correctly, negatives),
        think_before_call_rate: ratio(think_calls, called),
        decision_accuracy: decisions_correct as f64 / nf,
        error_distribution: class_counts
            .into_iter()
            .map(|(class, count)| (class, count as f64 / nf))
            .collect(),
        by_dialect: finish_groups(by_dialect),
        by_domain: finish_groups(by_domain),
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("report covers zero records; nothing to render")]
    EmptyReport,
}

/// Renders a report as pretty JSON with stable key order, or as markdown
/// with the summary, per-dialect, per-domain, and error tables.
pub fn render_report(report: &MetricsReport, format: ReportFormat) -> Result<String, RenderError> {
    if report.n == 0 {
        return Err(RenderError::EmptyReport);
    }
    match format {
        ReportFormat::Json => {
            Ok(serde_json::to_string_pretty(report).expect("report serializes infallibly"))
        }
        ReportFormat::Markdown => Ok(render_markdown(report)),
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

fn render_markdown(report: &MetricsReport) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "# Evaluation Report");
    let _ = writeln!(out);
    let _ = writeln!(out, "{} records scored.", report.n);
    let _ = writeln!(out);
    let _ = writeln!(out, "## Summary");
    let _ = writeln!(out);
    let _ = writeln!(out, "| Metric | Value |");
    let _ = writeln!(out, "|---|---|");
    let rows: [(&str, String); 12] = [
        ("Parse failure rate", format!("{:.4}", report.parse_failure_rate)),
        ("Format validity", format!("{:.4}", report.format_validity)),
        ("Function name accuracy", fmt_opt(report.function_name_accuracy)),
        ("Full call match", fmt_opt(report.full_call_match)),
        ("Mean argument F1", fmt_opt(report.mean_arg_f1)),
        ("Mean argument key F1", fmt_opt(report.mean_arg_key_f1)),
        ("Argument exact rate", fmt_opt(report.arg_exact_rate)),
        ("Tool call rate", format!("{:.4}", report.tool_call_rate)),
        ("Hallucination rate", format!("{:.4}", report.hallucination_rate)),
        ("Abstention accuracy", fmt_opt(report.abstention_accuracy)),
        ("Think-before-call rate", fmt_opt(report.think_before_call_rate)),
        ("Decision accuracy", format!("{:.4}", report.decision_accuracy)),
    ];
    for (label, value) in rows {
        let _ = writeln!(out, "| {label} | {value} |");
    }

    for (title, groups, canonical) in [
        (
            "## Function name accuracy by dialect",
            &report.by_dialect,
            true,
        ),
        ("## Function name accuracy by domain", &report.by_domain, false),
    ] {
        let _ = writeln!(out);
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out);
        let _ = writeln!(out, "| Group | Records | Positives | Name accuracy |");
        let _ = writeln!(out, "|---|---|---|---|");
        let emit = |out: &mut String, key: &str, stats: &GroupStats| {
            let _ = writeln!(
                out,
                "| {key} | {} | {} | {} |",
                stats.n,
                stats.positives,
                fmt_opt(stats.function_name_accuracy)
            );
        };
        if canonical {
            // dialects print in the corpus convention order, not alphabetical
            for dialect in crate::schema::Dialect::ALL {
                if let Some(stats) = groups.get(dialect.name()) {
                    emit(&mut out, dialect.name(), stats);
                }
            }
        } else {
            for (key, stats) in groups {
                emit(&mut out, key, stats);
            }
        }
    }

    let _ = writeln!(out);
    let _ = writeln!(out, "## Error distribution");
    let _ = writeln!(out);
    let _ = writeln!(out, "| Error class | Share |");
    let _ = writeln!(out, "|---|---|");
    for class in ErrorClass::ALL {
        let share = report.error_distribution.get(&class).copied().unwrap_or(0.0);
        let _ = writeln!(out, "| {} | {:.2}% |", class.label(), share * 100.0);
    }

    if !report.notes.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "## Notes");
        let _ = writeln!(out);
        for (key, note) in &report.notes {
            let _ = writeln!(out, "- `{key}`: {note}");
        }
    }

    out
}
