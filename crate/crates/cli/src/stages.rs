//! The pipeline stages: audit, repair, sample, serialize, split, evaluate,
//! report, plus the end-to-end driver that chains them.
//!
//! Each stage writes its artifacts into the output directory and records a
//! manifest. Stages operate on in-memory data handed to them so the pipeline
//! never re-reads what the previous stage just wrote, while standalone
//! subcommands load the same inputs from configured paths first. Artifacts
//! and manifests contain nothing run-specific beyond seed and config, so a
//! rerun with identical inputs reproduces every output byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use callforge_core::audit::{apply_prune, audit, normalize_sample, AuditReport};
use callforge_core::metrics::{
    aggregate, render_report, score_record, MetricsReport, RecordScore, ReportFormat,
};
use callforge_core::parser::{parse_output, ParseMode, ParsedKind, ParsedOutput};
use callforge_core::sampler::{sample_tools, SamplerConfig};
use callforge_core::schema::{Sample, ToolSchema};
use callforge_core::serializer::{
    check_context_fit, serialize, serialize_think, DefaultTokenCounter, SerializedExample,
    TokenCounter,
};
use callforge_core::splitter::{stratified_split, SplitSpec, StratumCounts};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::formats::{
    read_corpus, read_gold, read_inventory, read_normalization_map, read_predictions,
    read_prune_plan, to_jsonl, to_pretty_json, CorpusLoad, CorpusRow, GoldRow, PredictionRow,
    RowError, SampledToolsRow,
};
use crate::manifest::{
    entry_for_content, file_entry, write_atomic, write_manifest, FileEntry, StageManifest,
};

pub const AUDIT_JSON: &str = "audit.json";
pub const AUDIT_TEXT: &str = "audit.txt";
pub const REPAIRED_CORPUS: &str = "corpus.repaired.jsonl";
pub const REPAIRED_INVENTORY: &str = "inventory.repaired.json";
pub const SAMPLED_TOOLS: &str = "sampled_tools.jsonl";
pub const SERIALIZED: &str = "serialized.jsonl";
pub const TRAIN: &str = "train.jsonl";
pub const VAL: &str = "val.jsonl";
pub const TEST: &str = "test.jsonl";
pub const SPLIT_STRATA: &str = "split.strata.json";
pub const GOLD: &str = "gold.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const PARSED_DUMP: &str = "parsed.jsonl";

/// Shared context for stage execution: resolved config, where artifacts go,
/// and the config hash stamped into every manifest.
pub struct Runner {
    pub config: PipelineConfig,
    pub output_dir: PathBuf,
    config_hash: String,
}

/// Full audit artifact: the report plus the rows the loader refused.
#[derive(Serialize)]
struct AuditArtifact<'a> {
    #[serde(flatten)]
    report: &'a AuditReport,
    skipped_rows: &'a [RowError],
}

#[derive(Serialize)]
struct SplitStrata<'a> {
    strata: &'a BTreeMap<String, StratumCounts>,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct ParsedDumpRow<'a> {
    id: &'a str,
    parsed: &'a ParsedOutput,
}

fn counts_map(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn samples_of(rows: &[CorpusRow]) -> Vec<Sample> {
    rows.iter().map(|r| r.sample.clone()).collect()
}

impl Runner {
    pub fn new(config: PipelineConfig) -> Self {
        let output_dir = config.output_dir();
        let config_hash = config.config_hash();
        Runner { config, output_dir, config_hash }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    /// Writes one artifact atomically and returns its manifest entry.
    fn write_artifact(&self, name: &str, content: &str, records: Option<u64>) -> Result<FileEntry> {
        let path = self.path(name);
        write_atomic(&path, content)?;
        Ok(entry_for_content(&path, content, records))
    }

    fn finish_stage(
        &self,
        stage: &'static str,
        inputs: Vec<FileEntry>,
        outputs: Vec<FileEntry>,
        counts: BTreeMap<String, u64>,
    ) -> Result<()> {
        let manifest = StageManifest {
            stage,
            seed: self.config.seed,
            config_hash: self.config_hash.clone(),
            inputs,
            outputs,
            counts,
        };
        write_manifest(&self.output_dir, &manifest)
    }

    pub fn load_corpus(&self) -> Result<(PathBuf, CorpusLoad)> {
        let path = self.config.corpus_path()?;
        let load = read_corpus(&path)?;
        Ok((path, load))
    }

    pub fn load_inventory(&self) -> Result<(PathBuf, Vec<ToolSchema>)> {
        let path = self.config.inventory_path()?;
        let inventory = read_inventory(&path)?;
        Ok((path, inventory))
    }

    /// Audit stage: read-only counts over corpus and inventory.
    pub fn audit_stage(
        &self,
        inputs: Vec<FileEntry>,
        load: &CorpusLoad,
        inventory: &[ToolSchema],
    ) -> Result<AuditReport> {
        let samples = samples_of(&load.rows);
        let mut report = audit(
            &samples,
            inventory,
            self.config.token_budget,
            &self.config.serializer,
        );
        report.unreadable_rows = load.skipped.len();

        let artifact = AuditArtifact { report: &report, skipped_rows: &load.skipped };
        let json_entry = self.write_artifact(AUDIT_JSON, &to_pretty_json(&artifact)?, None)?;
        let text_entry = self.write_artifact(AUDIT_TEXT, &report.render_text(), None)?;

        self.finish_stage(
            "audit",
            inputs,
            vec![json_entry, text_entry],
            counts_map(&[
                ("samples", report.total_samples as u64),
                ("unreadable_rows", report.unreadable_rows as u64),
                ("empty_queries", report.empty_queries as u64),
                ("enum_violations_legacy", report.enum_violations_legacy as u64),
                ("restored_by_null_fix", report.samples_restored_by_fix as u64),
                ("oversized_prompts", report.oversized_prompts as u64),
            ]),
        )?;
        Ok(report)
    }

    /// Repair stage: normalization map, then prune plan, then dropping rows
    /// that cannot be serialized because their query is empty. Sidecar fields
    /// ride along by id since the core transforms only see samples.
    pub fn repair_stage(
        &self,
        mut inputs: Vec<FileEntry>,
        load: CorpusLoad,
        inventory: Vec<ToolSchema>,
    ) -> Result<(Vec<CorpusRow>, Vec<ToolSchema>)> {
        let unreadable = load.skipped.len();
        let mut sidecars: BTreeMap<String, (Option<String>, Option<usize>)> = load
            .rows
            .iter()
            .map(|r| (r.sample.id.clone(), (r.reasoning.clone(), r.token_count)))
            .collect();
        let mut samples = samples_of(&load.rows);

        let mut normalized = 0u64;
        if let Some(path) = &self.config.paths.normalization_map {
            let map = read_normalization_map(path)?;
            map.validate(&inventory)
                .map_err(|e| CliError::input(format!("normalization map: {e}")))?;
            inputs.push(file_entry(path, None)?);
            samples = samples
                .into_iter()
                .map(|s| {
                    let after = normalize_sample(s.clone(), &map);
                    if after != s {
                        normalized += 1;
                    }
                    after
                })
                .collect();
        }

        let (samples, inventory, dropped_pruned, rewritten) =
            if let Some(path) = &self.config.paths.prune_plan {
                let plan = read_prune_plan(path)?;
                inputs.push(file_entry(path, None)?);
                let outcome = apply_prune(samples, inventory, &plan)
                    .map_err(|e| CliError::input(format!("prune plan: {e}")))?;
                (
                    outcome.samples,
                    outcome.inventory,
                    outcome.dropped_samples as u64,
                    outcome.rewritten_samples as u64,
                )
            } else {
                (samples, inventory, 0, 0)
            };

        let mut dropped_empty = 0u64;
        let rows: Vec<CorpusRow> = samples
            .into_iter()
            .filter(|s| {
                let keep = !s.query.trim().is_empty();
                if !keep {
                    dropped_empty += 1;
                }
                keep
            })
            .map(|sample| {
                let (reasoning, token_count) = sidecars
                    .remove(&sample.id)
                    .expect("repair never invents sample ids");
                CorpusRow { sample, reasoning, token_count }
            })
            .collect();

        let corpus_entry =
            self.write_artifact(REPAIRED_CORPUS, &to_jsonl(&rows)?, Some(rows.len() as u64))?;
        let inventory_entry = self.write_artifact(
            REPAIRED_INVENTORY,
            &to_pretty_json(&inventory)?,
            Some(inventory.len() as u64),
        )?;

        self.finish_stage(
            "repair",
            inputs,
            vec![corpus_entry, inventory_entry],
            counts_map(&[
                ("output_samples", rows.len() as u64),
                ("unreadable_rows", unreadable as u64),
                ("normalized_samples", normalized),
                ("rewritten_samples", rewritten),
                ("dropped_pruned", dropped_pruned),
                ("dropped_empty_query", dropped_empty),
                ("surviving_tools", inventory.len() as u64),
            ]),
        )?;
        Ok((rows, inventory))
    }

    /// Sampling stage: draw each sample's offered tool slice.
    pub fn sample_stage(
        &self,
        inputs: Vec<FileEntry>,
        rows: &[CorpusRow],
        inventory: &[ToolSchema],
        k: Option<usize>,
        epoch: Option<u64>,
    ) -> Result<Vec<SampledToolsRow>> {
        let sampler = SamplerConfig {
            k: k.unwrap_or(self.config.sampler.k),
            seed: self.config.seed,
            epoch: epoch.unwrap_or(self.config.sampler.epoch),
        };
        let sampled: Vec<SampledToolsRow> = rows
            .iter()
            .map(|row| {
                let tools = sample_tools(&row.sample, inventory, &sampler)
                    .map_err(|e| CliError::input(e.to_string()))?;
                Ok(SampledToolsRow {
                    id: row.sample.id.clone(),
                    tools: tools.into_iter().map(|t| t.name).collect(),
                })
            })
            .collect::<Result<_>>()?;

        let entry =
            self.write_artifact(SAMPLED_TOOLS, &to_jsonl(&sampled)?, Some(sampled.len() as u64))?;
        self.finish_stage(
            "sample",
            inputs,
            vec![entry],
            counts_map(&[
                ("samples", sampled.len() as u64),
                ("k", sampler.k as u64),
                ("epoch", sampler.epoch),
            ]),
        )?;
        Ok(sampled)
    }

    /// Serialization stage: render every row against its offered tools, fill
    /// in token counts, and tally rows that exceed the context budget.
    pub fn serialize_stage(
        &self,
        inputs: Vec<FileEntry>,
        rows: &[CorpusRow],
        inventory: &[ToolSchema],
        sampled: Option<&[SampledToolsRow]>,
    ) -> Result<Vec<SerializedExample>> {
        let by_name: BTreeMap<&str, &ToolSchema> =
            inventory.iter().map(|t| (t.name.as_str(), t)).collect();
        let offered_of: Option<BTreeMap<&str, &[String]>> = sampled.map(|list| {
            list.iter()
                .map(|row| (row.id.as_str(), row.tools.as_slice()))
                .collect()
        });

        // Resolve each row's tool slice up front so the parallel part is pure.
        let mut jobs: Vec<(&CorpusRow, Vec<ToolSchema>)> = Vec::with_capacity(rows.len());
        for row in rows {
            let offered: Vec<ToolSchema> = match &offered_of {
                Some(map) => {
                    let names = map.get(row.sample.id.as_str()).ok_or_else(|| {
                        CliError::input(format!(
                            "no sampled tools recorded for sample {}",
                            row.sample.id
                        ))
                    })?;
                    names
                        .iter()
                        .map(|name| {
                            by_name.get(name.as_str()).map(|t| (*t).clone()).ok_or_else(|| {
                                CliError::input(format!(
                                    "sampled tool {name} for sample {} is not in the inventory",
                                    row.sample.id
                                ))
                            })
                        })
                        .collect::<Result<_>>()?
                }
                None => inventory.to_vec(),
            };
            jobs.push((row, offered));
        }

        let counter = DefaultTokenCounter::new(&self.config.serializer);
        let config = &self.config.serializer;
        let examples: Vec<SerializedExample> = jobs
            .par_iter()
            .map(|(row, offered)| {
                let mut example = match &row.reasoning {
                    Some(reasoning) => {
                        serialize_think(&row.sample, offered, reasoning, config)
                    }
                    None => serialize(&row.sample, offered, config),
                }
                .map_err(|e| CliError::input(format!("serializing {}: {e}", row.sample.id)))?;
                let tokens = row
                    .token_count
                    .unwrap_or_else(|| counter.count(&example.text));
                example.token_count = Some(tokens);
                Ok(example)
            })
            .collect::<Result<_>>()?;

        let mut oversized = 0u64;
        for example in &examples {
            let fit = check_context_fit(example, self.config.token_budget)
                .map_err(|e| CliError::internal(format!("context check: {e}")))?;
            if !fit.fits {
                oversized += 1;
            }
        }

        let entry =
            self.write_artifact(SERIALIZED, &to_jsonl(&examples)?, Some(examples.len() as u64))?;
        self.finish_stage(
            "serialize",
            inputs,
            vec![entry],
            counts_map(&[
                ("examples", examples.len() as u64),
                ("oversized", oversized),
                ("token_budget", self.config.token_budget as u64),
            ]),
        )?;
        Ok(examples)
    }

    /// Split stage: stratified partition into train, validation and test.
    pub fn split_stage(
        &self,
        inputs: Vec<FileEntry>,
        rows: &[CorpusRow],
    ) -> Result<(Vec<CorpusRow>, Vec<CorpusRow>, Vec<CorpusRow>)> {
        let spec = SplitSpec {
            ratios: self.config.split.ratios,
            seed: self.config.seed,
            strata_keys: self.config.split.strata_keys.clone(),
        };
        let outcome = stratified_split(samples_of(rows), &spec)
            .map_err(|e| CliError::input(e.to_string()))?;

        let by_id: BTreeMap<&str, &CorpusRow> =
            rows.iter().map(|r| (r.sample.id.as_str(), r)).collect();
        let attach = |samples: Vec<Sample>| -> Vec<CorpusRow> {
            samples
                .into_iter()
                .map(|sample| {
                    let original = by_id[sample.id.as_str()];
                    CorpusRow {
                        sample,
                        reasoning: original.reasoning.clone(),
                        token_count: original.token_count,
                    }
                })
                .collect()
        };
        let train = attach(outcome.train);
        let val = attach(outcome.val);
        let test = attach(outcome.test);

        let train_entry = self.write_artifact(TRAIN, &to_jsonl(&train)?, Some(train.len() as u64))?;
        let val_entry = self.write_artifact(VAL, &to_jsonl(&val)?, Some(val.len() as u64))?;
        let test_entry = self.write_artifact(TEST, &to_jsonl(&test)?, Some(test.len() as u64))?;
        let strata_entry = self.write_artifact(
            SPLIT_STRATA,
            &to_pretty_json(&SplitStrata {
                strata: &outcome.strata,
                warnings: &outcome.warnings,
            })?,
            None,
        )?;

        self.finish_stage(
            "split",
            inputs,
            vec![train_entry, val_entry, test_entry, strata_entry],
            counts_map(&[
                ("train", train.len() as u64),
                ("val", val.len() as u64),
                ("test", test.len() as u64),
                ("strata", outcome.strata.len() as u64),
                ("small_strata", outcome.warnings.len() as u64),
            ]),
        )?;
        Ok((train, val, test))
    }

    /// Evaluation stage: join predictions to gold, parse, score, aggregate.
    pub fn evaluate_stage(
        &self,
        inputs: Vec<FileEntry>,
        gold: &[GoldRow],
        predictions: &[PredictionRow],
        mode: ParseMode,
        dump_parsed: bool,
    ) -> Result<MetricsReport> {
        let by_id: BTreeMap<&str, &str> = predictions
            .iter()
            .map(|p| (p.id.as_str(), p.output.as_str()))
            .collect();
        for row in gold {
            if !by_id.contains_key(row.sample.id.as_str()) {
                return Err(CliError::input(format!(
                    "no prediction for sample {}",
                    row.sample.id
                )));
            }
        }
        if gold.len() != predictions.len() {
            let gold_ids: std::collections::BTreeSet<&str> =
                gold.iter().map(|r| r.sample.id.as_str()).collect();
            let extra = predictions
                .iter()
                .find(|p| !gold_ids.contains(p.id.as_str()))
                .expect("length mismatch with full gold coverage means an extra id");
            return Err(CliError::input(format!(
                "prediction for unknown sample {}",
                extra.id
            )));
        }

        let config = &self.config.serializer;
        let scored: Vec<(ParsedOutput, RecordScore)> = gold
            .par_iter()
            .map(|row| {
                let output = by_id[row.sample.id.as_str()];
                let parsed = parse_output(output, config, mode);
                let score = score_record(&row.sample, &parsed, &row.offered_tools);
                (parsed, score)
            })
            .collect();

        let samples = gold.iter().map(|r| r.sample.clone()).collect::<Vec<_>>();
        let scores = scored.iter().map(|(_, s)| s.clone()).collect::<Vec<_>>();
        let mut report =
            aggregate(&scores, &samples).map_err(|e| CliError::input(e.to_string()))?;
        let mode_label = match mode {
            ParseMode::Strict => "strict",
            ParseMode::DeploymentAware => "deployment_aware",
        };
        report.notes.insert("parse_mode".to_string(), mode_label.to_string());

        let mut outputs = Vec::new();
        let report_json = render_report(&report, ReportFormat::Json)
            .map_err(|e| CliError::internal(format!("rendering report: {e}")))?;
        outputs.push(self.write_artifact(REPORT_JSON, &report_json, None)?);

        if dump_parsed {
            let dump: Vec<ParsedDumpRow> = gold
                .iter()
                .zip(&scored)
                .map(|(row, (parsed, _))| ParsedDumpRow { id: &row.sample.id, parsed })
                .collect();
            outputs.push(self.write_artifact(
                PARSED_DUMP,
                &to_jsonl(&dump)?,
                Some(dump.len() as u64),
            )?);
        }

        let parse_failures = scored
            .iter()
            .filter(|(p, _)| p.kind == ParsedKind::ParseFailure)
            .count();
        self.finish_stage(
            "evaluate",
            inputs,
            outputs,
            counts_map(&[
                ("records", gold.len() as u64),
                ("parse_failures", parse_failures as u64),
            ]),
        )?;
        Ok(report)
    }

    /// Report stage: render the JSON metrics report as markdown.
    pub fn report_stage(&self, inputs: Vec<FileEntry>, report: &MetricsReport) -> Result<String> {
        let markdown = render_report(report, ReportFormat::Markdown)
            .map_err(|e| CliError::input(format!("rendering report: {e}")))?;
        let entry = self.write_artifact(REPORT_MD, &markdown, None)?;
        self.finish_stage(
            "report",
            inputs,
            vec![entry],
            counts_map(&[("records", report.n as u64)]),
        )?;
        Ok(markdown)
    }

    /// Runs the whole chain. Stops after the split unless a predictions path
    /// is configured, in which case the held-out test partition becomes the
    /// gold set and evaluation plus report rendering follow.
    pub fn pipeline(&self, mode_override: Option<ParseMode>) -> Result<PipelineSummary> {
        let (corpus_path, load) = self.load_corpus()?;
        let (inventory_path, inventory) = self.load_inventory()?;
        let corpus_entry = file_entry(&corpus_path, None)?;
        let inventory_entry = file_entry(&inventory_path, None)?;

        let report =
            self.audit_stage(vec![corpus_entry.clone(), inventory_entry.clone()], &load, &inventory)?;
        let (rows, inventory) =
            self.repair_stage(vec![corpus_entry, inventory_entry], load, inventory)?;

        let repaired_corpus = file_entry(&self.path(REPAIRED_CORPUS), Some(rows.len() as u64))?;
        let repaired_inventory =
            file_entry(&self.path(REPAIRED_INVENTORY), Some(inventory.len() as u64))?;

        let sampled = self.sample_stage(
            vec![repaired_corpus.clone(), repaired_inventory.clone()],
            &rows,
            &inventory,
            None,
            None,
        )?;
        let sampled_entry = file_entry(&self.path(SAMPLED_TOOLS), Some(sampled.len() as u64))?;

        self.serialize_stage(
            vec![repaired_corpus.clone(), repaired_inventory, sampled_entry.clone()],
            &rows,
            &inventory,
            Some(&sampled),
        )?;

        let (train, val, test) = self.split_stage(vec![repaired_corpus], &rows)?;
        let mut summary = PipelineSummary {
            audit: report,
            train: train.len(),
            val: val.len(),
            test: test.len(),
            evaluated: None,
        };

        let Some(predictions_path) = self.config.paths.predictions.clone() else {
            return Ok(summary);
        };

        let offered: BTreeMap<&str, &Vec<String>> =
            sampled.iter().map(|r| (r.id.as_str(), &r.tools)).collect();
        let gold: Vec<GoldRow> = test
            .iter()
            .map(|row| GoldRow {
                sample: row.sample.clone(),
                offered_tools: (*offered
                    .get(row.sample.id.as_str())
                    .expect("every split row was sampled"))
                .clone(),
            })
            .collect();
        let gold_entry = self.write_artifact(GOLD, &to_jsonl(&gold)?, Some(gold.len() as u64))?;

        let predictions = read_predictions(&predictions_path)?;
        let predictions_entry = file_entry(&predictions_path, Some(predictions.len() as u64))?;
        let mode = mode_override.unwrap_or(self.config.evaluation.mode);
        let metrics = self.evaluate_stage(
            vec![gold_entry, predictions_entry],
            &gold,
            &predictions,
            mode,
            false,
        )?;

        let report_entry = file_entry(&self.path(REPORT_JSON), None)?;
        self.report_stage(vec![report_entry], &metrics)?;
        summary.evaluated = Some(metrics.n);
        Ok(summary)
    }
}

/// What the pipeline driver reports back for terminal output.
pub struct PipelineSummary {
    pub audit: AuditReport,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// Number of evaluated records when predictions were supplied.
    pub evaluated: Option<usize>,
}

/// Standalone gold loading used by the evaluate subcommand.
pub fn load_gold(path: &Path) -> Result<(FileEntry, Vec<GoldRow>)> {
    let gold = read_gold(path)?;
    let entry = file_entry(path, Some(gold.len() as u64))?;
    Ok((entry, gold))
}
