//! Structural audit and schema repair of a corpus against its inventory.
//!
//! The audit is read-only: it counts empty queries, enum violations under
//! both compliance rules, duplicate tool declarations, dead tools, and
//! prompts that would blow the context budget if the full inventory were
//! offered. Repair is two explicit, operator-reviewed configs applied in
//! order: a [`NormalizationMap`] folding surface variants of enum values
//! onto canonical ones, and a [`PrunePlan`] removing or merging tools.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::schema::{validate_call, EnumRule, Sample, ToolSchema, ValueType, ViolationKind};
use crate::serializer::{
    count_tokens, render_completion, render_declarations, render_time_line, DefaultTokenCounter,
    SerializerConfig, TokenCounter, TURN_DEVELOPER, TURN_END, TURN_MODEL, TURN_USER,
};

/// What the audit found. All counts are over the rows that parsed; rows the
/// loader could not read are tallied by the caller into `unreadable_rows`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub total_samples: usize,
    pub empty_queries: usize,
    /// Samples with at least one enum violation when null never satisfies
    /// an enum.
    pub enum_violations_legacy: usize,
    /// Same count under the rule that reads null as "omitted".
    pub enum_violations_none_is_valid: usize,
    /// How many samples the rule change alone repairs.
    pub samples_restored_by_fix: usize,
    /// Tools that look like redeclarations of each other, grouped.
    pub duplicate_tool_groups: Vec<Vec<String>>,
    /// Tools no structurally valid sample ever targets.
    pub dead_tools: Vec<String>,
    /// Samples whose full-inventory prompt exceeds the token budget.
    pub oversized_prompts: usize,
    pub token_budget: usize,
    #[serde(default)]
    pub unreadable_rows: usize,
}

impl AuditReport {
    /// Plain-text rendering for terminals and log files.
    pub fn render_text(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "corpus audit");
        let _ = writeln!(out, "  samples:                  {}", self.total_samples);
        let _ = writeln!(out, "  unreadable rows:          {}", self.unreadable_rows);
        let _ = writeln!(out, "  empty queries:            {}", self.empty_queries);
        let _ = writeln!(
            out,
            "  enum violations (legacy): {}",
            self.enum_violations_legacy
        );
        let _ = writeln!(
            out,
            "  enum violations (fixed):  {}",
            self.enum_violations_none_is_valid
        );
        let _ = writeln!(
            out,
            "  restored by null fix:     {}",
            self.samples_restored_by_fix
        );
        let _ = writeln!(
            out,
            "  oversized prompts:        {} (budget {})",
            self.oversized_prompts, self.token_budget
        );
        if self.duplicate_tool_groups.is_empty() {
            let _ = writeln!(out, "  duplicate tools:          none");
        } else {
            let _ = writeln!(out, "  duplicate tools:");
            for group in &self.duplicate_tool_groups {
                let _ = writeln!(out, "    {}", group.join(" ~ "));
            }
        }
        if self.dead_tools.is_empty() {
            let _ = writeln!(out, "  dead tools:               none");
        } else {
            let _ = writeln!(out, "  dead tools:               {}", self.dead_tools.join(", "));
        }
        out
    }
}

/// Audits with the default whitespace-plus-token counter.
pub fn audit(
    samples: &[Sample],
    inventory: &[ToolSchema],
    budget: usize,
    config: &SerializerConfig,
) -> AuditReport {
    let counter = DefaultTokenCounter::new(config);
    audit_with_counter(samples, inventory, budget, config, &counter)
}

/// Full audit pass. The oversized check serializes each sample against the
/// entire inventory; the declaration block is counted once and reused, which
/// is sound because every segment boundary in the template is a newline and
/// no default token spans whitespace. Token sets that do contain whitespace
/// fall back to counting the assembled prompt per sample.
pub fn audit_with_counter(
    samples: &[Sample],
    inventory: &[ToolSchema],
    budget: usize,
    config: &SerializerConfig,
    counter: &dyn TokenCounter,
) -> AuditReport {
    let mut empty_queries = 0;
    let mut legacy_violations = 0;
    let mut fixed_violations = 0;
    let mut valid_targets: BTreeMap<&str, usize> =
        inventory.iter().map(|t| (t.name.as_str(), 0)).collect();

    for sample in samples {
        if sample.query.trim().is_empty() {
            empty_queries += 1;
        }
        let Some(target) = &sample.target else { continue };
        let legacy = validate_call(target, inventory, EnumRule::Legacy);
        let fixed = validate_call(target, inventory, EnumRule::NoneIsValid);
        if legacy.has(ViolationKind::EnumViolation) {
            legacy_violations += 1;
        }
        if fixed.has(ViolationKind::EnumViolation) {
            fixed_violations += 1;
        }
        if legacy.valid {
            if let Some(count) = valid_targets.get_mut(target.tool_name.as_str()) {
                *count += 1;
            }
        }
    }

    let dead_tools: Vec<String> = {
        let mut dead: Vec<String> = valid_targets
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(name, _)| String::from(*name))
            .collect();
        dead.sort();
        dead
    };

    let oversized_prompts = count_oversized(samples, inventory, budget, config, counter);

    AuditReport {
        total_samples: samples.len(),
        empty_queries,
        enum_violations_legacy: legacy_violations,
        enum_violations_none_is_valid: fixed_violations,
        samples_restored_by_fix: legacy_violations.saturating_sub(fixed_violations),
        duplicate_tool_groups: detect_duplicates(inventory),
        dead_tools,
        oversized_prompts,
        token_budget: budget,
        unreadable_rows: 0,
    }
}

fn count_oversized(
    samples: &[Sample],
    inventory: &[ToolSchema],
    budget: usize,
    config: &SerializerConfig,
    counter: &dyn TokenCounter,
) -> usize {
    if inventory.is_empty() {
        return 0;
    }
    let tokens_can_span_whitespace = config
        .all_tokens()
        .iter()
        .any(|t| t.chars().any(char::is_whitespace));

    let mut head = String::from(TURN_DEVELOPER);
    head.push_str(&config.system_instruction);
    let mut decls = String::from("\n");
    decls.push_str(&render_declarations(inventory, config));
    decls.push_str(TURN_END);
    let head_count = count_tokens(&head, counter);
    let decls_count = count_tokens(&decls, counter);

    let mut oversized = 0;
    for sample in samples {
        if sample.query.trim().is_empty() {
            continue;
        }
        let Ok(completion) = render_completion(sample, inventory, config) else {
            continue;
        };
        let mut turn = String::from(TURN_USER);
        turn.push_str(&sample.query);
        turn.push_str(TURN_END);
        turn.push_str(TURN_MODEL);
        turn.push_str(&completion);

        let total = if tokens_can_span_whitespace {
            let mut full = head.clone();
            if let Some(line) = render_time_line(sample, config) {
                full.push_str(&line);
            }
            full.push_str(&decls);
            full.push_str(&turn);
            count_tokens(&full, counter)
        } else {
            let time_count = render_time_line(sample, config)
                .map(|line| count_tokens(&line, counter))
                .unwrap_or(0);
            head_count + time_count + decls_count + count_tokens(&turn, counter)
        };
        if total > budget {
            oversized += 1;
        }
    }
    oversized
}

/// Groups tools that are redeclarations of each other: identical parameter
/// signatures (names, types, required flags) or names that collapse after
/// lowercasing and dropping separators. Matching is transitive, each group
/// is sorted, and groups are ordered by their first member.
pub fn detect_duplicates(tools: &[ToolSchema]) -> Vec<Vec<String>> {
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }

    fn signature(tool: &ToolSchema) -> Vec<(&str, ValueType, bool)> {
        let mut sig: Vec<(&str, ValueType, bool)> = tool
            .parameters
            .iter()
            .map(|p| (p.name.as_str(), p.value_type, p.required))
            .collect();
        sig.sort();
        sig
    }

    fn normalized_name(tool: &ToolSchema) -> String {
        tool.name
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect()
    }

    let signatures: Vec<_> = tools.iter().map(signature).collect();
    let names: Vec<_> = tools.iter().map(normalized_name).collect();
    let mut parent: Vec<usize> = (0..tools.len()).collect();

    for i in 0..tools.len() {
        for j in (i + 1)..tools.len() {
            if signatures[i] == signatures[j] || names[i] == names[j] {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for i in 0..tools.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(tools[i].name.clone());
    }
    let mut result: Vec<Vec<String>> = groups
        .into_values()
        .filter(|g| g.len() >= 2)
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    result.sort();
    result
}

/// Operator-authored mapping of surface enum variants onto canonical values:
/// tool name, then parameter name, then variant to canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizationMap(pub BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>>);

impl NormalizationMap {
    /// Every referenced tool and parameter must exist, the parameter must be
    /// an enum, the canonical side must be a permitted value, and a variant
    /// that is itself canonical may only map to itself.
    pub fn validate(&self, inventory: &[ToolSchema]) -> Result<(), RepairError> {
        for (tool_name, params) in &self.0 {
            let tool = inventory
                .iter()
                .find(|t| &t.name == tool_name)
                .ok_or_else(|| RepairError::NormalizationUnknownTool {
                    tool: tool_name.clone(),
                })?;
            for (param_name, table) in params {
                let param = tool.parameter(param_name).ok_or_else(|| {
                    RepairError::NormalizationUnknownParameter {
                        tool: tool_name.clone(),
                        parameter: param_name.clone(),
                    }
                })?;
                let Some(permitted) = &param.enum_values else {
                    return Err(RepairError::NormalizationNotEnum {
                        tool: tool_name.clone(),
                        parameter: param_name.clone(),
                    });
                };
                for (variant, canonical) in table {
                    if !permitted.contains(canonical) {
                        return Err(RepairError::NormalizationUnknownCanonical {
                            tool: tool_name.clone(),
                            parameter: param_name.clone(),
                            value: canonical.clone(),
                        });
                    }
                    if permitted.contains(variant) && variant != canonical {
                        return Err(RepairError::NormalizationRemapsCanonical {
                            tool: tool_name.clone(),
                            parameter: param_name.clone(),
                            value: variant.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rewrites string argument values through the normalization map. Matching
/// is exact on the stored surface form; anything unmatched passes through
/// untouched, so the operation is idempotent on validated maps.
pub fn normalize_sample(mut sample: Sample, map: &NormalizationMap) -> Sample {
    let Some(target) = sample.target.as_mut() else {
        return sample;
    };
    let Some(params) = map.0.get(&target.tool_name) else {
        return sample;
    };
    for (param_name, table) in params {
        let Some(value) = target.arguments.get_mut(param_name) else {
            continue;
        };
        if let serde_json::Value::String(s) = value {
            if let Some(canonical) = table.get(s.as_str()) {
                *value = serde_json::Value::String(canonical.clone());
            }
        }
    }
    sample
}

/// How one alias folds into the tool that stays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeSpec {
    pub target: String,
    /// Argument keys to rename while rewriting calls, alias side to target
    /// side.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub param_renames: BTreeMap<String, String>,
}

/// Operator-authored inventory reduction: tools to drop outright and alias
/// tools to fold into a surviving target.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrunePlan {
    #[serde(default)]
    pub remove: Vec<String>,
    #[serde(default)]
    pub merge: BTreeMap<String, MergeSpec>,
}

impl PrunePlan {
    pub fn validate(&self, inventory: &[ToolSchema]) -> Result<(), RepairError> {
        let names: BTreeSet<&str> = inventory.iter().map(|t| t.name.as_str()).collect();
        for name in &self.remove {
            if !names.contains(name.as_str()) {
                return Err(RepairError::PruneUnknownTool { name: name.clone() });
            }
            if self.merge.contains_key(name) {
                return Err(RepairError::PruneRemoveAndMerge { name: name.clone() });
            }
        }
        for (alias, spec) in &self.merge {
            if !names.contains(alias.as_str()) {
                return Err(RepairError::PruneUnknownTool { name: alias.clone() });
            }
            let target_survives = names.contains(spec.target.as_str())
                && !self.remove.contains(&spec.target)
                && !self.merge.contains_key(&spec.target);
            if !target_survives {
                return Err(RepairError::MergeTargetMissing {
                    alias: alias.clone(),
                    target: spec.target.clone(),
                });
            }
            let target_schema = inventory
                .iter()
                .find(|t| t.name == spec.target)
                .expect("target existence checked above");
            let mut seen = BTreeSet::new();
            for renamed_to in spec.param_renames.values() {
                if !seen.insert(renamed_to.as_str()) {
                    return Err(RepairError::RenameTargetCollision {
                        alias: alias.clone(),
                        parameter: renamed_to.clone(),
                    });
                }
                if target_schema.parameter(renamed_to).is_none() {
                    return Err(RepairError::RenameUnknownParameter {
                        alias: alias.clone(),
                        parameter: renamed_to.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneOutcome {
    pub samples: Vec<Sample>,
    pub inventory: Vec<ToolSchema>,
    /// Positives whose target no longer exists after pruning, plus any call
    /// a rename could not rewrite cleanly.
    pub dropped_samples: usize,
    /// Calls rewritten from an alias to its merge target.
    pub rewritten_samples: usize,
}

/// Applies a prune plan to the corpus and inventory together.
///
/// Removed tools and alias tools leave the inventory; calls to an alias are
/// rewritten to the target (with argument renames), and positives whose
/// target did not survive are dropped. A call carrying both the old and new
/// spelling of a renamed argument cannot be rewritten without losing one of
/// the two values, so it is dropped and counted rather than silently merged.
pub fn apply_prune(
    samples: Vec<Sample>,
    inventory: Vec<ToolSchema>,
    plan: &PrunePlan,
) -> Result<PruneOutcome, RepairError> {
    plan.validate(&inventory)?;

    let surviving: Vec<ToolSchema> = inventory
        .into_iter()
        .filter(|t| !plan.remove.contains(&t.name) && !plan.merge.contains_key(&t.name))
        .collect();
    let surviving_names: BTreeSet<&str> = surviving.iter().map(|t| t.name.as_str()).collect();

    let mut kept = Vec::with_capacity(samples.len());
    let mut dropped = 0;
    let mut rewritten = 0;

    'samples: for mut sample in samples {
        let Some(target) = sample.target.as_mut() else {
            kept.push(sample);
            continue;
        };
        if let Some(spec) = plan.merge.get(&target.tool_name) {
            let mut renamed = BTreeMap::new();
            for (key, value) in core::mem::take(&mut target.arguments) {
                let new_key = spec.param_renames.get(&key).cloned().unwrap_or(key);
                if renamed.insert(new_key, value).is_some() {
                    dropped += 1;
                    continue 'samples;
                }
            }
            target.arguments = renamed;
            target.tool_name = spec.target.clone();
            rewritten += 1;
        }
        if surviving_names.contains(sample.target.as_ref().expect("positive").tool_name.as_str()) {
            kept.push(sample);
        } else {
            dropped += 1;
        }
    }

    Ok(PruneOutcome {
        samples: kept,
        inventory: surviving,
        dropped_samples: dropped,
        rewritten_samples: rewritten,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepairError {
    #[error("normalization map references unknown tool {tool:?}")]
    NormalizationUnknownTool { tool: String },
    #[error("normalization map references unknown parameter {parameter:?} on {tool:?}")]
    NormalizationUnknownParameter { tool: String, parameter: String },
    #[error("normalization map targets {tool:?} parameter {parameter:?}, which has no enum")]
    NormalizationNotEnum { tool: String, parameter: String },
    #[error("normalization for {tool:?} {parameter:?} maps onto {value:?}, which is not a permitted value")]
    NormalizationUnknownCanonical {
        tool: String,
        parameter: String,
        value: String,
    },
    #[error("normalization for {tool:?} {parameter:?} remaps canonical value {value:?}")]
    NormalizationRemapsCanonical {
        tool: String,
        parameter: String,
        value: String,
    },
    #[error("prune plan references unknown tool {name:?}")]
    PruneUnknownTool { name: String },
    #[error("prune plan both removes and merges {name:?}")]
    PruneRemoveAndMerge { name: String },
    #[error("merge of {alias:?} targets {target:?}, which does not survive the plan")]
    MergeTargetMissing { alias: String, target: String },
    #[error("merge of {alias:?} renames two parameters onto {parameter:?}")]
    RenameTargetCollision { alias: String, parameter: String },
    #[error("merge of {alias:?} renames onto {parameter:?}, which the target does not declare")]
    RenameUnknownParameter { alias: String, parameter: String },
}
