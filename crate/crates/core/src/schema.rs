//! Tool schemas, samples, and structural validation of tool calls.
//!
//! The types here mirror the on-disk corpus formats: a tool inventory is a
//! JSON array of [`ToolSchema`], and corpus rows deserialize into [`Sample`].
//! [`validate_call`] checks a call against an inventory under one of two
//! enum-compliance rules, which differ only in how `null` is treated for
//! optional enum-typed parameters.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Declared type of a tool parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    String,
    Number,
    Integer,
    Boolean,
    Array,
    Object,
}

impl ValueType {
    pub fn name(&self) -> &'static str {
        match self {
            ValueType::String => "string",
            ValueType::Number => "number",
            ValueType::Integer => "integer",
            ValueType::Boolean => "boolean",
            ValueType::Array => "array",
            ValueType::Object => "object",
        }
    }

    /// Whether a concrete JSON value satisfies this declared type.
    ///
    /// Integral numbers satisfy `number`, but a fractional number does not
    /// satisfy `integer`. No other coercions are applied.
    pub fn matches(&self, value: &serde_json::Value) -> bool {
        match self {
            ValueType::String => value.is_string(),
            ValueType::Number => value.is_number(),
            ValueType::Integer => value.is_i64() || value.is_u64(),
            ValueType::Boolean => value.is_boolean(),
            ValueType::Array => value.is_array(),
            ValueType::Object => value.is_object(),
        }
    }
}

/// One declared parameter of a tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub value_type: ValueType,
    pub description: String,
    /// Closed set of permitted string values, if this parameter is an enum.
    #[serde(rename = "enum", skip_serializing_if = "Option::is_none", default)]
    pub enum_values: Option<Vec<String>>,
    pub required: bool,
}

/// A callable tool as declared in the inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ParameterSpec>,
}

impl ToolSchema {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Structural checks on a single schema. Tool names are restricted to an
    /// identifier alphabet so they can be embedded verbatim between control
    /// tokens in serialized prompts.
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.name.is_empty() {
            return Err(SchemaError::EmptyToolName);
        }
        if !is_identifier(&self.name) {
            return Err(SchemaError::InvalidToolName {
                name: self.name.clone(),
            });
        }
        let mut seen: Vec<&str> = Vec::new();
        for param in &self.parameters {
            if param.name.is_empty() {
                return Err(SchemaError::EmptyParameterName {
                    tool: self.name.clone(),
                });
            }
            if seen.contains(&param.name.as_str()) {
                return Err(SchemaError::DuplicateParameter {
                    tool: self.name.clone(),
                    parameter: param.name.clone(),
                });
            }
            seen.push(&param.name);
            if let Some(values) = &param.enum_values {
                if values.is_empty() {
                    return Err(SchemaError::EmptyEnum {
                        tool: self.name.clone(),
                        parameter: param.name.clone(),
                    });
                }
                if param.value_type != ValueType::String {
                    return Err(SchemaError::EnumOnNonString {
                        tool: self.name.clone(),
                        parameter: param.name.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Checks every schema in an inventory and rejects duplicate tool names.
pub fn validate_inventory(tools: &[ToolSchema]) -> Result<(), SchemaError> {
    let mut names: Vec<&str> = Vec::new();
    for tool in tools {
        tool.validate()?;
        if names.contains(&tool.name.as_str()) {
            return Err(SchemaError::DuplicateTool {
                name: tool.name.clone(),
            });
        }
        names.push(&tool.name);
    }
    Ok(())
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("tool name is empty")]
    EmptyToolName,
    #[error("tool name {name:?} contains characters outside [A-Za-z0-9_.-]")]
    InvalidToolName { name: String },
    #[error("tool {tool:?} declares a parameter with an empty name")]
    EmptyParameterName { tool: String },
    #[error("tool {tool:?} declares parameter {parameter:?} more than once")]
    DuplicateParameter { tool: String, parameter: String },
    #[error("tool {tool:?} parameter {parameter:?} has an empty enum list")]
    EmptyEnum { tool: String, parameter: String },
    #[error("tool {tool:?} parameter {parameter:?} declares enum values on a non-string type")]
    EnumOnNonString { tool: String, parameter: String },
    #[error("inventory declares tool {name:?} more than once")]
    DuplicateTool { name: String },
}

/// A concrete invocation: a tool name plus argument bindings.
///
/// Arguments are kept in a `BTreeMap` so that equality, hashing and
/// serialization never depend on insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool_name: String,
    pub arguments: BTreeMap<String, serde_json::Value>,
}

/// Dialect of the user query. Order follows the corpus convention of listing
/// Modern Standard Arabic first, then the regional groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dialect {
    #[serde(rename = "MSA")]
    Msa,
    Gulf,
    Egyptian,
    Levantine,
    Maghrebi,
}

impl Dialect {
    pub const ALL: [Dialect; 5] = [
        Dialect::Msa,
        Dialect::Gulf,
        Dialect::Egyptian,
        Dialect::Levantine,
        Dialect::Maghrebi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Dialect::Msa => "MSA",
            Dialect::Gulf => "Gulf",
            Dialect::Egyptian => "Egyptian",
            Dialect::Levantine => "Levantine",
            Dialect::Maghrebi => "Maghrebi",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One corpus row: a user query plus, for positives, the gold call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub query: String,
    pub dialect: Dialect,
    pub domain: String,
    /// Polarity: `true` means the query warrants exactly one tool call,
    /// `false` means the assistant should answer without calling anything.
    pub requires_function: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<ToolCall>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<String>,
}

impl Sample {
    /// Polarity and target presence must agree: positives carry a target,
    /// negatives must not.
    pub fn polarity_consistent(&self) -> bool {
        self.requires_function == self.target.is_some()
    }
}

/// How `null` is judged for optional enum-typed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumRule {
    /// `null` is never a member of the permitted set, so an explicit `null`
    /// for an optional enum parameter is a violation.
    Legacy,
    /// `null` is read as "parameter omitted" and is valid for any optional
    /// parameter.
    NoneIsValid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnknownTool,
    MissingRequired,
    TypeMismatch,
    EnumViolation,
    UnknownParameter,
}

/// One structural problem found in a call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending parameter, absent for tool-level problems.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parameter: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            valid: violations.is_empty(),
            violations,
        }
    }
}

/// NFC-normalizes a string and trims surrounding whitespace. Enum membership
/// and metric-level value comparison both go through this, so two surface
/// forms that differ only in Unicode composition or padding compare equal.
/// Comparison stays case-sensitive.
pub fn normalize_surface(s: &str) -> String {
    let composed: String = s.nfc().collect();
    composed.trim().to_owned()
}

/// Validates a call against an inventory under the given enum rule.
///
/// An unknown tool name yields a single `unknown_tool` violation; nothing
/// else can be checked without a schema. For a known tool, parameters are
/// checked in declaration order, then unknown argument keys are reported in
/// sorted order. `null` on a required parameter is reported as
/// `missing_required` under both rules, since a bound `null` carries no more
/// information than an absent key. `null` on an optional non-enum parameter
/// is valid under both rules; only the optional-enum case distinguishes
/// [`EnumRule::Legacy`] from [`EnumRule::NoneIsValid`].
pub fn validate_call(call: &ToolCall, tools: &[ToolSchema], rule: EnumRule) -> ValidationReport {
    let Some(schema) = tools.iter().find(|t| t.name == call.tool_name) else {
        return ValidationReport::from_violations(alloc::vec![Violation {
            kind: ViolationKind::UnknownTool,
            parameter: None,
            detail: format!("tool {:?} is not in the inventory", call.tool_name),
        }]);
    };

    let mut violations = Vec::new();

    for param in &schema.parameters {
        let value = call.arguments.get(&param.name);
        let is_null = matches!(value, Some(serde_json::Value::Null));

        if value.is_none() || is_null {
            if param.required {
                violations.push(Violation {
                    kind: ViolationKind::MissingRequired,
                    parameter: Some(param.name.clone()),
                    detail: if is_null {
                        format!("required parameter {:?} is bound to null", param.name)
                    } else {
                        format!("required parameter {:?} is missing", param.name)
                    },
                });
            } else if is_null && param.enum_values.is_some() && rule == EnumRule::Legacy {
                violations.push(Violation {
                    kind: ViolationKind::EnumViolation,
                    parameter: Some(param.name.clone()),
                    detail: format!(
                        "null is not one of the permitted values for {:?}",
                        param.name
                    ),
                });
            }
            continue;
        }

        let value = value.expect("checked above");
        if !param.value_type.matches(value) {
            violations.push(Violation {
                kind: ViolationKind::TypeMismatch,
                parameter: Some(param.name.clone()),
                detail: format!(
                    "parameter {:?} expects {}, got {}",
                    param.name,
                    param.value_type.name(),
                    json_type_name(value)
                ),
            });
            continue;
        }

        if let (Some(permitted), serde_json::Value::String(s)) = (&param.enum_values, value) {
            let normalized = normalize_surface(s);
            let member = permitted
                .iter()
                .any(|p| normalize_surface(p) == normalized);
            if !member {
                violations.push(Violation {
                    kind: ViolationKind::EnumViolation,
                    parameter: Some(param.name.clone()),
                    detail: format!(
                        "value {:?} is not one of the permitted values for {:?}",
                        s, param.name
                    ),
                });
            }
        }
    }

    let mut extras: Vec<&String> = call
        .arguments
        .keys()
        .filter(|k| schema.parameter(k).is_none())
        .collect();
    extras.sort();
    for key in extras {
        violations.push(Violation {
            kind: ViolationKind::UnknownParameter,
            parameter: Some(key.clone()),
            detail: format!("parameter {:?} is not declared by {:?}", key, schema.name),
        });
    }

    ValidationReport::from_violations(violations)
}

fn json_type_name(value: &serde_json::Value) -> &'static str {
    match value {
        serde_json::Value::Null => "null",
        serde_json::Value::Bool(_) => "boolean",
        serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => "integer",
        serde_json::Value::Number(_) => "number",
        serde_json::Value::String(_) => "string",
        serde_json::Value::Array(_) => "array",
        serde_json::Value::Object(_) => "object",
    }
}
