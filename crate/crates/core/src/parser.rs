//! Parsing of model completions back into structured calls.
//!
//! The grammar accepts exactly three shapes: a single call wrapped in the
//! call tokens (optionally preceded by a reasoning block), free text with no
//! call token at all, or garbage. Parsing is total: every string maps to
//! `ParsedCall`, `NoCall`, or `ParseFailure` with a byte position and reason,
//! and nothing panics on adversarial input.
//!
//! Strict mode is the training-time contract: the completion must start with
//! the call token or contain none. Deployment-aware mode additionally
//! consumes one leading `<think>` block before applying the same rules,
//! accepting the reasoning-trained output format. Anything strict mode
//! accepts, deployment-aware mode accepts with the same result.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use serde::de::{DeserializeSeed, Error as DeError, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::schema::ToolCall;
use crate::serializer::SerializerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    /// Completion must be a bare call or contain no call token.
    Strict,
    /// Like strict, after consuming one optional leading reasoning block.
    DeploymentAware,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsedKind {
    NoCall,
    ParsedCall,
    ParseFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    /// A reasoning block opened the completion in strict mode.
    ReasoningNotAllowed,
    /// A reasoning block opened but its close token never arrived.
    UnterminatedReasoning,
    /// Content other than whitespace precedes the call token.
    TextBeforeCall,
    EmptyToolName,
    /// Tool name contains whitespace or a control token.
    InvalidToolName,
    /// No argument object follows the tool name.
    MissingArguments,
    /// An escape region opened but never closed.
    UnterminatedEscape,
    /// The argument braces never balanced before the text ended.
    UnterminatedArguments,
    MissingCallEnd,
    /// Non-whitespace content follows the call end token.
    TrailingContent,
    DuplicateKey { key: String },
    MalformedArguments { message: String },
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailReason::ReasoningNotAllowed => write!(f, "reasoning block not allowed in strict mode"),
            FailReason::UnterminatedReasoning => write!(f, "reasoning block never closes"),
            FailReason::TextBeforeCall => write!(f, "content precedes the call token"),
            FailReason::EmptyToolName => write!(f, "tool name is empty"),
            FailReason::InvalidToolName => write!(f, "tool name contains whitespace or a control token"),
            FailReason::MissingArguments => write!(f, "no argument object follows the tool name"),
            FailReason::UnterminatedEscape => write!(f, "escape region never closes"),
            FailReason::UnterminatedArguments => write!(f, "argument braces never balance"),
            FailReason::MissingCallEnd => write!(f, "call end token missing after arguments"),
            FailReason::TrailingContent => write!(f, "content follows the call end token"),
            FailReason::DuplicateKey { key } => write!(f, "duplicate argument key {key:?}"),
            FailReason::MalformedArguments { message } => write!(f, "malformed arguments: {message}"),
        }
    }
}

/// Byte offset into the completion plus what went wrong there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureDetail {
    pub position: usize,
    pub reason: FailReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedOutput {
    pub kind: ParsedKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub call: Option<ToolCall>,
    /// Text between the think tokens, verbatim, when a block was consumed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reasoning: Option<String>,
    pub had_think_block: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<FailureDetail>,
}

impl ParsedOutput {
    fn no_call(reasoning: Option<String>, had_think_block: bool) -> Self {
        ParsedOutput {
            kind: ParsedKind::NoCall,
            call: None,
            reasoning,
            had_think_block,
            failure: None,
        }
    }

    fn call(call: ToolCall, reasoning: Option<String>, had_think_block: bool) -> Self {
        ParsedOutput {
            kind: ParsedKind::ParsedCall,
            call: Some(call),
            reasoning,
            had_think_block,
            failure: None,
        }
    }

    fn failure(position: usize, reason: FailReason) -> Self {
        ParsedOutput {
            kind: ParsedKind::ParseFailure,
            call: None,
            reasoning: None,
            had_think_block: false,
            failure: Some(FailureDetail { position, reason }),
        }
    }
}

fn skip_ws(text: &str, from: usize) -> usize {
    text[from..]
        .char_indices()
        .find(|(_, c)| !c.is_whitespace())
        .map(|(off, _)| from + off)
        .unwrap_or(text.len())
}

/// Parses one completion. The token set must already be validated; colliding
/// tokens make the grammar ambiguous.
pub fn parse_output(text: &str, config: &SerializerConfig, mode: ParseMode) -> ParsedOutput {
    debug_assert!(config.validate().is_ok(), "token set must be validated upstream");

    let mut pos = skip_ws(text, 0);
    let mut reasoning: Option<String> = None;
    let mut had_think_block = false;

    if text[pos..].starts_with(config.think_tokens.open.as_str()) {
        match mode {
            ParseMode::Strict => {
                return ParsedOutput::failure(pos, FailReason::ReasoningNotAllowed);
            }
            ParseMode::DeploymentAware => {
                let body_start = pos + config.think_tokens.open.len();
                match text[body_start..].find(config.think_tokens.close.as_str()) {
                    None => {
                        return ParsedOutput::failure(pos, FailReason::UnterminatedReasoning);
                    }
                    Some(rel) => {
                        reasoning = Some(text[body_start..body_start + rel].to_string());
                        had_think_block = true;
                        pos = skip_ws(text, body_start + rel + config.think_tokens.close.len());
                    }
                }
            }
        }
    }

    let call_start = config.control_tokens.call_start.as_str();
    if text[pos..].starts_with(call_start) {
        match parse_call(text, pos, config) {
            Ok(call) => ParsedOutput::call(call, reasoning, had_think_block),
            Err((position, reason)) => ParsedOutput::failure(position, reason),
        }
    } else if let Some(rel) = text[pos..].find(call_start) {
        ParsedOutput::failure(pos + rel, FailReason::TextBeforeCall)
    } else {
        ParsedOutput::no_call(reasoning, had_think_block)
    }
}

fn parse_call(
    text: &str,
    call_pos: usize,
    config: &SerializerConfig,
) -> Result<ToolCall, (usize, FailReason)> {
    let tokens = &config.control_tokens;
    let name_start = call_pos + tokens.call_start.len();
    let rest = &text[name_start..];

    let brace_rel = rest.find('{');
    let end_rel = rest.find(tokens.call_end.as_str());
    let brace_rel = match (brace_rel, end_rel) {
        (Some(b), Some(e)) if e < b => {
            return Err((name_start + e, FailReason::MissingArguments));
        }
        (Some(b), _) => b,
        (None, _) => return Err((name_start, FailReason::MissingArguments)),
    };

    let name = rest[..brace_rel].trim();
    if name.is_empty() {
        return Err((name_start, FailReason::EmptyToolName));
    }
    if name.chars().any(char::is_whitespace)
        || config.all_tokens().iter().any(|t| name.contains(t.as_str()))
    {
        return Err((name_start, FailReason::InvalidToolName));
    }

    let args_start = name_start + brace_rel;
    let (decoded, after_args) = scan_arguments(text, args_start, config)?;

    let end_pos = skip_ws(text, after_args);
    if !text[end_pos..].starts_with(tokens.call_end.as_str()) {
        return Err((end_pos, FailReason::MissingCallEnd));
    }
    let tail = skip_ws(text, end_pos + tokens.call_end.len());
    if tail != text.len() {
        return Err((tail, FailReason::TrailingContent));
    }

    let arguments = parse_checked_object(&decoded).map_err(|e| (args_start, e))?;
    Ok(ToolCall {
        tool_name: name.to_string(),
        arguments,
    })
}

/// Walks the argument span from its opening brace to the matching close,
/// translating escape regions into JSON string literals as it goes.
///
/// Braces and quotes inside an escape region are payload, not structure, and
/// the escape token itself is not recognized inside a JSON string literal.
/// Returns the decoded JSON text and the byte index just past the closing
/// brace in the original text.
fn scan_arguments(
    text: &str,
    open: usize,
    config: &SerializerConfig,
) -> Result<(String, usize), (usize, FailReason)> {
    let escape = config.control_tokens.escape.as_str();
    let mut decoded = String::new();
    let mut raw = String::new();
    let mut depth: usize = 0;
    let mut in_escape = false;
    let mut escape_open = 0;
    let mut in_string = false;
    let mut after_backslash = false;
    let mut i = open;

    while i < text.len() {
        if in_escape {
            if text[i..].starts_with(escape) {
                decoded.push_str(
                    &serde_json::to_string(&raw).expect("strings serialize infallibly"),
                );
                raw.clear();
                in_escape = false;
                i += escape.len();
            } else {
                let ch = text[i..].chars().next().expect("in bounds");
                raw.push(ch);
                i += ch.len_utf8();
            }
            continue;
        }

        if in_string {
            let ch = text[i..].chars().next().expect("in bounds");
            decoded.push(ch);
            i += ch.len_utf8();
            if after_backslash {
                after_backslash = false;
            } else if ch == '\\' {
                after_backslash = true;
            } else if ch == '"' {
                in_string = false;
            }
            continue;
        }

        if text[i..].starts_with(escape) {
            in_escape = true;
            escape_open = i;
            i += escape.len();
            continue;
        }

        let ch = text[i..].chars().next().expect("in bounds");
        match ch {
            '{' => {
                depth += 1;
                decoded.push(ch);
            }
            '}' => {
                depth = depth.saturating_sub(1);
                decoded.push(ch);
                if depth == 0 {
                    return Ok((decoded, i + ch.len_utf8()));
                }
            }
            '"' => {
                in_string = true;
                decoded.push(ch);
            }
            _ => decoded.push(ch),
        }
        i += ch.len_utf8();
    }

    if in_escape {
        Err((escape_open, FailReason::UnterminatedEscape))
    } else {
        Err((open, FailReason::UnterminatedArguments))
    }
}

const DUP_MARKER: &str = "duplicate argument key ";

/// Strict JSON object parse that rejects duplicate keys at every depth.
fn parse_checked_object(json: &str) -> Result<BTreeMap<String, serde_json::Value>, FailReason> {
    let mut de = serde_json::Deserializer::from_str(json);
    let value = match CheckedValue.deserialize(&mut de).and_then(|v| {
        de.end()?;
        Ok(v)
    }) {
        Ok(v) => v,
        Err(e) => {
            let message = e.to_string();
            return Err(match extract_duplicate_key(&message) {
                Some(key) => FailReason::DuplicateKey { key },
                None => FailReason::MalformedArguments { message },
            });
        }
    };
    match value {
        serde_json::Value::Object(map) => Ok(map.into_iter().collect()),
        _ => Err(FailReason::MalformedArguments {
            message: "arguments are not a JSON object".to_string(),
        }),
    }
}

fn extract_duplicate_key(message: &str) -> Option<String> {
    let start = message.find(DUP_MARKER)? + DUP_MARKER.len();
    let rest = &message[start..];
    let quoted = rest.strip_prefix('"')?;
    let end = quoted.find('"')?;
    Some(quoted[..end].to_string())
}

/// Deserialization seed that rebuilds a JSON value while erroring on the
/// first repeated key in any object.
struct CheckedValue;

impl<'de> DeserializeSeed<'de> for CheckedValue {
    type Value = serde_json::Value;

    fn deserialize<D>(self, deserializer: D) -> Result<Self::Value, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        deserializer.deserialize_any(CheckedVisitor)
    }
}

struct CheckedVisitor;

impl<'de> Visitor<'de> for CheckedVisitor {
    type Value = serde_json::Value;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_bool<E>(self, v: bool) -> Result<Self::Value, E> {
        Ok(serde_json::Value::Bool(v))
    }

    fn visit_i64<E>(self, v: i64) -> Result<Self::Value, E> {
        Ok(serde_json::Value::from(v))
    }

    fn visit_u64<E>(self, v: u64) -> Result<Self::Value, E> {
        Ok(serde_json::Value::from(v))
    }

    fn visit_f64<E>(self, v: f64) -> Result<Self::Value, E> {
        Ok(serde_json::Value::from(v))
    }

    fn visit_str<E>(self, v: &str) -> Result<Self::Value, E> {
        Ok(serde_json::Value::String(v.to_string()))
    }

    fn visit_string<E>(self, v: String) -> Result<Self::Value, E> {
        Ok(serde_json::Value::String(v))
    }

    fn visit_unit<E>(self) -> Result<Self::Value, E> {
        Ok(serde_json::Value::Null)
    }

    fn visit_seq<A>(self, mut seq: A) -> Result<Self::Value, A::Error>
    where
        A: SeqAccess<'de>,
    {
        let mut items = Vec::new();
        while let Some(item) = seq.next_element_seed(CheckedValue)? {
            items.push(item);
        }
        Ok(serde_json::Value::Array(items))
    }

    fn visit_map<A>(self, mut map: A) -> Result<Self::Value, A::Error>
    where
        A: MapAccess<'de>,
    {
        let mut object = serde_json::Map::new();
        while let Some(key) = map.next_key::<String>()? {
            let value = map.next_value_seed(CheckedValue)?;
            if object.insert(key.clone(), value).is_some() {
                return Err(A::Error::custom(alloc::format!("{DUP_MARKER}{key:?}")));
            }
        }
        Ok(serde_json::Value::Object(object))
    }
}
