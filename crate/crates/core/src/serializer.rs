//! Chat-format serialization of samples into training text.
//!
//! A serialized example is one string holding the developer turn (system
//! instruction, optional current time, tool declarations), the user turn,
//! and the assistant completion. `prompt_end` records the character offset
//! where the completion starts so a trainer can mask everything before it.
//!
//! Tool declarations travel between `decl_start`/`decl_end` as compact JSON.
//! The completion is either a single call wrapped in `call_start`/`call_end`
//! or a fixed no-call marker. Top-level string argument values are wrapped in
//! the escape token instead of JSON string syntax, which lets Arabic text
//! carry braces and quotes verbatim without a layer of backslash escaping.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::schema::{Sample, ToolCall, ToolSchema};

pub const TURN_DEVELOPER: &str = "<start_of_turn>developer\n";
pub const TURN_USER: &str = "<start_of_turn>user\n";
pub const TURN_MODEL: &str = "<start_of_turn>model\n";
pub const TURN_END: &str = "<end_of_turn>\n";

/// The special tokens that structure declarations, calls, and responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlTokens {
    pub decl_start: String,
    pub decl_end: String,
    pub call_start: String,
    pub call_end: String,
    /// Response delimiters are reserved for multi-turn data; they are still
    /// validated and counted so a future extension cannot collide with them.
    pub resp_start: String,
    pub resp_end: String,
    pub escape: String,
}

impl Default for ControlTokens {
    fn default() -> Self {
        ControlTokens {
            decl_start: "<start_function_declaration>".to_string(),
            decl_end: "<end_function_declaration>".to_string(),
            call_start: "<start_function_call>".to_string(),
            call_end: "<end_function_call>".to_string(),
            resp_start: "<start_function_response>".to_string(),
            resp_end: "<end_function_response>".to_string(),
            escape: "<escape>".to_string(),
        }
    }
}

/// Delimiters of the optional reasoning block at the head of a completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThinkTokens {
    pub open: String,
    pub close: String,
}

impl Default for ThinkTokens {
    fn default() -> Self {
        ThinkTokens {
            open: "<think>".to_string(),
            close: "</think>".to_string(),
        }
    }
}

/// Where the "Current time" line in the developer turn comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampPolicy {
    /// Use the sample's own timestamp; samples without one get no line.
    FromSample,
    /// Stamp every prompt with the same fixed string.
    Fixed(String),
    Omit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SerializerConfig {
    pub system_instruction: String,
    pub timestamp_policy: TimestampPolicy,
    pub control_tokens: ControlTokens,
    pub think_tokens: ThinkTokens,
    /// Completion emitted for negatives instead of a call.
    pub no_call_text: String,
}

impl Default for SerializerConfig {
    fn default() -> Self {
        SerializerConfig {
            system_instruction: "أنت مساعد ذكي يمكنه استدعاء الأدوات التالية عند الحاجة."
                .to_string(),
            timestamp_policy: TimestampPolicy::FromSample,
            control_tokens: ControlTokens::default(),
            think_tokens: ThinkTokens::default(),
            no_call_text: "لا حاجة إلى استدعاء أداة.".to_string(),
        }
    }
}

impl SerializerConfig {
    fn labeled_tokens(&self) -> [(&'static str, &str); 9] {
        let c = &self.control_tokens;
        [
            ("decl_start", &c.decl_start),
            ("decl_end", &c.decl_end),
            ("call_start", &c.call_start),
            ("call_end", &c.call_end),
            ("resp_start", &c.resp_start),
            ("resp_end", &c.resp_end),
            ("escape", &c.escape),
            ("think_open", &self.think_tokens.open),
            ("think_close", &self.think_tokens.close),
        ]
    }

    /// All nine special tokens, for substring scans.
    pub fn all_tokens(&self) -> Vec<String> {
        self.labeled_tokens()
            .iter()
            .map(|(_, t)| (*t).to_owned())
            .collect()
    }

    /// Token sanity: non-empty, pairwise distinct, and no token may be a
    /// substring of another, otherwise scanning for one token could fire
    /// inside an occurrence of another.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let tokens = self.labeled_tokens();
        for (label, token) in &tokens {
            if token.is_empty() {
                return Err(ConfigError::EmptyToken { which: label });
            }
        }
        for (i, (label_a, a)) in tokens.iter().enumerate() {
            for (label_b, b) in tokens.iter().skip(i + 1) {
                if a == b {
                    return Err(ConfigError::DuplicateToken {
                        first: label_a,
                        second: label_b,
                    });
                }
                if a.contains(b.as_ref() as &str) {
                    return Err(ConfigError::NestedToken {
                        outer: label_a,
                        inner: label_b,
                    });
                }
                if b.contains(a.as_ref() as &str) {
                    return Err(ConfigError::NestedToken {
                        outer: label_b,
                        inner: label_a,
                    });
                }
            }
        }
        if self.no_call_text.trim().is_empty() {
            return Err(ConfigError::EmptyNoCallText);
        }
        if let Some(token) = first_token_inside(&self.no_call_text, self) {
            return Err(ConfigError::NoCallTextContainsToken { token });
        }
        Ok(())
    }
}

fn first_token_inside(text: &str, config: &SerializerConfig) -> Option<String> {
    config.all_tokens().into_iter().find(|t| text.contains(t.as_str()))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("control token {which} is empty")]
    EmptyToken { which: &'static str },
    #[error("control tokens {first} and {second} are identical")]
    DuplicateToken {
        first: &'static str,
        second: &'static str,
    },
    #[error("control token {inner} is a substring of {outer}")]
    NestedToken {
        outer: &'static str,
        inner: &'static str,
    },
    #[error("no_call_text is empty")]
    EmptyNoCallText,
    #[error("no_call_text contains control token {token:?}")]
    NoCallTextContainsToken { token: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SerializeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot serialize against an empty tool list")]
    EmptyToolInventory,
    #[error("sample {id:?} requires a function but carries no target call")]
    MissingTarget { id: String },
    #[error("sample {id:?} does not require a function but carries a target call")]
    UnexpectedTarget { id: String },
    #[error("sample {id:?} targets {tool:?}, which is not among the offered tools")]
    TargetNotOffered { id: String, tool: String },
    #[error("sample {id:?} has an empty query")]
    EmptyQuery { id: String },
    #[error("sample {id:?} argument {parameter:?} contains control token {token:?} and cannot be escaped")]
    UnrepresentableValue {
        id: String,
        parameter: String,
        token: String,
    },
    #[error("sample {id:?} has empty reasoning text")]
    EmptyReasoning { id: String },
    #[error("sample {id:?} reasoning contains the think close token and cannot be delimited")]
    UnrepresentableReasoning { id: String },
    #[error("serialized example has no token count to compare against the budget")]
    MissingTokenCount,
}

/// One rendered training example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerializedExample {
    pub id: String,
    pub text: String,
    /// Character offset (not bytes) where the assistant completion begins.
    /// Everything before it is prompt and is masked out of the loss.
    pub prompt_end: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub token_count: Option<usize>,
}

impl SerializedExample {
    fn byte_of_char(&self, char_offset: usize) -> usize {
        self.text
            .char_indices()
            .nth(char_offset)
            .map(|(b, _)| b)
            .unwrap_or(self.text.len())
    }

    pub fn prompt(&self) -> &str {
        &self.text[..self.byte_of_char(self.prompt_end)]
    }

    pub fn completion(&self) -> &str {
        &self.text[self.byte_of_char(self.prompt_end)..]
    }
}

/// Renders the prompt turns shared by [`serialize`] and [`serialize_think`].
fn render_prompt(
    sample: &Sample,
    tools: &[ToolSchema],
    config: &SerializerConfig,
) -> Result<String, SerializeError> {
    if tools.is_empty() {
        return Err(SerializeError::EmptyToolInventory);
    }
    if sample.query.trim().is_empty() {
        return Err(SerializeError::EmptyQuery {
            id: sample.id.clone(),
        });
    }

    let mut text = String::new();
    text.push_str(TURN_DEVELOPER);
    text.push_str(&config.system_instruction);
    if let Some(ts) = render_time_line(sample, config) {
        text.push_str(&ts);
    }
    text.push('\n');
    text.push_str(&render_declarations(tools, config));
    text.push_str(TURN_END);
    text.push_str(TURN_USER);
    text.push_str(&sample.query);
    text.push_str(TURN_END);
    text.push_str(TURN_MODEL);
    Ok(text)
}

/// The "Current time" segment injected after the system instruction, if the
/// policy yields one for this sample.
pub(crate) fn render_time_line(sample: &Sample, config: &SerializerConfig) -> Option<String> {
    let timestamp = match &config.timestamp_policy {
        TimestampPolicy::FromSample => sample.timestamp.as_deref(),
        TimestampPolicy::Fixed(ts) => Some(ts.as_str()),
        TimestampPolicy::Omit => None,
    };
    timestamp.map(|ts| format!("\nCurrent time: {ts}"))
}

/// The declaration block: one line per tool, each a compact JSON schema
/// between the declaration tokens.
pub fn render_declarations(tools: &[ToolSchema], config: &SerializerConfig) -> String {
    let mut text = String::new();
    for tool in tools {
        text.push_str(&config.control_tokens.decl_start);
        text.push_str(&serde_json::to_string(tool).expect("tool schemas serialize infallibly"));
        text.push_str(&config.control_tokens.decl_end);
        text.push('\n');
    }
    text
}

/// Renders the canonical call text for a target: name plus arguments between
/// the call tokens. Argument keys follow the schema's declaration order with
/// undeclared keys sorted last, so the same call always prints identically.
pub fn render_call(
    call: &ToolCall,
    schema: Option<&ToolSchema>,
    config: &SerializerConfig,
    sample_id: &str,
) -> Result<String, SerializeError> {
    let mut ordered: Vec<&String> = Vec::with_capacity(call.arguments.len());
    if let Some(schema) = schema {
        for param in &schema.parameters {
            if let Some((key, _)) = call.arguments.get_key_value(&param.name) {
                ordered.push(key);
            }
        }
    }
    for key in call.arguments.keys() {
        if !ordered.iter().any(|k| *k == key) {
            ordered.push(key);
        }
    }

    let mut body = String::from("{");
    for (i, key) in ordered.iter().enumerate() {
        if i > 0 {
            body.push(',');
        }
        body.push_str(&serde_json::to_string(key).expect("strings serialize infallibly"));
        body.push(':');
        let value = &call.arguments[*key];
        match value {
            serde_json::Value::String(s) => {
                if let Some(token) = first_token_inside(s, config) {
                    return Err(SerializeError::UnrepresentableValue {
                        id: sample_id.to_owned(),
                        parameter: (*key).clone(),
                        token,
                    });
                }
                body.push_str(&config.control_tokens.escape);
                body.push_str(s);
                body.push_str(&config.control_tokens.escape);
            }
            other => {
                body.push_str(
                    &serde_json::to_string(other).expect("json values serialize infallibly"),
                );
            }
        }
    }
    body.push('}');

    Ok(format!(
        "{}{}{}{}",
        config.control_tokens.call_start, call.tool_name, body, config.control_tokens.call_end
    ))
}

pub(crate) fn render_completion(
    sample: &Sample,
    tools: &[ToolSchema],
    config: &SerializerConfig,
) -> Result<String, SerializeError> {
    if sample.requires_function {
        let target = sample
            .target
            .as_ref()
            .ok_or_else(|| SerializeError::MissingTarget {
                id: sample.id.clone(),
            })?;
        let schema = tools
            .iter()
            .find(|t| t.name == target.tool_name)
            .ok_or_else(|| SerializeError::TargetNotOffered {
                id: sample.id.clone(),
                tool: target.tool_name.clone(),
            })?;
        render_call(target, Some(schema), config, &sample.id)
    } else {
        if sample.target.is_some() {
            return Err(SerializeError::UnexpectedTarget {
                id: sample.id.clone(),
            });
        }
        Ok(config.no_call_text.clone())
    }
}

fn assemble(sample: &Sample, prompt: String, completion: &str) -> SerializedExample {
    let prompt_end = prompt.chars().count();
    let mut text = prompt;
    text.push_str(completion);
    SerializedExample {
        id: sample.id.clone(),
        text,
        prompt_end,
        token_count: None,
    }
}

/// Serializes one sample against its offered tools.
///
/// The returned `token_count` is `None`; callers that care about budgets fill
/// it in with a [`TokenCounter`] of their choice or an upstream override.
pub fn serialize(
    sample: &Sample,
    tools: &[ToolSchema],
    config: &SerializerConfig,
) -> Result<SerializedExample, SerializeError> {
    config.validate()?;
    let prompt = render_prompt(sample, tools, config)?;
    let completion = render_completion(sample, tools, config)?;
    Ok(assemble(sample, prompt, &completion))
}

/// Like [`serialize`], but the completion opens with a reasoning block
/// between the think tokens before the call or no-call marker.
pub fn serialize_think(
    sample: &Sample,
    tools: &[ToolSchema],
    reasoning: &str,
    config: &SerializerConfig,
) -> Result<SerializedExample, SerializeError> {
    config.validate()?;
    if reasoning.trim().is_empty() {
        return Err(SerializeError::EmptyReasoning {
            id: sample.id.clone(),
        });
    }
    if reasoning.contains(config.think_tokens.close.as_str()) {
        return Err(SerializeError::UnrepresentableReasoning {
            id: sample.id.clone(),
        });
    }
    let prompt = render_prompt(sample, tools, config)?;
    let tail = render_completion(sample, tools, config)?;
    let completion = format!(
        "{}{}{}\n{}",
        config.think_tokens.open, reasoning, config.think_tokens.close, tail
    );
    Ok(assemble(sample, prompt, &completion))
}

/// Counts prompt-length units for budget checks.
pub trait TokenCounter {
    fn count(&self, text: &str) -> usize;
}

/// Deterministic counter used when no real tokenizer is wired in: each
/// whitespace-delimited unit counts once, and each control-token occurrence
/// counts once on top. It overestimates glued text slightly but is stable
/// across platforms, which is what reproducible audits need.
#[derive(Debug, Clone)]
pub struct DefaultTokenCounter {
    tokens: Vec<String>,
}

impl DefaultTokenCounter {
    pub fn new(config: &SerializerConfig) -> Self {
        DefaultTokenCounter {
            tokens: config.all_tokens(),
        }
    }
}

impl TokenCounter for DefaultTokenCounter {
    fn count(&self, text: &str) -> usize {
        let words = text.split_whitespace().count();
        let specials: usize = self
            .tokens
            .iter()
            .map(|t| text.matches(t.as_str()).count())
            .sum();
        words + specials
    }
}

pub fn count_tokens(text: &str, counter: &dyn TokenCounter) -> usize {
    counter.count(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextFit {
    pub fits: bool,
    /// How many tokens past the budget the example lands; zero when it fits.
    pub overflow_by: usize,
}

/// Compares an example's token count against a budget.
pub fn check_context_fit(
    example: &SerializedExample,
    budget: usize,
) -> Result<ContextFit, SerializeError> {
    let count = example.token_count.ok_or(SerializeError::MissingTokenCount)?;
    Ok(ContextFit {
        fits: count <= budget,
        overflow_by: count.saturating_sub(budget),
    })
}
