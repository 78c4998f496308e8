//! Fixture builders shared by the integration tests: a 36-tool inventory in
//! eight domains, corpora with known defect counts, repair configs, and
//! gold/prediction sets engineered to hit exact metric values.
#![allow(dead_code)]

use std::collections::BTreeMap;

use callforge_cli::formats::{CorpusRow, GoldRow, PredictionRow};
use callforge_core::audit::{MergeSpec, NormalizationMap, PrunePlan};
use callforge_core::schema::{Dialect, ParameterSpec, Sample, ToolCall, ToolSchema, ValueType};
use callforge_core::serializer::{render_call, SerializerConfig};
use serde_json::{json, Value};

pub const JUNK_TOOLS: [&str; 7] = [
    "debug_echo",
    "legacy_ping",
    "test_tool_a",
    "test_tool_b",
    "deprecated_search",
    "internal_metrics",
    "noop_tool",
];

const DESC_WORDS: [&str; 24] = [
    "خدمة",
    "تتيح",
    "للمستخدم",
    "الحصول",
    "على",
    "معلومات",
    "دقيقة",
    "ومحدثة",
    "بشكل",
    "مستمر",
    "مع",
    "دعم",
    "كامل",
    "لمختلف",
    "المناطق",
    "والمدن",
    "العربية",
    "وتشمل",
    "تفاصيل",
    "إضافية",
    "حسب",
    "الطلب",
    "وبدون",
    "تكلفة",
];

const QUERY_WORDS: [&str; 20] = [
    "أريد",
    "معرفة",
    "حالة",
    "الخدمة",
    "في",
    "المدينة",
    "اليوم",
    "الآن",
    "فضلا",
    "ساعدني",
    "بخصوص",
    "الموعد",
    "القادم",
    "بسرعة",
    "لو",
    "سمحت",
    "عاجل",
    "جدا",
    "قبل",
    "المغرب",
];

const CITY_WORDS: [&str; 8] = [
    "الرياض",
    "جدة",
    "القاهرة",
    "بيروت",
    "الرباط",
    "دبي",
    "عمان",
    "تونس",
];

/// Arabic filler text of exactly `n` words, offset by `salt` so different
/// tools do not share identical descriptions.
pub fn arabic_words(n: usize, salt: usize) -> String {
    (0..n)
        .map(|j| DESC_WORDS[(salt + j) % DESC_WORDS.len()])
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn query_text(i: usize) -> String {
    let len = 5 + i % 4;
    (0..len)
        .map(|j| QUERY_WORDS[(i * 7 + j) % QUERY_WORDS.len()])
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn city(i: usize) -> &'static str {
    CITY_WORDS[i % CITY_WORDS.len()]
}

pub fn dialect(i: usize) -> Dialect {
    Dialect::ALL[i % Dialect::ALL.len()]
}

fn param(
    name: &str,
    value_type: ValueType,
    required: bool,
    enum_values: Option<&[&str]>,
    salt: usize,
) -> ParameterSpec {
    ParameterSpec {
        name: name.to_string(),
        value_type,
        description: arabic_words(6, salt),
        enum_values: enum_values.map(|vs| vs.iter().map(|v| v.to_string()).collect()),
        required,
    }
}

struct ToolSpec {
    name: &'static str,
    domain: &'static str,
    desc_words: usize,
    params: Vec<ParameterSpec>,
}

/// The 27 canonical tools. Descriptions run about seventy words each so a
/// prompt declaring the whole inventory overshoots a 2048-token budget while
/// a five-tool slice stays far under it.
fn canonical_specs() -> Vec<ToolSpec> {
    let t = |name: &'static str, domain: &'static str, params: Vec<ParameterSpec>| ToolSpec {
        name,
        domain,
        desc_words: 70,
        params,
    };
    let s = ValueType::String;
    let n = ValueType::Number;
    let i = ValueType::Integer;
    let b = ValueType::Boolean;
    vec![
        t("get_weather", "weather", vec![
            param("city", s, true, None, 1),
            param("unit", s, false, Some(&["celsius", "fahrenheit"]), 2),
        ]),
        t("get_forecast", "weather", vec![
            param("city", s, true, None, 3),
            param("days", i, true, None, 4),
            param("unit", s, false, Some(&["celsius", "fahrenheit"]), 5),
        ]),
        t("get_weather_alerts", "weather", vec![
            param("region", s, true, None, 6),
            param("severity", s, false, Some(&["low", "medium", "high"]), 7),
        ]),
        t("get_humidity", "weather", vec![
            param("city", s, true, None, 8),
            param("hour", i, false, None, 9),
        ]),
        t("get_current_time", "utilities", vec![param("city", s, true, None, 10)]),
        t("set_reminder", "utilities", vec![
            param("text", s, true, None, 11),
            param("time", s, true, None, 12),
        ]),
        t("calculate", "utilities", vec![param("expression", s, true, None, 13)]),
        t("translate_text", "utilities", vec![
            param("text", s, true, None, 14),
            param("target_lang", s, true, Some(&["ar", "en", "fr"]), 15),
        ]),
        t("search_flights", "travel", vec![
            param("origin", s, true, None, 16),
            param("destination", s, true, None, 17),
            param("date", s, true, None, 18),
            param("cabin", s, false, Some(&["economy", "business", "first"]), 19),
        ]),
        t("book_hotel", "travel", vec![
            param("city", s, true, None, 20),
            param("check_in", s, true, None, 21),
            param("nights", i, true, None, 22),
        ]),
        t("get_flight_status", "travel", vec![param("flight_number", s, true, None, 23)]),
        t("find_restaurants", "travel", vec![
            param("city", s, true, None, 0),
            param("cuisine", s, false, None, 1),
        ]),
        t("get_prayer_times", "islamic_services", vec![
            param("city", s, true, None, 2),
            param("method", s, false, Some(&["mwl", "isna", "egypt"]), 3),
        ]),
        t("get_qibla_direction", "islamic_services", vec![
            param("latitude", n, true, None, 4),
            param("longitude", n, true, None, 5),
        ]),
        t("get_hijri_date", "islamic_services", vec![param("date", s, false, None, 6)]),
        t("renew_id_card", "government", vec![
            param("national_id", s, true, None, 7),
            param("office", s, false, None, 8),
        ]),
        t("book_appointment", "government", vec![
            param("service", s, true, None, 9),
            param("date", s, true, None, 10),
        ]),
        t("check_visa_status", "government", vec![param("application_id", s, true, None, 11)]),
        t("find_pharmacy", "healthcare", vec![
            param("city", s, true, None, 12),
            param("open_now", b, false, None, 13),
        ]),
        t("book_doctor", "healthcare", vec![
            param(
                "specialty",
                s,
                true,
                Some(&["cardiology", "dermatology", "pediatrics", "general"]),
                14,
            ),
            param("city", s, true, None, 15),
            param("date", s, false, None, 16),
        ]),
        t("get_medicine_info", "healthcare", vec![param("name", s, true, None, 17)]),
        t("convert_currency", "banking", vec![
            param("amount", n, true, None, 18),
            param("from", s, true, None, 19),
            param("to", s, true, None, 20),
        ]),
        t("get_exchange_rate", "banking", vec![
            param("from", s, true, None, 21),
            param("to", s, true, None, 22),
        ]),
        t("get_account_balance", "banking", vec![param("account_id", s, true, None, 23)]),
        t("get_air_quality", "environment", vec![
            param("city", s, true, None, 0),
            param("pollutant", s, false, None, 1),
        ]),
        t("get_sea_temperature", "environment", vec![param("coast", s, true, None, 2)]),
        t("report_pollution", "environment", vec![
            param("location", s, true, None, 3),
            param("kind", s, true, Some(&["air", "water", "noise"]), 4),
        ]),
    ]
}

fn build(spec: ToolSpec, salt: usize) -> ToolSchema {
    ToolSchema {
        name: spec.name.to_string(),
        description: arabic_words(spec.desc_words, salt),
        parameters: spec.params,
    }
}

/// The 27 tools that survive repair.
pub fn inventory_canonical() -> Vec<ToolSchema> {
    canonical_specs()
        .into_iter()
        .enumerate()
        .map(|(i, spec)| build(spec, i))
        .collect()
}

/// The raw 36-tool inventory: canonical tools, two redundant aliases that a
/// prune plan folds away, and seven junk tools nothing ever calls.
///
/// `get_time_in_city` deliberately shares its parameter signature with
/// `get_current_time` so duplicate detection has something real to find.
pub fn inventory_full() -> Vec<ToolSchema> {
    let mut tools = inventory_canonical();
    let s = ValueType::String;
    tools.push(ToolSchema {
        name: "currency_convert".to_string(),
        description: arabic_words(30, 5),
        parameters: vec![
            param("amount", ValueType::Number, true, None, 6),
            param("source", s, true, None, 7),
            param("dest", s, true, None, 8),
        ],
    });
    tools.push(ToolSchema {
        name: "get_time_in_city".to_string(),
        description: arabic_words(30, 9),
        parameters: vec![param("city", s, true, None, 10)],
    });
    for (j, name) in JUNK_TOOLS.iter().enumerate() {
        let params = match j {
            0 => vec![param("payload", s, true, None, 11)],
            1 => vec![
                param("host", s, true, None, 12),
                param("timeout", ValueType::Integer, false, None, 13),
            ],
            2 => vec![param("alpha", s, true, None, 14)],
            3 => vec![param("beta", ValueType::Integer, true, None, 15)],
            4 => vec![
                param("query_text", s, true, None, 16),
                param("limit", ValueType::Integer, false, None, 17),
            ],
            5 => vec![
                param("metric_name", s, true, None, 18),
                param("window", ValueType::Integer, false, None, 19),
            ],
            _ => vec![param("reason", s, false, None, 20)],
        };
        tools.push(ToolSchema {
            name: name.to_string(),
            description: arabic_words(12, 21 + j),
            parameters: params,
        });
    }
    tools
}

pub fn prune_plan() -> PrunePlan {
    let mut merge = BTreeMap::new();
    merge.insert(
        "currency_convert".to_string(),
        MergeSpec {
            target: "convert_currency".to_string(),
            param_renames: BTreeMap::from([
                ("source".to_string(), "from".to_string()),
                ("dest".to_string(), "to".to_string()),
            ]),
        },
    );
    merge.insert(
        "get_time_in_city".to_string(),
        MergeSpec {
            target: "get_current_time".to_string(),
            param_renames: BTreeMap::new(),
        },
    );
    PrunePlan {
        remove: JUNK_TOOLS.iter().map(|s| s.to_string()).collect(),
        merge,
    }
}

pub fn normalization_map() -> NormalizationMap {
    let table = |pairs: &[(&str, &str)]| -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    };
    let mut map: BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>> = BTreeMap::new();
    map.insert(
        "get_weather".to_string(),
        BTreeMap::from([(
            "unit".to_string(),
            table(&[("Celsius", "celsius"), ("C", "celsius"), ("Fahrenheit", "fahrenheit")]),
        )]),
    );
    map.insert(
        "get_forecast".to_string(),
        BTreeMap::from([(
            "unit".to_string(),
            table(&[("Celsius", "celsius"), ("Fahrenheit", "fahrenheit")]),
        )]),
    );
    map.insert(
        "translate_text".to_string(),
        BTreeMap::from([(
            "target_lang".to_string(),
            table(&[("AR", "ar"), ("Arabic", "ar"), ("EN", "en"), ("English", "en")]),
        )]),
    );
    NormalizationMap(map)
}

/// Type-correct argument bindings for a tool: every required parameter bound,
/// enums drawn from their permitted values, `i` varying the choices.
pub fn valid_args(tool: &ToolSchema, i: usize) -> BTreeMap<String, Value> {
    let mut args = BTreeMap::new();
    for (pi, p) in tool.parameters.iter().enumerate() {
        if !p.required && (i + pi) % 2 == 0 {
            continue;
        }
        let value = if let Some(vs) = &p.enum_values {
            json!(vs[(i + pi) % vs.len()])
        } else {
            match p.value_type {
                ValueType::String => json!(format!("{} {}", city(i + pi), (i + pi) % 30)),
                ValueType::Integer => json!(((i + pi) % 14 + 1) as i64),
                ValueType::Number => json!((i % 90) as f64 + 0.25),
                ValueType::Boolean => json!(i % 2 == 0),
                ValueType::Array => json!([city(i), city(i + 1)]),
                ValueType::Object => json!({"note": city(i + 2)}),
            }
        };
        args.insert(p.name.clone(), value);
    }
    args
}

pub fn positive(id: String, i: usize, domain: &str, call: ToolCall) -> Sample {
    Sample {
        id,
        query: query_text(i),
        dialect: dialect(i),
        domain: domain.to_string(),
        requires_function: true,
        target: Some(call),
        timestamp: (i % 3 == 0).then(|| format!("2024-03-{:02} 1{}:{:02}", i % 28 + 1, i % 10, i % 60)),
    }
}

pub fn negative(id: String, i: usize, domain: &str) -> Sample {
    Sample {
        id,
        query: query_text(i),
        dialect: dialect(i),
        domain: domain.to_string(),
        requires_function: false,
        target: None,
        timestamp: None,
    }
}

fn row(sample: Sample) -> CorpusRow {
    CorpusRow { sample, reasoning: None, token_count: None }
}

fn jsonl_line(row: &CorpusRow) -> String {
    serde_json::to_string(row).expect("fixture rows serialize")
}

/// Frozen totals for the audit corpus so tests read as a checklist.
pub struct AuditFixture {
    /// Raw file content: 5,000 readable rows plus 20 defective lines.
    pub jsonl: String,
    pub total_samples: usize,
    pub unreadable_rows: usize,
    pub empty_queries: usize,
    pub enum_violations_legacy: usize,
    pub enum_violations_none_is_valid: usize,
    pub samples_restored_by_fix: usize,
    pub alias_rows: usize,
    pub variant_rows: usize,
}

/// The audit and repair corpus: exactly 1,200 positives whose only defect is
/// an explicit null for an optional enum parameter, 350 positives carrying
/// surface-variant enum spellings, 300 calls to alias tools, 40 empty-query
/// negatives, ordinary traffic for every canonical tool, and 20 defective
/// lines the loader must refuse.
pub fn audit_fixture() -> AuditFixture {
    let canonical = inventory_canonical();
    let domain_of: BTreeMap<&'static str, &'static str> = canonical_specs()
        .iter()
        .map(|s| (s.name, s.domain))
        .collect();
    let mut lines: Vec<String> = Vec::with_capacity(5020);
    let mut idx = 0usize;

    fn push_positive(
        lines: &mut Vec<String>,
        idx: &mut usize,
        domain: &str,
        tool_name: &str,
        args: BTreeMap<String, Value>,
    ) {
        let call = ToolCall { tool_name: tool_name.to_string(), arguments: args };
        let sample = positive(format!("aud-{:05}", *idx), *idx, domain, call);
        lines.push(jsonl_line(&row(sample)));
        *idx += 1;
    }

    // 1,200 rows whose single defect is null for an optional enum parameter.
    for i in 0..700 {
        let args = BTreeMap::from([
            ("city".to_string(), json!(city(i))),
            ("unit".to_string(), Value::Null),
        ]);
        push_positive(&mut lines, &mut idx, domain_of["get_weather"], "get_weather", args);
    }
    for i in 0..300 {
        let args = BTreeMap::from([
            ("city".to_string(), json!(city(i))),
            ("days".to_string(), json!(3)),
            ("unit".to_string(), Value::Null),
        ]);
        push_positive(&mut lines, &mut idx, domain_of["get_forecast"], "get_forecast", args);
    }
    for i in 0..200 {
        let args = BTreeMap::from([
            ("city".to_string(), json!(city(i))),
            ("method".to_string(), Value::Null),
        ]);
        push_positive(&mut lines, &mut idx, domain_of["get_prayer_times"], "get_prayer_times", args);
    }

    // 350 rows with surface-variant enum spellings, violations under both
    // rules until normalization folds them onto canonical values.
    for i in 0..350 {
        match i % 5 {
            0 => push_positive(
                &mut lines,
                &mut idx,
                domain_of["get_weather"],
                "get_weather",
                BTreeMap::from([
                    ("city".to_string(), json!(city(i))),
                    ("unit".to_string(), json!("Celsius")),
                ]),
            ),
            1 => push_positive(
                &mut lines,
                &mut idx,
                domain_of["get_weather"],
                "get_weather",
                BTreeMap::from([
                    ("city".to_string(), json!(city(i))),
                    ("unit".to_string(), json!("C")),
                ]),
            ),
            2 => push_positive(
                &mut lines,
                &mut idx,
                domain_of["get_forecast"],
                "get_forecast",
                BTreeMap::from([
                    ("city".to_string(), json!(city(i))),
                    ("days".to_string(), json!(5)),
                    ("unit".to_string(), json!("Fahrenheit")),
                ]),
            ),
            3 => push_positive(
                &mut lines,
                &mut idx,
                domain_of["translate_text"],
                "translate_text",
                BTreeMap::from([
                    ("text".to_string(), json!(query_text(i))),
                    ("target_lang".to_string(), json!("AR")),
                ]),
            ),
            _ => push_positive(
                &mut lines,
                &mut idx,
                domain_of["translate_text"],
                "translate_text",
                BTreeMap::from([
                    ("text".to_string(), json!(query_text(i))),
                    ("target_lang".to_string(), json!("Arabic")),
                ]),
            ),
        }
    }

    // 300 calls to the alias tools a prune plan folds into canonical ones.
    for i in 0..180 {
        let args = BTreeMap::from([
            ("amount".to_string(), json!(100.0 + i as f64)),
            ("source".to_string(), json!("USD")),
            ("dest".to_string(), json!("EUR")),
        ]);
        push_positive(&mut lines, &mut idx, "banking", "currency_convert", args);
    }
    for i in 0..120 {
        let args = BTreeMap::from([("city".to_string(), json!(city(i)))]);
        push_positive(&mut lines, &mut idx, "utilities", "get_time_in_city", args);
    }

    // 40 negatives with nothing in the query field.
    for i in 0..40 {
        let mut sample = negative(format!("aud-{idx:05}"), idx, "utilities");
        sample.query = if i % 2 == 0 { String::new() } else { "   ".to_string() };
        lines.push(jsonl_line(&row(sample)));
        idx += 1;
    }

    // 1,000 ordinary negatives.
    let domains = ["weather", "utilities", "travel", "islamic_services", "government", "healthcare", "banking", "environment"];
    for i in 0..1000 {
        let sample = negative(format!("aud-{idx:05}"), idx, domains[i % domains.len()]);
        lines.push(jsonl_line(&row(sample)));
        idx += 1;
    }

    // 2,110 clean positives cycling through every canonical tool.
    for i in 0..2110 {
        let schema = &canonical[i % canonical.len()];
        let args = valid_args(schema, i);
        let name = schema.name.clone();
        let domain = domain_of[name.as_str()];
        push_positive(&mut lines, &mut idx, domain, &name, args);
    }
    assert_eq!(idx, 5000, "audit fixture row budget");

    // 20 defective lines: 12 that do not parse, 5 with polarity conflicts,
    // 3 that reuse an earlier id.
    for i in 0..12 {
        lines.push(format!("{{\"id\": \"broken-{i}\", \"query\": unquoted"));
    }
    for i in 0..5 {
        if i % 2 == 0 {
            lines.push(format!(
                r#"{{"id":"pol-{i}","query":"سؤال","dialect":"MSA","domain":"weather","requires_function":true,"target":null}}"#
            ));
        } else {
            let call = serde_json::to_string(&ToolCall {
                tool_name: "get_weather".to_string(),
                arguments: BTreeMap::from([("city".to_string(), json!(city(i)))]),
            })
            .unwrap();
            lines.push(format!(
                r#"{{"id":"pol-{i}","query":"سؤال","dialect":"Gulf","domain":"weather","requires_function":false,"target":{call}}}"#
            ));
        }
    }
    for i in 0..3 {
        let sample = negative(format!("aud-{:05}", i * 11), 9000 + i, "weather");
        lines.push(jsonl_line(&row(sample)));
    }
    AuditFixture {
        jsonl: lines.join("\n") + "\n",
        total_samples: 5000,
        unreadable_rows: 20,
        empty_queries: 40,
        enum_violations_legacy: 1550,
        enum_violations_none_is_valid: 350,
        samples_restored_by_fix: 1200,
        alias_rows: 300,
        variant_rows: 350,
    }
}

/// Split corpus with strata sizes 10,000 ×4, 4,900 ×2, 751 and 200 over
/// dialect and domain pairs.
pub fn split_fixture() -> Vec<Sample> {
    let strata: [(Dialect, &str, usize); 8] = [
        (Dialect::Msa, "weather", 10_000),
        (Dialect::Gulf, "banking", 10_000),
        (Dialect::Egyptian, "travel", 10_000),
        (Dialect::Levantine, "government", 10_000),
        (Dialect::Msa, "banking", 4_900),
        (Dialect::Gulf, "weather", 4_900),
        (Dialect::Maghrebi, "travel", 751),
        (Dialect::Msa, "government", 200),
    ];
    let mut samples = Vec::with_capacity(50_751);
    let mut idx = 0usize;
    for (dialect, domain, count) in strata {
        for _ in 0..count {
            samples.push(Sample {
                id: format!("sp-{idx:06}"),
                query: query_text(idx),
                dialect,
                domain: domain.to_string(),
                requires_function: false,
                target: None,
                timestamp: None,
            });
            idx += 1;
        }
    }
    assert_eq!(samples.len(), 50_751);
    samples
}

fn rendered_call(call: &ToolCall, schema: Option<&ToolSchema>, config: &SerializerConfig) -> String {
    render_call(call, schema, config, "fixture").expect("fixture calls are representable")
}

fn gold_positive(id: String, i: usize, schema: &ToolSchema, offered: Vec<String>) -> GoldRow {
    let call = ToolCall {
        tool_name: schema.name.clone(),
        arguments: valid_args(schema, i),
    };
    GoldRow {
        sample: positive(id, i, "weather", call),
        offered_tools: offered,
    }
}

/// Five offered tools starting at the gold tool, wrapping around the
/// canonical inventory.
fn offered_slice(canonical: &[ToolSchema], start: usize) -> Vec<String> {
    (0..5)
        .map(|j| canonical[(start + j) % canonical.len()].name.clone())
        .collect()
}

/// Gold and prediction set hitting an exact error-class census over 1,000
/// records: 8 parse failures, 247 hallucinations (150 calls on negatives,
/// 97 calls to unoffered tools), 236 wrong functions, 202 argument
/// mismatches, 203 correct (120 exact calls, 83 clean abstentions) and 104
/// missed calls.
pub fn taxonomy_fixture(config: &SerializerConfig) -> (Vec<GoldRow>, Vec<PredictionRow>) {
    let canonical = inventory_canonical();
    let mut gold = Vec::with_capacity(1000);
    let mut predictions = Vec::with_capacity(1000);
    let mut idx = 0usize;

    let mut push = |g: GoldRow, output: String| {
        predictions.push(PredictionRow { id: g.sample.id.clone(), output });
        gold.push(g);
    };

    // 8 parse failures: the call token opens but the braces never balance.
    for _ in 0..8 {
        let start = idx % canonical.len();
        let g = gold_positive(format!("tx-{idx:04}"), idx, &canonical[start], offered_slice(&canonical, start));
        push(g, format!("{}get_weather{{\"city\":\"الرياض\"", config.control_tokens.call_start));
        idx += 1;
    }

    // 150 hallucinated calls on negatives.
    for _ in 0..150 {
        let start = idx % canonical.len();
        let offered = offered_slice(&canonical, start);
        let schema = &canonical[start];
        let call = ToolCall { tool_name: schema.name.clone(), arguments: valid_args(schema, idx) };
        let g = GoldRow {
            sample: negative(format!("tx-{idx:04}"), idx, "utilities"),
            offered_tools: offered,
        };
        push(g, rendered_call(&call, Some(schema), config));
        idx += 1;
    }

    // 97 calls to a tool that was never offered.
    for _ in 0..97 {
        let start = idx % canonical.len();
        let g = gold_positive(format!("tx-{idx:04}"), idx, &canonical[start], offered_slice(&canonical, start));
        let call = ToolCall {
            tool_name: "debug_echo".to_string(),
            arguments: BTreeMap::from([("payload".to_string(), json!(city(idx)))]),
        };
        push(g, rendered_call(&call, None, config));
        idx += 1;
    }

    // 236 calls to an offered tool that is not the gold one.
    for _ in 0..236 {
        let start = idx % canonical.len();
        let offered = offered_slice(&canonical, start);
        let g = gold_positive(format!("tx-{idx:04}"), idx, &canonical[start], offered.clone());
        let wrong = &canonical[(start + 2) % canonical.len()];
        let call = ToolCall { tool_name: wrong.name.clone(), arguments: valid_args(wrong, idx) };
        push(g, rendered_call(&call, Some(wrong), config));
        idx += 1;
    }

    // 202 right-function calls whose arguments disagree.
    for _ in 0..202 {
        let start = idx % canonical.len();
        let schema = &canonical[start];
        let g = gold_positive(format!("tx-{idx:04}"), idx, schema, offered_slice(&canonical, start));
        let mut call = g.sample.target.clone().expect("positive");
        let wrong_key = call
            .arguments
            .keys()
            .next()
            .cloned()
            .unwrap_or_else(|| "حقل_زائد".to_string());
        call.arguments.insert(wrong_key, json!("قيمة مختلفة تماما"));
        push(g, rendered_call(&call, Some(schema), config));
        idx += 1;
    }

    // 120 exact calls, 60 of them behind a reasoning block.
    for k in 0..120 {
        let start = idx % canonical.len();
        let schema = &canonical[start];
        let g = gold_positive(format!("tx-{idx:04}"), idx, schema, offered_slice(&canonical, start));
        let call = g.sample.target.clone().expect("positive");
        let text = rendered_call(&call, Some(schema), config);
        let output = if k % 2 == 0 {
            format!(
                "{}سأستخدم الأداة المناسبة لهذا الطلب{}\n{}",
                config.think_tokens.open, config.think_tokens.close, text
            )
        } else {
            text
        };
        push(g, output);
        idx += 1;
    }

    // 83 clean abstentions on negatives.
    for _ in 0..83 {
        let start = idx % canonical.len();
        let g = GoldRow {
            sample: negative(format!("tx-{idx:04}"), idx, "banking"),
            offered_tools: offered_slice(&canonical, start),
        };
        push(g, "لا حاجة إلى استدعاء أداة هنا، يمكنني الإجابة مباشرة.".to_string());
        idx += 1;
    }

    // 104 positives the model answered without calling anything.
    for _ in 0..104 {
        let start = idx % canonical.len();
        let g = gold_positive(format!("tx-{idx:04}"), idx, &canonical[start], offered_slice(&canonical, start));
        push(g, "أعتذر، لا أستطيع تنفيذ هذا الطلب الآن.".to_string());
        idx += 1;
    }

    assert_eq!(gold.len(), 1000);
    (gold, predictions)
}

/// 240 positives where 238 predictions reason first and then call correctly
/// while two give plain refusals.
pub fn think_fixture(config: &SerializerConfig) -> (Vec<GoldRow>, Vec<PredictionRow>) {
    let canonical = inventory_canonical();
    let mut gold = Vec::with_capacity(240);
    let mut predictions = Vec::with_capacity(240);
    for idx in 0..240 {
        let start = idx % canonical.len();
        let schema = &canonical[start];
        let g = gold_positive(format!("tk-{idx:04}"), idx, schema, offered_slice(&canonical, start));
        let output = if idx < 238 {
            let call = g.sample.target.clone().expect("positive");
            format!(
                "{}المستخدم يطلب خدمة محددة، الأداة {} هي الأنسب{}\n{}",
                config.think_tokens.open,
                schema.name,
                config.think_tokens.close,
                rendered_call(&call, Some(schema), config)
            )
        } else {
            "عذرا، لا يمكنني المساعدة في هذا الطلب.".to_string()
        };
        predictions.push(PredictionRow { id: g.sample.id.clone(), output });
        gold.push(g);
    }
    (gold, predictions)
}
