//! Stratified train/validation/test splitting.
//!
//! Samples are grouped by the configured strata keys, each stratum gets
//! integer quotas from its exact proportions by the largest-remainder rule,
//! and membership inside a stratum follows a seed-keyed ranking of sample
//! ids. Because the ranking depends only on (seed, id), shuffling the input
//! changes nothing about who lands where, and the returned partitions are
//! sorted by id so even their order is canonical.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::hashing::stable_rank;
use crate::schema::Sample;

/// Domain tag mixed into the ranking key for this operation.
const RNG_DOMAIN: &str = "split";

/// Sample attributes a split can stratify on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrataKey {
    Dialect,
    Domain,
    /// Target tool name; negatives group under a shared "(none)" bucket.
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Train, validation, test fractions. Each must lie strictly inside
    /// (0, 1) and they must sum to one within 1e-9.
    pub ratios: [f64; 3],
    pub seed: u64,
    pub strata_keys: Vec<StrataKey>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), SplitError> {
        for r in self.ratios {
            if !(r > 0.0 && r < 1.0) {
                return Err(SplitError::InvalidRatios {
                    detail: format!("ratio {r} is outside (0, 1)"),
                });
            }
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SplitError::InvalidRatios {
                detail: format!("ratios sum to {sum}, not 1"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumCounts {
    pub n: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
    /// Per-stratum sizes, keyed by the joined strata label.
    pub strata: BTreeMap<String, StratumCounts>,
    /// One entry per stratum too small to split.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SplitError {
    #[error("invalid split ratios: {detail}")]
    InvalidRatios { detail: String },
    #[error("cannot split an empty sample list")]
    EmptyInput,
    #[error("duplicate sample id {id:?}")]
    DuplicateId { id: String },
}

fn stratum_of(sample: &Sample, keys: &[StrataKey]) -> Vec<String> {
    keys.iter()
        .map(|key| match key {
            StrataKey::Dialect => sample.dialect.name().to_string(),
            StrataKey::Domain => sample.domain.clone(),
            StrataKey::Tool => sample
                .target
                .as_ref()
                .map(|t| t.tool_name.clone())
                .unwrap_or_else(|| "(none)".to_string()),
        })
        .collect()
}

/// Largest-remainder apportionment of `n` into three integer quotas.
fn quotas(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let mut quota = [0usize; 3];
    let mut remainder = [0f64; 3];
    for (i, r) in ratios.iter().enumerate() {
        let exact = n as f64 * r;
        quota[i] = exact as usize;
        remainder[i] = exact - quota[i] as f64;
    }
    let assigned: usize = quota.iter().sum();
    let mut order = [0usize, 1, 2];
    // ties go to the earlier part: train, then val, then test
    order.sort_by(|&a, &b| {
        remainder[b]
            .partial_cmp(&remainder[a])
            .expect("remainders are finite")
            .then(a.cmp(&b))
    });
    for i in 0..n.saturating_sub(assigned) {
        quota[order[i % 3]] += 1;
    }
    quota
}

/// Splits the corpus into train/val/test.
///
/// Strata with fewer than three samples cannot give every partition a
/// member, so they go to train whole and a warning records the decision.
pub fn stratified_split(samples: Vec<Sample>, spec: &SplitSpec) -> Result<SplitOutcome, SplitError> {
    spec.validate()?;
    if samples.is_empty() {
        return Err(SplitError::EmptyInput);
    }
    let mut ids = BTreeSet::new();
    for sample in &samples {
        if !ids.insert(sample.id.clone()) {
            return Err(SplitError::DuplicateId {
                id: sample.id.clone(),
            });
        }
    }

    let mut groups: BTreeMap<Vec<String>, Vec<Sample>> = BTreeMap::new();
    for sample in samples {
        groups
            .entry(stratum_of(&sample, &spec.strata_keys))
            .or_default()
            .push(sample);
    }

    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    let mut strata = BTreeMap::new();
    let mut warnings = Vec::new();

    for (key, mut members) in groups {
        let label = if key.is_empty() {
            "(all)".to_string()
        } else {
            key.join("|")
        };
        let n = members.len();

        if n < 3 {
            warnings.push(format!(
                "stratum {label:?} has only {n} sample(s); assigned whole to train"
            ));
            strata.insert(
                label,
                StratumCounts {
                    n,
                    train: n,
                    val: 0,
                    test: 0,
                },
            );
            train.append(&mut members);
            continue;
        }

        members.sort_by_cached_key(|s| (stable_rank(spec.seed, RNG_DOMAIN, &s.id), s.id.clone()));
        let [q_train, q_val, _] = quotas(n, spec.ratios);
        let mut iter = members.into_iter();
        let mut counts = StratumCounts {
            n,
            train: 0,
            val: 0,
            test: 0,
        };
        for _ in 0..q_train {
            train.push(iter.next().expect("quota within n"));
            counts.train += 1;
        }
        for _ in 0..q_val {
            val.push(iter.next().expect("quota within n"));
            counts.val += 1;
        }
        for sample in iter {
            test.push(sample);
            counts.test += 1;
        }
        strata.insert(label, counts);
    }

    for part in [&mut train, &mut val, &mut test] {
        part.sort_by(|a, b| a.id.cmp(&b.id));
    }

    Ok(SplitOutcome {
        train,
        val,
        test,
        strata,
        warnings,
    })
}
