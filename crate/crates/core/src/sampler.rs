//! Stochastic tool-context sampling.
//!
//! Training prompts offer each sample a small slice of the inventory rather
//! than the whole catalog. For positives the gold tool is always included and
//! the remaining slots are filled with distractors drawn uniformly without
//! replacement; for negatives the whole slice is a uniform subset. The final
//! ordering is a uniform random permutation, so no position systematically
//! holds the answer. All draws come from [`crate::hashing::keyed_rng`], which
//! makes the offered slice a pure function of (seed, epoch, sample id,
//! inventory).

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::hashing::keyed_rng;
use crate::schema::{Sample, ToolSchema};

/// Domain tag mixed into the RNG key for this operation.
const RNG_DOMAIN: &str = "sample_tools";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Number of tools offered to each sample.
    pub k: usize,
    pub seed: u64,
    /// Bump to redraw fresh contexts for another training epoch.
    pub epoch: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            k: 5,
            seed: 0,
            epoch: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SamplerError {
    #[error("k = {k} is outside 1..={available} (inventory size)")]
    InvalidK { k: usize, available: usize },
    #[error("sample {id:?} requires a function but carries no target call")]
    MissingTarget { id: String },
    #[error("sample {id:?} targets {tool:?}, which is not in the inventory")]
    GoldNotInInventory { id: String, tool: String },
}

/// Draws the tool slice offered to one sample.
///
/// The first `m` slots of a partial Fisher-Yates pass are a uniform ordered
/// arrangement of an m-subset, which covers negatives directly. Positives
/// select `k - 1` distractors from the non-gold pool the same way, append
/// the gold tool, and shuffle, which is again uniform over orderings of the
/// selected set.
pub fn sample_tools(
    sample: &Sample,
    inventory: &[ToolSchema],
    config: &SamplerConfig,
) -> Result<Vec<ToolSchema>, SamplerError> {
    if config.k == 0 || config.k > inventory.len() {
        return Err(SamplerError::InvalidK {
            k: config.k,
            available: inventory.len(),
        });
    }

    let mut rng = keyed_rng(config.seed, RNG_DOMAIN, config.epoch, &sample.id);

    let chosen: Vec<usize> = if sample.requires_function {
        let target = sample.target.as_ref().ok_or_else(|| SamplerError::MissingTarget {
            id: sample.id.clone(),
        })?;
        let gold = inventory
            .iter()
            .position(|t| t.name == target.tool_name)
            .ok_or_else(|| SamplerError::GoldNotInInventory {
                id: sample.id.clone(),
                tool: target.tool_name.clone(),
            })?;
        let mut pool: Vec<usize> = (0..inventory.len()).filter(|&i| i != gold).collect();
        let mut picked = take_prefix(&mut pool, config.k - 1, &mut rng);
        picked.push(gold);
        picked.shuffle(&mut rng);
        picked
    } else {
        let mut pool: Vec<usize> = (0..inventory.len()).collect();
        take_prefix(&mut pool, config.k, &mut rng)
    };

    Ok(chosen.into_iter().map(|i| inventory[i].clone()).collect())
}

/// Partial Fisher-Yates: moves a uniform ordered m-arrangement of `pool`
/// into the prefix and returns it.
fn take_prefix<R: Rng>(pool: &mut [usize], m: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(m <= pool.len());
    for i in 0..m {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool[..m].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Dialect, ToolCall};
    use alloc::collections::BTreeMap;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn tool(name: &str) -> ToolSchema {
        ToolSchema {
            name: name.to_string(),
            description: format!("أداة {name}"),
            parameters: vec![],
        }
    }

    fn inventory(n: usize) -> Vec<ToolSchema> {
        (0..n).map(|i| tool(&format!("tool_{i:02}"))).collect()
    }

    fn positive(id: &str, gold: &str) -> Sample {
        Sample {
            id: id.to_string(),
            query: "استعلام".to_string(),
            dialect: Dialect::Gulf,
            domain: "utilities".to_string(),
            requires_function: true,
            target: Some(ToolCall {
                tool_name: gold.to_string(),
                arguments: BTreeMap::new(),
            }),
            timestamp: None,
        }
    }

    fn negative(id: &str) -> Sample {
        Sample {
            id: id.to_string(),
            query: "سؤال عام".to_string(),
            dialect: Dialect::Egyptian,
            domain: "chitchat".to_string(),
            requires_function: false,
            target: None,
            timestamp: None,
        }
    }

    #[test]
    fn gold_tool_always_offered_to_positives() {
        let inv = inventory(12);
        let config = SamplerConfig { k: 5, seed: 9, epoch: 0 };
        for i in 0..500 {
            let s = positive(&format!("p-{i}"), "tool_07");
            let offered = sample_tools(&s, &inv, &config).unwrap();
            assert_eq!(offered.len(), 5);
            assert!(offered.iter().any(|t| t.name == "tool_07"));
            let mut names: Vec<_> = offered.iter().map(|t| t.name.clone()).collect();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), 5, "offered tools must be distinct");
        }
    }

    #[test]
    fn negatives_get_a_plain_subset() {
        let inv = inventory(12);
        let config = SamplerConfig { k: 4, seed: 9, epoch: 0 };
        let offered = sample_tools(&negative("n-0"), &inv, &config).unwrap();
        assert_eq!(offered.len(), 4);
    }

    #[test]
    fn draw_is_deterministic_per_identity() {
        let inv = inventory(20);
        let config = SamplerConfig { k: 5, seed: 1234, epoch: 3 };
        let s = positive("p-77", "tool_02");
        let a = sample_tools(&s, &inv, &config).unwrap();
        let b = sample_tools(&s, &inv, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn epoch_and_seed_redraw_contexts() {
        let inv = inventory(20);
        let s = positive("p-77", "tool_02");
        let base = SamplerConfig { k: 5, seed: 1234, epoch: 0 };
        let a = sample_tools(&s, &inv, &base).unwrap();
        let names = |v: &[ToolSchema]| v.iter().map(|t| t.name.clone()).collect::<Vec<_>>();
        let mut redraws = 0;
        for config in [
            SamplerConfig { epoch: 1, ..base },
            SamplerConfig { seed: 1235, ..base },
        ] {
            let b = sample_tools(&s, &inv, &config).unwrap();
            if names(&a) != names(&b) {
                redraws += 1;
            }
        }
        assert!(redraws > 0, "new seed and new epoch both reproduced the draw");
    }

    #[test]
    fn k_bounds_are_enforced() {
        let inv = inventory(4);
        let s = negative("n-1");
        let too_big = SamplerConfig { k: 5, seed: 0, epoch: 0 };
        assert!(matches!(
            sample_tools(&s, &inv, &too_big),
            Err(SamplerError::InvalidK { k: 5, available: 4 })
        ));
        let zero = SamplerConfig { k: 0, seed: 0, epoch: 0 };
        assert!(matches!(sample_tools(&s, &inv, &zero), Err(SamplerError::InvalidK { .. })));
        let all = SamplerConfig { k: 4, seed: 0, epoch: 0 };
        assert_eq!(sample_tools(&s, &inv, &all).unwrap().len(), 4);
    }

    #[test]
    fn missing_gold_is_an_error() {
        let inv = inventory(4);
        let config = SamplerConfig::default();
        let ghost = positive("p-9", "tool_99");
        assert!(matches!(
            sample_tools(&ghost, &inv, &SamplerConfig { k: 3, ..config }),
            Err(SamplerError::GoldNotInInventory { .. })
        ));
        let mut broken = positive("p-10", "tool_00");
        broken.target = None;
        assert!(matches!(
            sample_tools(&broken, &inv, &SamplerConfig { k: 3, ..config }),
            Err(SamplerError::MissingTarget { .. })
        ));
    }

    #[test]
    fn k_equal_one_offers_exactly_the_gold_tool() {
        let inv = inventory(6);
        let s = positive("p-1", "tool_03");
        let config = SamplerConfig { k: 1, seed: 5, epoch: 0 };
        let offered = sample_tools(&s, &inv, &config).unwrap();
        assert_eq!(offered.len(), 1);
        assert_eq!(offered[0].name, "tool_03");
    }
}
