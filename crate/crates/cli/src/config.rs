//! Experiment configuration: a flat `key = value` document.
//!
//! ```text
//! # 50 chains, 100 states, 5% branching
//! chains = 50
//! states = 100
//! out_degree = 5
//! seed = 1
//! horizon = 100
//! policies = greedy, optimal, rollout_l1, rollout_l1_m10
//! recovery = true
//! ```
//!
//! | key          | meaning                                                     | default  |
//! |--------------|-------------------------------------------------------------|----------|
//! | `chains`     | number of generated chains; chain `c` uses seed `seed + c`  | 1        |
//! | `states`     | states per generated chain                                  | required |
//! | `out_degree` | successors per state                                        | required |
//! | `seed`       | seed of chain 0                                             | 0        |
//! | `self_loops` | allow `x -> x` transitions in generated chains              | true     |
//! | `chain_file` | use this chain file instead of generating (`chains` = 1)    | none     |
//! | `horizon`    | sequence length `N`                                         | required |
//! | `policies`   | comma-separated policy labels                               | required |
//! | `recovery`   | report percentage recovery (needs `greedy` and `optimal`)   | false    |
//! | `threads`    | worker threads, 0 for one per core                          | 0        |
//!
//! Lines starting with `#` are comments; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use chainroll::{GenSpec, Policy};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key {0:?}")]
    Missing(&'static str),
    #[error("key {key:?}: {message}")]
    Value { key: String, message: String },
    #[error("recovery requires both the greedy and the optimal policy")]
    RecoveryWithoutBaseline,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChainSource {
    Generated {
        count: usize,
        states: usize,
        out_degree: usize,
        seed: u64,
        self_loops: bool,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub chains: ChainSource,
    pub horizon: usize,
    pub policies: Vec<Policy>,
    pub recovery: bool,
    pub threads: usize,
}

const KEYS: &[&str] = &[
    "chains",
    "states",
    "out_degree",
    "seed",
    "self_loops",
    "chain_file",
    "horizon",
    "policies",
    "recovery",
    "threads",
];

fn value<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &'static str,
) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| {
            v.parse::<T>().map_err(|e| ConfigError::Value {
                key: key.into(),
                message: e.to_string(),
            })
        })
        .transpose()
}

fn required<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &'static str,
) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value(map, key)?.ok_or(ConfigError::Missing(key))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, val) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("unknown key {key:?}"),
                });
            }
            if map
                .insert(key.to_string(), val.trim().to_string())
                .is_some()
            {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }

        let chains = match map.get("chain_file") {
            Some(path) => {
                if value::<usize>(&map, "chains")?.is_some_and(|c| c != 1) {
                    return Err(ConfigError::Value {
                        key: "chains".into(),
                        message: "must be 1 with chain_file".into(),
                    });
                }
                ChainSource::File(PathBuf::from(path))
            }
            None => {
                let source = ChainSource::Generated {
                    count: value(&map, "chains")?.unwrap_or(1),
                    states: required(&map, "states")?,
                    out_degree: required(&map, "out_degree")?,
                    seed: value(&map, "seed")?.unwrap_or(0),
                    self_loops: value(&map, "self_loops")?.unwrap_or(true),
                };
                if let ChainSource::Generated { count: 0, .. } = source {
                    return Err(ConfigError::Value {
                        key: "chains".into(),
                        message: "must be at least 1".into(),
                    });
                }
                source
            }
        };

        let horizon: usize = required(&map, "horizon")?;
        if horizon == 0 {
            return Err(ConfigError::Value {
                key: "horizon".into(),
                message: "must be at least 1".into(),
            });
        }
        let labels: String = required(&map, "policies")?;
        let mut policies = Vec::new();
        for label in labels.split(',').map(str::trim).filter(|l| !l.is_empty()) {
            let p: Policy = label
                .parse()
                .map_err(|e: chainroll::Error| ConfigError::Value {
                    key: "policies".into(),
                    message: e.to_string(),
                })?;
            if policies.contains(&p) {
                return Err(ConfigError::Value {
                    key: "policies".into(),
                    message: format!("{label} listed twice"),
                });
            }
            policies.push(p);
        }
        if policies.is_empty() {
            return Err(ConfigError::Missing("policies"));
        }
        let recovery = value(&map, "recovery")?.unwrap_or(false);
        if recovery && !(policies.contains(&Policy::Greedy) && policies.contains(&Policy::Optimal))
        {
            return Err(ConfigError::RecoveryWithoutBaseline);
        }
        Ok(ExperimentConfig {
            chains,
            horizon,
            policies,
            recovery,
            threads: value(&map, "threads")?.unwrap_or(0),
        })
    }

    /// Generator specs for every chain, in chain order. Empty for a chain file.
    pub fn gen_specs(&self) -> Vec<GenSpec> {
        match &self.chains {
            ChainSource::File(_) => Vec::new(),
            ChainSource::Generated {
                count,
                states,
                out_degree,
                seed,
                self_loops,
            } => (0..*count as u64)
                .map(|c| GenSpec {
                    state_count: *states,
                    out_degree: *out_degree,
                    seed: seed.wrapping_add(c),
                    allow_self_loops: *self_loops,
                })
                .collect(),
        }
    }

    /// Canonical rendering; [`ExperimentConfig::parse`] reads it back to an
    /// equal config.
    pub fn render(&self) -> String {
        let mut out = String::new();
        match &self.chains {
            ChainSource::Generated {
                count,
                states,
                out_degree,
                seed,
                self_loops,
            } => {
                let _ = writeln!(out, "chains = {count}");
                let _ = writeln!(out, "states = {states}");
                let _ = writeln!(out, "out_degree = {out_degree}");
                let _ = writeln!(out, "seed = {seed}");
                let _ = writeln!(out, "self_loops = {self_loops}");
            }
            ChainSource::File(path) => {
                let _ = writeln!(out, "chain_file = {}", path.display());
            }
        }
        let _ = writeln!(out, "horizon = {}", self.horizon);
        let labels: Vec<String> = self.policies.iter().map(Policy::to_string).collect();
        let _ = writeln!(out, "policies = {}", labels.join(", "));
        let _ = writeln!(out, "recovery = {}", self.recovery);
        let _ = writeln!(out, "threads = {}", self.threads);
        out
    }
}
