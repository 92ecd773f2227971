//! Batch experiments: every policy decoded from every state of every chain.
//!
//! Outputs, written to the output directory:
//!
//! * `per_state.csv`: `chain,state,policy,logprob,geomean`, sorted by
//!   `(chain, state, policy)`;
//! * `aggregate.csv`: `policy,avg_geomean,recovery_pct`, sorted by policy;
//! * `manifest.txt`: the canonical config (usable as a config file to rerun
//!   the experiment), the chain seeds, and per-policy timing and cost totals
//!   as comments.
//!
//! The CSV bytes depend only on the config, never on the thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chainroll::metrics::{geo_mean, RecoveryReport, StateResult};
use chainroll::{
    decode_chain, generate_chain, optimal_tables, optimal_trajectory, CostCounters, Decoder,
    Policy, StateId, TransitionModel,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ChainSource, ExperimentConfig};

pub const PER_STATE_CSV: &str = "per_state.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("output directory {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("chain file {path}: {source}")]
    ChainFile {
        path: PathBuf,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Chain(#[from] chainroll::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStats {
    pub policy: String,
    pub elapsed: Duration,
    pub cost: CostCounters,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: RecoveryReport,
    pub stats: Vec<PolicyStats>,
    pub per_state_csv: String,
    pub aggregate_csv: String,
    pub manifest: String,
}

struct TaskResult {
    rows: Vec<StateResult>,
    elapsed: Duration,
    cost: CostCounters,
}

fn load_chains(config: &ExperimentConfig) -> Result<Vec<TransitionModel>, ExperimentError> {
    match &config.chains {
        ChainSource::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| ExperimentError::ChainFile {
                path: path.clone(),
                source: Box::new(e),
            })?;
            let model = decode_chain(&text).map_err(|e| ExperimentError::ChainFile {
                path: path.clone(),
                source: Box::new(e),
            })?;
            Ok(vec![model])
        }
        ChainSource::Generated { .. } => config
            .gen_specs()
            .par_iter()
            .map(|spec| generate_chain(spec).map_err(ExperimentError::from))
            .collect(),
    }
}

fn run_task(
    model: &TransitionModel,
    chain: usize,
    policy: &Policy,
    horizon: usize,
) -> chainroll::Result<TaskResult> {
    let started = Instant::now();
    let label = policy.to_string();
    let mut rows = Vec::with_capacity(model.state_count());
    let mut cost = CostCounters::default();
    let mut push = |x: usize, states: &[StateId]| -> chainroll::Result<()> {
        let log_prob = model.trajectory_logprob(StateId(x), states)?;
        rows.push(StateResult {
            chain,
            state: x,
            policy: label.clone(),
            log_prob,
            geo_mean: geo_mean(log_prob, horizon)?,
        });
        Ok(())
    };
    match policy {
        Policy::Optimal => {
            let table = optimal_tables(model, horizon)?;
            cost += table.cost();
            for x in 0..model.state_count() {
                let t = optimal_trajectory(model, StateId(x), horizon, &table)?;
                push(x, &t.states)?;
            }
        }
        _ => {
            let mut decoder = Decoder::new(model, horizon, policy)?;
            for x in 0..model.state_count() {
                let (t, c) = decoder.decode(&StateId(x))?;
                cost += c;
                push(x, &t.states)?;
            }
        }
    }
    Ok(TaskResult {
        rows,
        elapsed: started.elapsed(),
        cost,
    })
}

pub fn per_state_csv(report: &RecoveryReport) -> String {
    let mut out = String::from("chain,state,policy,logprob,geomean\n");
    for r in &report.per_state {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.chain,
            r.state,
            r.policy,
            r.log_prob.value(),
            r.geo_mean
        );
    }
    out
}

pub fn aggregate_csv(report: &RecoveryReport) -> String {
    let mut out = String::from("policy,avg_geomean,recovery_pct\n");
    for s in &report.aggregates {
        let recovery = s.recovery.map(|r| r.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", s.policy, s.avg_geo_mean, recovery);
    }
    out
}

fn manifest(config: &ExperimentConfig, stats: &[PolicyStats]) -> String {
    let mut out = String::from(
        "# chainroll experiment manifest; rerun with `chainroll exp --config <this file>`\n",
    );
    out.push_str(&config.render());
    let seeds: Vec<String> = config
        .gen_specs()
        .iter()
        .map(|s| s.seed.to_string())
        .collect();
    if !seeds.is_empty() {
        let _ = writeln!(out, "# chain seeds: {}", seeds.join(" "));
    }
    for s in stats {
        let _ = writeln!(
            out,
            "# {}: elapsed_ms={:.3} comparisons={} base_policy_steps={}",
            s.policy,
            s.elapsed.as_secs_f64() * 1e3,
            s.cost.comparisons,
            s.cost.base_policy_steps
        );
    }
    out
}

/// Runs the experiment without touching the filesystem beyond reading a
/// chain file.
pub fn evaluate(config: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()?;
    pool.install(|| {
        let chains = load_chains(config)?;
        let tasks: Vec<(usize, &Policy)> = (0..chains.len())
            .flat_map(|c| config.policies.iter().map(move |p| (c, p)))
            .collect();
        let results: Vec<TaskResult> = tasks
            .par_iter()
            .map(|&(c, p)| run_task(&chains[c], c, p, config.horizon))
            .collect::<chainroll::Result<_>>()?;

        let mut stats: Vec<PolicyStats> = config
            .policies
            .iter()
            .map(|p| PolicyStats {
                policy: p.to_string(),
                elapsed: Duration::ZERO,
                cost: CostCounters::default(),
            })
            .collect();
        let mut rows = Vec::new();
        for (&(_, policy), result) in tasks.iter().zip(results) {
            let i = config
                .policies
                .iter()
                .position(|p| p == policy)
                .expect("configured policy");
            stats[i].elapsed += result.elapsed;
            stats[i].cost += result.cost;
            rows.extend(result.rows);
        }
        let mut report = RecoveryReport::from_results(rows, config.horizon)?;
        if !config.recovery {
            for s in &mut report.aggregates {
                s.recovery = None;
            }
        }
        Ok(ExperimentOutput {
            per_state_csv: per_state_csv(&report),
            aggregate_csv: aggregate_csv(&report),
            manifest: manifest(config, &stats),
            report,
            stats,
        })
    })
}

/// Runs the experiment and writes its CSVs and manifest into `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExperimentOutput, ExperimentError> {
    let io_err = |source| ExperimentError::Output {
        path: out_dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(out_dir).map_err(io_err)?;
    // Fail on an unwritable directory before spending time decoding.
    fs::write(out_dir.join(MANIFEST), config.render()).map_err(io_err)?;
    let output = evaluate(config)?;
    fs::write(out_dir.join(PER_STATE_CSV), &output.per_state_csv).map_err(io_err)?;
    fs::write(out_dir.join(AGGREGATE_CSV), &output.aggregate_csv).map_err(io_err)?;
    fs::write(out_dir.join(MANIFEST), &output.manifest).map_err(io_err)?;
    Ok(output)
}
