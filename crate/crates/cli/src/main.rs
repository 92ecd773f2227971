use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chainroll::gen::generate_chain_file;
use chainroll::metrics::geo_mean;
use chainroll::provider::{self, InMemoryProvider, NextStateProvider, ProcessProvider, StateKey};
use chainroll::{
    brute_force_optimal, decode_chain, generate_chain, GenSpec, Policy, RolloutSpec, StateId,
    TransitionModel,
};
use chainroll_cli::{run_experiment, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chainroll",
    version,
    about = "Most likely sequences in Markov chains via rollout"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random sparse chain file.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode one sequence under a policy.
    Decode(DecodeArgs),
    /// Exact most likely sequence by enumerating every path.
    Oracle {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value = "0")]
        start: usize,
        #[arg(long)]
        horizon: usize,
    },
    /// Run a batch experiment described by a config file.
    Exp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's thread count.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Answer successor queries for a chain file on stdin/stdout.
    Serve {
        #[arg(long)]
        chain: PathBuf,
        /// Exit after answering this many requests.
        #[arg(long)]
        exit_after: Option<usize>,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    states: usize,
    #[arg(long)]
    out_degree: usize,
    #[arg(long, default_value = "0")]
    seed: u64,
    /// Forbid x -> x transitions.
    #[arg(long)]
    no_self_loops: bool,
}

impl GenArgs {
    fn spec(&self) -> GenSpec {
        GenSpec {
            allow_self_loops: !self.no_self_loops,
            ..GenSpec::new(self.states, self.out_degree, self.seed)
        }
    }
}

#[derive(Args)]
struct ChainArgs {
    /// Chain file to read.
    #[arg(long, conflicts_with_all = ["states", "out_degree"])]
    chain: Option<PathBuf>,
    /// Generate the chain instead: number of states.
    #[arg(long, requires = "out_degree")]
    states: Option<usize>,
    #[arg(long, requires = "states")]
    out_degree: Option<usize>,
    #[arg(long, default_value = "0")]
    seed: u64,
}

impl ChainArgs {
    fn load(&self) -> Result<TransitionModel> {
        if let Some(path) = &self.chain {
            return load_chain(path);
        }
        match (self.states, self.out_degree) {
            (Some(n), Some(q)) => Ok(generate_chain(&GenSpec::new(n, q, self.seed))?),
            _ => bail!("give --chain FILE or --states and --out-degree"),
        }
    }
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Query a provider process (a shell command) instead of a chain.
    #[arg(long, conflicts_with_all = ["chain", "states"])]
    provider: Option<String>,
    #[arg(long, default_value = "0")]
    start: String,
    #[arg(long)]
    horizon: usize,
    /// `greedy`, `optimal`, `rollout`, or a full label such as `rollout_l2_m10`.
    #[arg(long, default_value = "greedy")]
    policy: String,
    #[arg(long, default_value = "1")]
    lookahead: usize,
    /// Truncation depth, or `none`.
    #[arg(long, default_value = "none")]
    truncate: String,
    /// Candidate width, or `full`.
    #[arg(long, default_value = "full")]
    width: String,
    #[arg(long, default_value = "0")]
    level: usize,
}

fn optional(value: &str, absent: &str, flag: &str) -> Result<Option<usize>> {
    if value == absent {
        return Ok(None);
    }
    value
        .parse()
        .map(Some)
        .with_context(|| format!("--{flag} expects a number or {absent:?}"))
}

impl DecodeArgs {
    fn policy(&self) -> Result<Policy> {
        if self.policy != "rollout" {
            return Ok(self.policy.parse()?);
        }
        let mut spec = RolloutSpec::with_lookahead(self.lookahead).level(self.level);
        if let Some(m) = optional(&self.truncate, "none", "truncate")? {
            spec = spec.truncate(m);
        }
        if let Some(w) = optional(&self.width, "full", "width")? {
            spec = spec.width(w);
        }
        spec.validate()?;
        Ok(Policy::Rollout(spec))
    }
}

fn load_chain(path: &PathBuf) -> Result<TransitionModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    decode_chain(&text).with_context(|| format!("parsing {}", path.display()))
}

fn decode_cmd(args: &DecodeArgs) -> Result<()> {
    let policy = args.policy()?;
    let start = StateKey::from(args.start.as_str());
    let provider: Box<dyn NextStateProvider> = match &args.provider {
        Some(cmd) => Box::new(ProcessProvider::spawn_shell(cmd)?),
        None => Box::new(InMemoryProvider::new(args.chain.load()?)),
    };
    let (traj, cost) =
        provider::decode_via_provider(provider.as_ref(), &start, args.horizon, &policy)?;
    let mut out = io::stdout().lock();
    writeln!(out, "policy: {policy}")?;
    writeln!(out, "states: {} {}", traj.start, traj.render_states())?;
    writeln!(out, "logprob: {}", traj.log_prob.value())?;
    writeln!(out, "geomean: {}", geo_mean(traj.log_prob, args.horizon)?)?;
    writeln!(out, "comparisons: {}", cost.comparisons)?;
    writeln!(out, "base_policy_steps: {}", cost.base_policy_steps)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { gen, out } => {
            let text = generate_chain_file(&gen.spec())?;
            match out {
                Some(path) => {
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
                }
                None => io::stdout().lock().write_all(text.as_bytes())?,
            }
        }
        Command::Decode(args) => decode_cmd(&args)?,
        Command::Oracle {
            chain,
            start,
            horizon,
        } => {
            let model = chain.load()?;
            let traj = brute_force_optimal(&model, StateId(start), horizon)?;
            let mut out = io::stdout().lock();
            writeln!(out, "states: {} {}", traj.start, traj.render_states())?;
            writeln!(out, "logprob: {}", traj.log_prob.value())?;
            writeln!(out, "geomean: {}", geo_mean(traj.log_prob, horizon)?)?;
        }
        Command::Exp {
            config,
            out,
            threads,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::parse(&text)
                .with_context(|| format!("config {}", config.display()))?;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            let output = run_experiment(&cfg, &out)?;
            io::stdout()
                .lock()
                .write_all(output.aggregate_csv.as_bytes())?;
        }
        Command::Serve { chain, exit_after } => {
            let provider = InMemoryProvider::new(load_chain(&chain)?);
            let stdin = io::stdin().lock();
            let stdout = BufWriter::new(io::stdout().lock());
            provider::protocol::serve(&provider, stdin, stdout, exit_after)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
