//! Experiment runner: parses a TOML config, dispatches a subcommand on a
//! sized thread pool, and writes CSV/JSON/SVG artifacts plus `MANIFEST.toml`.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::cache::Cache;
use crate::commands::Outcome;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::{write_all, Artifact, Manifest};

#[derive(Debug, Parser)]
#[command(name = "loopmetric", version, about = "Numerical experiments on free graph algebras and their Lip-norms")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// TOML experiment configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cache directory (overrides `cache` in the config)
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Random seed (overrides `seed` in the config)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Neither read nor write the cache
    #[arg(long, global = true)]
    pub no_cache: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Graph checks
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
    /// Loop enumeration
    Loops {
        #[command(subcommand)]
        action: LoopsAction,
    },
    /// Wick word construction and consistency
    Wick {
        #[command(subcommand)]
        action: WickAction,
    },
    /// Lip-norm estimates
    Lip {
        #[command(subcommand)]
        action: LipAction,
    },
    /// Block bound sweep
    Haagerup {
        #[command(subcommand)]
        action: SweepAction,
    },
    /// Tail and filtration estimates
    Tail {
        #[command(subcommand)]
        action: SweepAction,
    },
    /// Convergence experiment for a graph family
    Converge {
        #[command(subcommand)]
        action: ConvergeAction,
    },
    /// Temperley-Lieb-Jones identities
    Tlj {
        #[command(subcommand)]
        action: TljAction,
    },
    /// Theta-summability partial sums
    Theta {
        #[command(subcommand)]
        action: ThetaAction,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum GraphAction {
    Validate,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum LoopsAction {
    Enumerate,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum WickAction {
    Build,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum LipAction {
    Compute,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SweepAction {
    Sweep,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum ConvergeAction {
    Run,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum TljAction {
    Check,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum ThetaAction {
    Sum,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Graph { .. } => "graph validate",
            Command::Loops { .. } => "loops enumerate",
            Command::Wick { .. } => "wick build",
            Command::Lip { .. } => "lip compute",
            Command::Haagerup { .. } => "haagerup sweep",
            Command::Tail { .. } => "tail sweep",
            Command::Converge { .. } => "converge run",
            Command::Tlj { .. } => "tlj check",
            Command::Theta { .. } => "theta sum",
        }
    }
}

/// Loads the config and applies command-line overrides.
pub fn resolve_config(opts: &GlobalOpts) -> CliResult<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.output = out.clone();
    }
    if let Some(cache) = &opts.cache {
        cfg.cache = cache.clone();
    }
    if opts.threads == Some(0) {
        return Err(CliError::Config("--threads: must be positive".into()));
    }
    Ok(cfg)
}

fn dispatch(command: Command, cfg: &ExperimentConfig, cache: &mut Cache) -> CliResult<Outcome> {
    match command {
        Command::Graph { .. } => commands::graph_validate(cfg),
        Command::Loops { .. } => commands::loops_enumerate(cfg),
        Command::Wick { .. } => commands::wick_build(cfg, cache),
        Command::Lip { .. } => commands::lip_compute(cfg, cache),
        Command::Haagerup { .. } => commands::haagerup(cfg, cache),
        Command::Tail { .. } => commands::tail_sweep(cfg, cache),
        Command::Converge { .. } => commands::converge_run(cfg, cache),
        Command::Tlj { .. } => commands::tlj_check(cfg),
        Command::Theta { .. } => commands::theta(cfg),
    }
}

fn inputs_hash(cfg: &ExperimentConfig, inputs: &[String]) -> String {
    let mut h = Sha256::new();
    h.update(cfg.resolved_toml().as_bytes());
    for i in inputs {
        h.update([0]);
        h.update(i.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match resolve_config(&cli.opts) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let threads = cli.opts.threads.unwrap_or_else(rayon::current_num_threads);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}", CliError::Internal(e.to_string()));
            return 3;
        }
    };
    let mut cache = Cache::new((!cli.opts.no_cache).then(|| cfg.cache.clone()));
    let start = Instant::now();
    let result = pool.install(|| dispatch(cli.command, &cfg, &mut cache));
    let wall = start.elapsed().as_secs_f64();

    let (outcome, status, code) = match result {
        Ok(o) => match o.non_convergence.clone() {
            Some(msg) => (o, format!("non-convergence: {msg}"), 2),
            None => (o, "ok".to_string(), 0),
        },
        Err(CliError::NonConvergence(msg)) => {
            // Keep a record of the failed run next to the manifest.
            let mut o = Outcome::default();
            match Artifact::json("error.json", &serde_json::json!({ "command": cli.command.name(), "error": msg })) {
                Ok(a) => o.artifacts.push(a),
                Err(e) => eprintln!("error: {e}"),
            }
            (o, format!("non-convergence: {msg}"), 2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    for w in cache.warnings.iter().chain(&outcome.warnings) {
        eprintln!("warning: {w}");
    }
    let manifest = Manifest {
        command: cli.command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        inputs_hash: inputs_hash(&cfg, &outcome.inputs),
        wall_time_s: wall,
        threads,
        status: status.clone(),
        cache: outcome.cache.clone(),
        warnings: cache.warnings.iter().chain(&outcome.warnings).cloned().collect(),
        artifacts: outcome.artifacts.iter().map(|a| (a.name.clone(), a.sha256())).collect(),
        config: toml::from_str(&cfg.resolved_toml()).expect("resolved config parses"),
    };
    if let Err(e) = write_all(&cfg.output, &outcome.artifacts, &manifest) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    if code == 2 {
        eprintln!("{status}");
    }
    if !outcome.summary.is_empty() {
        println!("{}: {}", cli.command.name(), outcome.summary);
    }
    println!("artifacts written to {}", cfg.output.display());
    code
}
