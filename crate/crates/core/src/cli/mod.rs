//! The `autobid` command line.
//!
//! Every subcommand reads an optional JSON config (`--config`), applies flag
//! overrides, and writes its outputs plus a `manifest.json` under `--out`
//! (default `out/<subcommand>`). A manifest passed back as `--config`
//! replays the run.
//!
//! Exit codes: 0 success, 1 invalid input or a failed check, 2 a solve that
//! did not converge (its outputs are still written).

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;
use crate::exact::MiblpObjective;
use crate::experiments::AdSideSpec;
use crate::instance::{Family, ValueDistribution};

pub use commands::{Outcome, RunManifest, MANIFEST_FILE};
pub use config::*;

/// Environment variable fixing the worker thread count.
pub const THREADS_ENV: &str = "AUTOBID_THREADS";

#[derive(Debug, Parser)]
#[command(name = "autobid", version, about = "Auto-bidding equilibria in second-price auction markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config, or a manifest.json to replay.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: out/<subcommand>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = kebab::<Family>)]
        family: Option<Family>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_parser = kebab::<ValueDistribution>)]
        distribution: Option<ValueDistribution>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        auctions_per_episode: Option<usize>,
    },
    /// Run better-response dynamics and certify the result.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        cap: Option<f64>,
        #[arg(long)]
        residual_tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Certify a candidate equilibrium.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        candidate: Option<PathBuf>,
        #[arg(long)]
        cap: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Enumerate every equilibrium of a tiny market exactly.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Exact decimal cap.
        #[arg(long)]
        cap: Option<String>,
    },
    /// Write the bilevel model as an LP file.
    ExportMiblp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, value_parser = kebab::<MiblpObjective>)]
        objective: Option<MiblpObjective>,
        #[arg(long)]
        cap: Option<f64>,
        /// Candidate to encode as solution.json.
        #[arg(long)]
        candidate: Option<PathBuf>,
    },
    /// Check a model solution and the equilibrium it encodes.
    VerifySolution {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        cap: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Value gaps across equilibria found by multi-start.
    ExpInstability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Response of values and revenue to target changes.
    ExpSensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<SensitivityMode>,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        magnitude: Option<f64>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Revenue of each network as one network raises its reserve.
    ExpReserve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
    },
    /// Traffic-split A/B test of an auction change.
    ExpUserAb {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        traffic: Option<f64>,
    },
    /// A/B test of autobidder controllers under three designs.
    ExpAdAb {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
        /// Use the large simulation sizes.
        #[arg(long)]
        paper_scale: bool,
    },
}

fn kebab<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(x) = flag {
        *slot = x;
    }
}

/// Loads the config, applies overrides, runs the body and writes the
/// manifest.
fn execute<C: Serialize + DeserializeOwned + Default>(
    name: &'static str,
    common: Common,
    seed_of: fn(&mut C) -> &mut u64,
    apply: impl FnOnce(&mut C),
    body: fn(&C, &mut commands::Run) -> Result<Outcome>,
) -> Result<Outcome> {
    let mut cfg: C = load_config(common.config.as_deref(), name)?;
    apply(&mut cfg);
    set(seed_of(&mut cfg), common.seed);
    let seed = *seed_of(&mut cfg);
    let out = common.out.unwrap_or_else(|| PathBuf::from("out").join(name));
    let mut run = commands::Run::new(name, seed, &cfg, out)?;
    let outcome = body(&cfg, &mut run)?;
    run.finish()?;
    Ok(outcome)
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Gen {
            common,
            family,
            n,
            m,
            distribution,
            sigma,
            auctions_per_episode,
        } => execute(
            "gen",
            common,
            |c: &mut GenConfig| &mut c.seed,
            |c| {
                let g = &mut c.generator;
                set(&mut g.family, family);
                set(&mut g.n, n);
                set(&mut g.m, m);
                set(&mut g.distribution, distribution);
                if sigma.is_some() {
                    g.sigma = sigma;
                }
                if auctions_per_episode.is_some() {
                    g.auctions_per_episode = auctions_per_episode;
                }
            },
            commands::gen,
        ),
        Command::Solve {
            common,
            instance,
            cap,
            residual_tol,
            max_iters,
        } => execute(
            "solve",
            common,
            |c: &mut SolveConfig| &mut c.seed,
            |c| {
                if instance.is_some() {
                    c.instance = instance;
                }
                set(&mut c.market.cap, cap);
                set(&mut c.iter.residual_tol, residual_tol);
                if max_iters.is_some() {
                    c.iter.max_iters = max_iters;
                }
            },
            commands::solve_cmd,
        ),
        Command::Check {
            common,
            instance,
            candidate,
            cap,
            tolerance,
        } => execute(
            "check",
            common,
            |c: &mut CheckConfig| &mut c.seed,
            |c| {
                if instance.is_some() {
                    c.instance = instance;
                }
                if candidate.is_some() {
                    c.candidate = candidate;
                }
                set(&mut c.market.cap, cap);
                set(&mut c.tolerance, tolerance);
            },
            commands::check,
        ),
        Command::Oracle { common, instance, cap } => execute(
            "oracle",
            common,
            |c: &mut OracleConfig| &mut c.seed,
            |c| {
                if instance.is_some() {
                    c.instance = instance;
                }
                set(&mut c.cap, cap);
            },
            commands::oracle,
        ),
        Command::ExportMiblp {
            common,
            instance,
            objective,
            cap,
            candidate,
        } => execute(
            "export-miblp",
            common,
            |c: &mut ExportConfig| &mut c.seed,
            |c| {
                if instance.is_some() {
                    c.instance = instance;
                }
                set(&mut c.objective, objective);
                set(&mut c.market.cap, cap);
                if candidate.is_some() {
                    c.candidate = candidate;
                }
            },
            commands::export,
        ),
        Command::VerifySolution {
            common,
            instance,
            solution,
            cap,
            tolerance,
        } => execute(
            "verify-solution",
            common,
            |c: &mut VerifyConfig| &mut c.seed,
            |c| {
                if instance.is_some() {
                    c.instance = instance;
                }
                if solution.is_some() {
                    c.solution = solution;
                }
                set(&mut c.market.cap, cap);
                set(&mut c.tolerance, tolerance);
            },
            commands::verify,
        ),
        Command::ExpInstability { common, count, n, m } => execute(
            "exp-instability",
            common,
            |c: &mut InstabilityConfig| &mut c.seed,
            |c| {
                set(&mut c.count, count);
                set(&mut c.n, n);
                set(&mut c.m, m);
            },
            commands::instability,
        ),
        Command::ExpSensitivity {
            common,
            mode,
            instance,
            magnitude,
            top_k,
        } => execute(
            "exp-sensitivity",
            common,
            |c: &mut SensitivityConfig| &mut c.seed,
            |c| {
                set(&mut c.mode, mode);
                if instance.is_some() {
                    c.instance = instance;
                }
                set(&mut c.magnitude, magnitude);
                set(&mut c.top_k, top_k);
            },
            commands::sensitivity,
        ),
        Command::ExpReserve { common, instance, target } => execute(
            "exp-reserve",
            common,
            |c: &mut ReserveConfig| &mut c.seed,
            |c| {
                if instance.is_some() {
                    c.instance = instance;
                }
                set(&mut c.target, target);
            },
            commands::reserve,
        ),
        Command::ExpUserAb {
            common,
            instance,
            replicates,
            traffic,
        } => execute(
            "exp-user-ab",
            common,
            |c: &mut UserAbConfig| &mut c.seed,
            |c| {
                if instance.is_some() {
                    c.instance = instance;
                }
                set(&mut c.ab.replicates, replicates);
                set(&mut c.ab.traffic, traffic);
            },
            commands::user_ab,
        ),
        Command::ExpAdAb {
            common,
            runs,
            paper_scale,
        } => execute(
            "exp-ad-ab",
            common,
            |c: &mut AdAbConfig| &mut c.seed,
            |c| {
                if paper_scale {
                    c.spec = AdSideSpec::paper_scale(c.seed);
                }
                set(&mut c.spec.runs, runs);
            },
            commands::ad_ab,
        ),
    }
}

fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|s| s.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    init_threads();
    match dispatch(cli.command) {
        Ok(outcome) => outcome.code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
