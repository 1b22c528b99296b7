//! Subcommand bodies. Each writes its data files and a `manifest.json`
//! into the output directory and returns the process outcome.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{encode_solution, enumerate_equilibria_tiny, export_miblp, verify_miblp_solution, OracleLimits};
use crate::experiments::{
    ad_side_study, instability_report, long_csv, network_reserve_externality, search_non_monotone,
    sensitivity_from, sensitivity_population, two_network_labels, user_side_ab, LongRecord,
};
use crate::instance::rng::child_seed;
use crate::instance::{format_instance, gen_correlated, load_instance, load_instance_exact};
use crate::iterative::{solve, SolveStatus};
use crate::market::{
    check_candidate, check_equilibrium, market_metrics, CandidateFile, MarketConfig, ValuationMatrix,
};
use crate::scalar::parse_decimal_exact;

use super::config::*;

/// How a command ended, mapped to the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A check, verification or export did not pass.
    Failed,
    /// The solver stopped without a certified equilibrium.
    NonConverged,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Failed => 1,
            Outcome::NonConverged => 2,
        }
    }
}

/// Provenance written next to every run's outputs. Replaying the run means
/// passing this file back as `--config`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Output directory plus the bookkeeping for its manifest.
pub struct Run {
    subcommand: &'static str,
    seed: u64,
    config: serde_json::Value,
    inputs: Vec<PathBuf>,
    dir: PathBuf,
    outputs: Vec<String>,
    started: Instant,
}

impl Run {
    pub fn new(subcommand: &'static str, seed: u64, config: &impl Serialize, dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Run {
            subcommand,
            seed,
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            dir,
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn finish(self) -> Result<()> {
        let manifest = RunManifest {
            subcommand: self.subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Invalid(format!("no {what} given")))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load(run: &mut Run, path: &Path) -> Result<ValuationMatrix> {
    run.input(path);
    load_instance(path)
}

/// The configured instance file, or else a generated one.
fn instance_or_generate(run: &mut Run, path: &Option<PathBuf>, generator: &GenParams, seed: u64) -> Result<ValuationMatrix> {
    match path {
        Some(p) => load(run, p),
        None => generator.spec(seed).generate(),
    }
}

#[derive(Serialize)]
struct Summary<'a, C: Serialize, R: Serialize> {
    experiment: &'a str,
    seed: u64,
    config: &'a C,
    report: R,
}

fn write_experiment<C: Serialize, R: Serialize>(
    run: &mut Run,
    experiment: &str,
    seed: u64,
    config: &C,
    report: R,
    records: &[LongRecord],
) -> Result<()> {
    run.write("records.csv", &long_csv(records))?;
    run.write_json(
        "summary.json",
        &Summary {
            experiment,
            seed,
            config,
            report,
        },
    )
}

pub fn gen(cfg: &GenConfig, run: &mut Run) -> Result<Outcome> {
    let v = cfg.generator.spec(cfg.seed).generate()?;
    run.write("instance.csv", &format_instance(&v))?;
    println!("{} bidders, {} goods, {} entries", v.n_bidders(), v.n_goods(), v.nnz());
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct SolveOutput {
    status: SolveStatus,
    iterations: usize,
    residual: f64,
    failing: Vec<&'static str>,
    candidate: CandidateFile,
    values: Vec<f64>,
    revenue: f64,
    welfare: f64,
    final_alpha: Vec<f64>,
}

pub fn solve_cmd(cfg: &SolveConfig, run: &mut Run) -> Result<Outcome> {
    let v = load(run, required(&cfg.instance, "instance")?)?;
    let res = solve(&v, &cfg.market, &cfg.iter)?;
    let c = &res.candidate;
    let metrics = market_metrics(&v, &c.allocation, &c.prices, &cfg.market);
    let out = SolveOutput {
        status: res.status,
        iterations: res.trace.iterations,
        residual: res.certificate.worst(),
        failing: res.certificate.failing_names(),
        candidate: c.to_file(),
        values: metrics.bidders.iter().map(|b| b.value).collect(),
        revenue: metrics.revenue,
        welfare: metrics.welfare,
        final_alpha: res.final_alpha.clone(),
    };
    run.write_json("result.json", &out)?;
    run.write_json("candidate.json", &out.candidate)?;
    run.write("metrics.csv", &metrics.to_csv())?;
    run.write("trace.jsonl", &res.trace.to_json_lines())?;
    println!(
        "{:?} after {} iterations, residual {:.3e}, revenue {}",
        res.status, out.iterations, out.residual, out.revenue
    );
    Ok(if res.converged() {
        Outcome::Success
    } else {
        Outcome::NonConverged
    })
}

pub fn check(cfg: &CheckConfig, run: &mut Run) -> Result<Outcome> {
    let v = load(run, required(&cfg.instance, "instance")?)?;
    let path = required(&cfg.candidate, "candidate")?;
    run.input(path);
    let file: CandidateFile = read_json(path)?;
    let (alpha, x, p) = file.into_parts(v.n_bidders(), v.n_goods())?;
    let cert = match &p {
        Some(p) => check_candidate(&v, &alpha, &x, p, &cfg.market, &cfg.tolerance)?,
        None => check_equilibrium(&v, &alpha, &x, &cfg.market, &cfg.tolerance)?,
    };
    run.write_json("certificate.json", &cert)?;
    if cert.pass {
        println!("pass");
        Ok(Outcome::Success)
    } else {
        println!("fail: {}", cert.failing_names().join(", "));
        Ok(Outcome::Failed)
    }
}

#[derive(Serialize)]
struct OracleClass {
    alpha: Vec<f64>,
    alpha_exact: Vec<String>,
    values: Vec<f64>,
    revenue: f64,
    welfare: f64,
    rational: bool,
    capped: Vec<bool>,
    roles: Vec<crate::exact::GoodRole>,
    scale_span: Option<(usize, f64, f64)>,
}

#[derive(Serialize)]
struct OracleOutput {
    structures: usize,
    cells: usize,
    equilibria: Vec<OracleClass>,
}

pub fn oracle(cfg: &OracleConfig, run: &mut Run) -> Result<Outcome> {
    let path = required(&cfg.instance, "instance")?;
    run.input(path);
    let v = load_instance_exact(path)?;
    let market = MarketConfig::with_cap(parse_decimal_exact(&cfg.cap)?);
    let limits = OracleLimits {
        max_bidders: cfg.max_bidders,
        max_goods: cfg.max_goods,
    };
    let report = enumerate_equilibria_tiny(&v, &market, &limits)?;
    let out = OracleOutput {
        structures: report.structures,
        cells: report.cells,
        equilibria: report
            .equilibria
            .iter()
            .map(|e| OracleClass {
                alpha: e.alpha_f64(),
                alpha_exact: e.alpha.0.iter().map(ToString::to_string).collect(),
                values: e.values.clone(),
                revenue: e.revenue,
                welfare: e.welfare,
                rational: e.rational,
                capped: e.capped.clone(),
                roles: e.roles.clone(),
                scale_span: e.scale_span,
            })
            .collect(),
    };
    run.write_json("equilibria.json", &out)?;
    println!("{} equilibrium classes", out.equilibria.len());
    Ok(Outcome::Success)
}

pub fn export(cfg: &ExportConfig, run: &mut Run) -> Result<Outcome> {
    let v = load(run, required(&cfg.instance, "instance")?)?;
    let model = match export_miblp(&v, &cfg.market, cfg.objective) {
        Err(e @ Error::Refused(_)) => {
            println!("{e}");
            return Ok(Outcome::Failed);
        }
        other => other?,
    };
    run.write("model.lp", &model.to_lp_string())?;
    if let Some(path) = &cfg.candidate {
        run.input(path);
        let file: CandidateFile = read_json(path)?;
        let (alpha, x, _) = file.into_parts(v.n_bidders(), v.n_goods())?;
        let sol = encode_solution(&v, &alpha, &x, &cfg.market)?;
        run.write_json("solution.json", &sol)?;
    }
    println!("{} rows, {} variables", model.rows.len(), model.variables().len());
    Ok(Outcome::Success)
}

pub fn verify(cfg: &VerifyConfig, run: &mut Run) -> Result<Outcome> {
    let v = load(run, required(&cfg.instance, "instance")?)?;
    let path = required(&cfg.solution, "solution")?;
    run.input(path);
    let sol: BTreeMap<String, f64> = read_json(path)?;
    let ver = verify_miblp_solution(&v, &cfg.market, &sol, &cfg.tolerance)?;
    run.write_json("verification.json", &ver)?;
    if ver.pass {
        println!("pass");
        Ok(Outcome::Success)
    } else {
        let mut failing: Vec<String> = ver.constraints.violated.clone();
        failing.extend(ver.certificate.failing_names().iter().map(|s| s.to_string()));
        println!("fail: {}", failing.join(", "));
        Ok(Outcome::Failed)
    }
}

pub fn instability(cfg: &InstabilityConfig, run: &mut Run) -> Result<Outcome> {
    let instances: Vec<ValuationMatrix> = if cfg.instances.is_empty() {
        if cfg.sigmas.is_empty() {
            return Err(Error::Invalid("no sigmas to generate instances with".into()));
        }
        (0..cfg.count)
            .map(|k| {
                let sigma = cfg.sigmas[k % cfg.sigmas.len()];
                gen_correlated(cfg.n, cfg.m, sigma, child_seed(cfg.seed, k as u64))
            })
            .collect::<Result<_>>()?
    } else {
        cfg.instances.iter().map(|p| load(run, p)).collect::<Result<_>>()?
    };
    let reports = instability_report(&instances, &cfg.market, &cfg.iter, cfg.dedup_tol, cfg.top_k)?;
    let records: Vec<LongRecord> = reports.iter().flat_map(|r| r.records("instability", cfg.seed)).collect();
    let multiple = reports.iter().filter(|r| r.equilibria > 1).count();
    println!("{multiple} of {} instances with several equilibria", reports.len());
    write_experiment(run, "instability", cfg.seed, cfg, &reports, &records)?;
    Ok(Outcome::Success)
}

pub fn sensitivity(cfg: &SensitivityConfig, run: &mut Run) -> Result<Outcome> {
    let seed = cfg.seed;
    match cfg.mode {
        SensitivityMode::Individual => {
            let v = instance_or_generate(run, &cfg.instance, &cfg.generator, seed)?;
            let base = solve(&v, &cfg.market, &cfg.iter)?;
            let bidders = cfg.bidders.clone().unwrap_or_else(|| (0..v.n_bidders()).collect());
            let jobs: Vec<(usize, f64)> = bidders
                .iter()
                .flat_map(|&i| cfg.factors.iter().map(move |&f| (i, f)))
                .collect();
            let found: Vec<_> = jobs
                .par_iter()
                .map(|&(i, f)| sensitivity_from(&v, &base, i, f, &cfg.market, &cfg.iter).map(|(r, _)| r))
                .collect::<Result<_>>()?;
            let records: Vec<LongRecord> = found.iter().flat_map(|r| r.records("sensitivity", seed)).collect();
            let certified = found.iter().filter(|r| r.certified()).count();
            println!("{certified} of {} responses certified", found.len());
            write_experiment(run, "sensitivity", seed, cfg, &found, &records)?;
        }
        SensitivityMode::Population => {
            let v = instance_or_generate(run, &cfg.instance, &cfg.generator, seed)?;
            let seeds: Vec<u64> = (0..cfg.perturbations as u64).map(|k| child_seed(seed, k)).collect();
            let report = sensitivity_population(&v, cfg.magnitude, cfg.top_k, &seeds, &cfg.market, &cfg.iter)?;
            let records = report.records("sensitivity");
            println!("median revenue change {:?}", report.revenue_changes.median);
            write_experiment(run, "sensitivity", seed, cfg, &report, &records)?;
        }
        SensitivityMode::Search => {
            let found = search_non_monotone(
                seed,
                cfg.search_instances,
                &cfg.search_factors,
                cfg.min_delta,
                &cfg.market,
                &cfg.iter,
            )?;
            let records = match &found {
                Some(w) => w.record.records("sensitivity", w.instance_seed),
                None => Vec::new(),
            };
            match &found {
                Some(w) => println!(
                    "bidder {} gains {:.4} after scaling by {} (instance seed {}, {} examined)",
                    w.record.bidder, w.record.delta, w.record.factor, w.instance_seed, w.examined
                ),
                None => println!("no witness in {} instances", cfg.search_instances),
            }
            write_experiment(run, "sensitivity", seed, cfg, &found, &records)?;
        }
    }
    Ok(Outcome::Success)
}

pub fn reserve(cfg: &ReserveConfig, run: &mut Run) -> Result<Outcome> {
    let v = instance_or_generate(run, &cfg.instance, &cfg.generator, cfg.seed)?;
    let mut market = cfg.market.clone();
    if let Some(labels) = &cfg.networks {
        market.networks = Some(labels.clone());
    } else if market.networks.is_none() {
        market.networks = Some(two_network_labels(v.n_goods(), child_seed(cfg.seed, 1)));
    }
    let levels = match &cfg.levels {
        Some(l) => l.clone(),
        None => {
            let top = v.max_value();
            (0..=20).map(|k| top * k as f64 / 20.0).collect()
        }
    };
    let report = network_reserve_externality(&v, &market, &levels, &cfg.target, &cfg.iter)?;
    let records = report.records("reserve", cfg.seed);
    println!("{} cannibalizing levels", report.cannibalizing_levels().len());
    write_experiment(run, "reserve", cfg.seed, cfg, &report, &records)?;
    Ok(Outcome::Success)
}

pub fn user_ab(cfg: &UserAbConfig, run: &mut Run) -> Result<Outcome> {
    let v = instance_or_generate(run, &cfg.instance, &cfg.generator, cfg.seed)?;
    let mut spec = cfg.ab.clone();
    spec.seed = cfg.seed;
    let report = user_side_ab(&v, &spec, &cfg.market, &cfg.iter)?;
    let records = report.records("user-ab");
    println!(
        "truth revenue {:+.4}, estimate {:+.4}",
        report.truth.revenue, report.estimate.revenue
    );
    write_experiment(run, "user-ab", cfg.seed, cfg, &report, &records)?;
    Ok(Outcome::Success)
}

pub fn ad_ab(cfg: &AdAbConfig, run: &mut Run) -> Result<Outcome> {
    let mut spec = cfg.spec.clone();
    spec.seed = cfg.seed;
    let pairs: Vec<_> = cfg.pairs.iter().map(|p| (p.control, p.treatment)).collect();
    let reports = ad_side_study(&spec, &pairs, &cfg.designs)?;
    let per_pair = cfg.designs.len().max(1);
    let records: Vec<LongRecord> = reports
        .iter()
        .enumerate()
        .flat_map(|(k, r)| r.records("ad-ab", k / per_pair))
        .collect();
    for (k, r) in reports.iter().enumerate() {
        let rev = r.delta("revenue").unwrap_or(f64::NAN);
        println!("pair {} {}: revenue {:+.4}", k / per_pair, r.design.name(), rev);
    }
    write_experiment(run, "ad-ab", cfg.seed, cfg, &reports, &records)?;
    Ok(Outcome::Success)
}
