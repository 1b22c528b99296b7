//! Per-subcommand configuration, loaded from JSON and overridden by flags.
//!
//! A config file may also be a run manifest, in which case its recorded
//! `config` is used; this is how runs are replayed.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::MiblpObjective;
use crate::experiments::{AdSideDesign, AdSideSpec, PidParams, UserSideAbSpec};
use crate::instance::{Family, GeneratorSpec, ValueDistribution};
use crate::iterative::IterConfig;
use crate::market::MarketConfig;

/// Reads `path` as a config of type `C`, unwrapping a manifest written by
/// `subcommand`.
pub fn load_config<C: DeserializeOwned + Default>(path: Option<&Path>, subcommand: &str) -> Result<C> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file_err = |e: serde_json::Error| Error::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(file_err)?;
    match (value.get("subcommand"), value.get("config")) {
        (Some(sub), Some(cfg)) => {
            if sub.as_str() != Some(subcommand) {
                return Err(Error::File {
                    path: path.to_path_buf(),
                    message: format!("manifest is for {sub}, not `{subcommand}`"),
                });
            }
            serde_json::from_value(cfg.clone()).map_err(file_err)
        }
        // Parsed from text again so errors carry line numbers.
        _ => serde_json::from_str(&text).map_err(file_err),
    }
}

/// Instance generator without its seed, which comes from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub distribution: ValueDistribution,
    pub sigma: Option<f64>,
    pub auctions_per_episode: Option<usize>,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            family: Family::Correlated,
            n: 10,
            m: 14,
            distribution: ValueDistribution::Uniform01,
            sigma: Some(0.3),
            auctions_per_episode: None,
        }
    }
}

impl GenParams {
    pub fn spec(&self, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            family: self.family,
            n: self.n,
            m: self.m,
            distribution: self.distribution,
            sigma: self.sigma,
            auctions_per_episode: self.auctions_per_episode,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub generator: GenParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub instance: Option<PathBuf>,
    pub market: MarketConfig,
    pub iter: IterConfig,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            instance: None,
            market: MarketConfig::default(),
            iter: IterConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub instance: Option<PathBuf>,
    pub candidate: Option<PathBuf>,
    pub market: MarketConfig,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            instance: None,
            candidate: None,
            market: MarketConfig::default(),
            tolerance: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub instance: Option<PathBuf>,
    /// Multiplier cap, parsed exactly.
    pub cap: String,
    pub max_bidders: usize,
    pub max_goods: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            instance: None,
            cap: "10".into(),
            max_bidders: 3,
            max_goods: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub instance: Option<PathBuf>,
    pub objective: MiblpObjective,
    pub market: MarketConfig,
    /// Candidate to encode as a model solution alongside the model.
    pub candidate: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            instance: None,
            objective: MiblpObjective::Revenue,
            market: MarketConfig::default(),
            candidate: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub instance: Option<PathBuf>,
    pub solution: Option<PathBuf>,
    pub market: MarketConfig,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            instance: None,
            solution: None,
            market: MarketConfig::default(),
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstabilityConfig {
    /// Instance files; when empty, `count` correlated instances are
    /// generated, cycling through `sigmas`.
    pub instances: Vec<PathBuf>,
    pub n: usize,
    pub m: usize,
    pub sigmas: Vec<f64>,
    pub count: usize,
    pub dedup_tol: f64,
    pub top_k: Option<usize>,
    pub market: MarketConfig,
    pub iter: IterConfig,
    pub seed: u64,
}

impl Default for InstabilityConfig {
    fn default() -> Self {
        InstabilityConfig {
            instances: Vec::new(),
            n: 10,
            m: 14,
            sigmas: vec![0.1, 0.3, 1.0],
            count: 10,
            dedup_tol: 1e-2,
            top_k: Some(3),
            market: MarketConfig::default(),
            iter: IterConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityMode {
    Individual,
    Population,
    /// Search seeded small instances for a non-monotone response.
    Search,
}

impl std::str::FromStr for SensitivityMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "individual" => Ok(SensitivityMode::Individual),
            "population" => Ok(SensitivityMode::Population),
            "search" => Ok(SensitivityMode::Search),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub mode: SensitivityMode,
    pub instance: Option<PathBuf>,
    pub generator: GenParams,
    /// Individual mode; `None` means every bidder.
    pub bidders: Option<Vec<usize>>,
    pub factors: Vec<f64>,
    pub magnitude: f64,
    pub top_k: usize,
    /// Population mode: perturbations `child_seed(seed, 0..perturbations)`.
    pub perturbations: usize,
    pub search_instances: usize,
    pub search_factors: Vec<f64>,
    pub min_delta: f64,
    pub market: MarketConfig,
    pub iter: IterConfig,
    pub seed: u64,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            mode: SensitivityMode::Individual,
            instance: None,
            generator: GenParams::default(),
            bidders: None,
            factors: vec![0.96, 0.98, 1.02, 1.04],
            magnitude: 0.01,
            top_k: 10,
            perturbations: 20,
            search_instances: 200,
            search_factors: vec![0.95, 0.9, 0.8],
            min_delta: 1e-2,
            market: MarketConfig::default(),
            iter: IterConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReserveConfig {
    pub instance: Option<PathBuf>,
    pub generator: GenParams,
    /// Per-good network labels; `None` draws a seeded two-network split
    /// unless the market config already has labels.
    pub networks: Option<Vec<String>>,
    pub target: String,
    /// Reserve levels; `None` means 20 evenly spaced levels up to the
    /// largest value.
    pub levels: Option<Vec<f64>>,
    pub market: MarketConfig,
    pub iter: IterConfig,
    pub seed: u64,
}

impl Default for ReserveConfig {
    fn default() -> Self {
        ReserveConfig {
            instance: None,
            generator: GenParams {
                family: Family::Complete,
                n: 5,
                m: 10,
                sigma: None,
                ..GenParams::default()
            },
            networks: None,
            target: "a".into(),
            levels: None,
            market: MarketConfig::default(),
            iter: IterConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserAbConfig {
    pub instance: Option<PathBuf>,
    pub generator: GenParams,
    /// The spec's own seed is replaced by the run seed.
    pub ab: UserSideAbSpec,
    pub market: MarketConfig,
    pub iter: IterConfig,
    pub seed: u64,
}

impl Default for UserAbConfig {
    fn default() -> Self {
        UserAbConfig {
            instance: None,
            generator: GenParams {
                m: 20,
                ..GenParams::default()
            },
            ab: UserSideAbSpec::default(),
            market: MarketConfig::default(),
            iter: IterConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidPair {
    pub control: PidParams,
    pub treatment: PidParams,
}

/// The three scripted control/treatment pairs: a more aggressive
/// proportional gain, a higher starting multiplier, and added integral and
/// derivative terms.
pub fn scripted_pairs() -> Vec<PidPair> {
    let p = |kp, ki, kd, alpha0| PidParams { kp, ki, kd, alpha0 };
    vec![
        PidPair {
            control: p(0.05, 0.0, 0.0, 1.0),
            treatment: p(0.2, 0.0, 0.0, 1.0),
        },
        PidPair {
            control: p(0.1, 0.01, 0.0, 1.0),
            treatment: p(0.1, 0.01, 0.0, 3.0),
        },
        PidPair {
            control: p(0.1, 0.0, 0.0, 1.0),
            treatment: p(0.1, 0.02, 0.05, 1.0),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdAbConfig {
    /// The spec's own seed is replaced by the run seed.
    pub spec: AdSideSpec,
    pub pairs: Vec<PidPair>,
    pub designs: Vec<AdSideDesign>,
    pub seed: u64,
}

impl Default for AdAbConfig {
    fn default() -> Self {
        AdAbConfig {
            spec: AdSideSpec::default(),
            pairs: scripted_pairs(),
            designs: AdSideDesign::ALL.to_vec(),
            seed: 0,
        }
    }
}
