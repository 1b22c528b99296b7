//! Better-response dynamics over bidder multipliers.
//!
//! Each iteration runs every auction at the current multipliers, splits
//! exact ties equally, and moves each multiplier by `d * s` where the
//! direction `d` follows the sign of the bidder's ROI slack. Fractional
//! equilibrium shares appear in the average over the last `window`
//! iterations, which is the candidate [`solve`] certifies.

mod dynamics;
mod multi;
mod ties;

pub use dynamics::{solve, step, IterState, SolveResult, SolveStatus, StepInfo};
pub use multi::{multi_start, same_equilibrium, start_profiles, FoundEquilibrium, MultiStartResult, StartOutcome};
pub use ties::{certify_up_to_ties, BidderTieCheck, TieReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionRule {
    /// Sign of the current iteration's slack.
    Instant,
    /// Half the current sign plus half the sign of the slack summed over the
    /// window.
    Windowed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `scale / t * min(|instant slack|, |window slack|)`, slacks normalized
    /// by the bidder's total valuation.
    SlackMin,
    /// `scale * |ln(value / spend)|` over the window.
    LogRoas,
}

/// Stop once the windowed value of every watched bidder moves less than
/// `rel_tol` between consecutive windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatchSet {
    pub bidders: Vec<usize>,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterConfig {
    pub direction: DirectionRule,
    pub window: usize,
    /// Rounds averaged into the candidate; `None` means `window`. Longer
    /// averages give finer fractional shares than the direction window.
    pub average_window: Option<usize>,
    pub step: StepRule,
    pub step_scale: f64,
    /// `None` means `iters_per_size * (n + m)`.
    pub max_iters: Option<usize>,
    pub iters_per_size: usize,
    pub residual_tol: f64,
    /// Starting multipliers; `None` means all ones.
    pub initial: Option<Vec<f64>>,
    /// Relative score gap under which two bids count as tied.
    pub tie_epsilon: f64,
    pub watch: Option<WatchSet>,
    /// Trace decimation: one snapshot every `trace_every` iterations.
    pub trace_every: usize,
}

impl Default for IterConfig {
    fn default() -> Self {
        Self {
            direction: DirectionRule::Windowed,
            window: 100,
            average_window: Some(400),
            step: StepRule::SlackMin,
            step_scale: 20.0,
            max_iters: None,
            iters_per_size: 1000,
            residual_tol: 1e-3,
            initial: None,
            tie_epsilon: 1e-6,
            watch: None,
            trace_every: 100,
        }
    }
}

impl IterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Invalid("window must be at least 1".into()));
        }
        if self.average_window == Some(0) {
            return Err(Error::Invalid("average_window must be at least 1".into()));
        }
        if self.max_iters == Some(0) || self.iters_per_size == 0 {
            return Err(Error::Invalid("iteration budget must be positive".into()));
        }
        if self.trace_every == 0 {
            return Err(Error::Invalid("trace_every must be positive".into()));
        }
        for (name, x) in [
            ("step_scale", self.step_scale),
            ("residual_tol", self.residual_tol),
            ("tie_epsilon", self.tie_epsilon),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::Invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn averaging(&self) -> usize {
        self.average_window.unwrap_or(self.window)
    }

    pub fn iteration_budget(&self, n: usize, m: usize) -> usize {
        self.max_iters.unwrap_or(self.iters_per_size * (n + m))
    }
}

/// One decimated trace record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub alpha: Vec<f64>,
    /// Instant slack per bidder, normalized by total valuation.
    pub slack: Vec<f64>,
    /// Worst certificate residual of the window candidate, when evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterTrace {
    pub records: Vec<TraceRecord>,
    pub iterations: usize,
    pub best_residual: Option<f64>,
    pub best_iteration: Option<usize>,
}

impl IterTrace {
    /// JSON lines, one record per snapshot.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}
