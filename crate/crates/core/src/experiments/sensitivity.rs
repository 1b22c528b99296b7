use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::rng::child_seed;
use crate::instance::{gen_complete, ValueDistribution};
use crate::iterative::{solve, IterConfig, SolveResult, SolveStatus};
use crate::market::{market_metrics, MarketConfig, ValuationMatrix};

use super::stats::{relative_delta, Quantiles};
use super::LongRecord;

/// Outcome of scaling one bidder's valuation row.
///
/// Values are in the units of the instance being solved, so the new value
/// is measured against the scaled row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRecord {
    pub bidder: usize,
    pub factor: f64,
    /// Starting multiplier of the scaled bidder after clamping to `[1, A]`.
    pub warm_start_alpha: f64,
    pub old_status: SolveStatus,
    pub new_status: SolveStatus,
    pub old_value: f64,
    pub new_value: f64,
    /// `(new - old) / old`.
    pub delta: f64,
    pub old_revenue: f64,
    pub new_revenue: f64,
    pub new_alpha: Vec<f64>,
    /// False when `factor == 1` and the old result was reused.
    pub resolved: bool,
}

impl SensitivityRecord {
    pub fn certified(&self) -> bool {
        self.old_status == SolveStatus::Converged && self.new_status == SolveStatus::Converged
    }

    pub fn records(&self, experiment: &str, seed: u64) -> Vec<LongRecord> {
        let arm = format!("b{}_x{}", self.bidder, self.factor);
        vec![
            LongRecord::new(experiment, seed, &arm, "old_value", self.old_value),
            LongRecord::new(experiment, seed, &arm, "new_value", self.new_value),
            LongRecord::new(experiment, seed, &arm, "delta", self.delta),
            LongRecord::new(experiment, seed, &arm, "old_revenue", self.old_revenue),
            LongRecord::new(experiment, seed, &arm, "new_revenue", self.new_revenue),
            LongRecord::new(experiment, seed, &arm, "certified", f64::from(u8::from(self.certified()))),
        ]
    }
}

fn values_and_revenue(v: &ValuationMatrix, res: &SolveResult, market: &MarketConfig) -> (Vec<f64>, f64) {
    let m = market_metrics(v, &res.candidate.allocation, &res.candidate.prices, market);
    (m.bidders.iter().map(|b| b.value).collect(), m.revenue)
}

fn check_factor(factor: f64) -> Result<()> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::Invalid(format!("scaling factor {factor} must be positive")));
    }
    Ok(())
}

/// Solves `v`, then re-solves with `bidder`'s row scaled by `factor`.
pub fn sensitivity_individual(
    v: &ValuationMatrix,
    bidder: usize,
    factor: f64,
    market: &MarketConfig,
    iter: &IterConfig,
) -> Result<SensitivityRecord> {
    let base = solve(v, market, iter)?;
    sensitivity_from(v, &base, bidder, factor, market, iter).map(|(r, _)| r)
}

/// As [`sensitivity_individual`] with a known solution of `v`.
///
/// The re-solve starts from the old multipliers with the scaled bidder's
/// divided by `factor`, then clamped to `[1, A]`. A factor of exactly 1
/// reuses `base` unchanged.
pub fn sensitivity_from(
    v: &ValuationMatrix,
    base: &SolveResult,
    bidder: usize,
    factor: f64,
    market: &MarketConfig,
    iter: &IterConfig,
) -> Result<(SensitivityRecord, SolveResult)> {
    check_factor(factor)?;
    if bidder >= v.n_bidders() {
        return Err(Error::Dimension(format!("bidder {bidder} out of range")));
    }
    let (old_values, old_revenue) = values_and_revenue(v, base, market);
    let mut start = base.candidate.alpha.0.clone();
    start[bidder] = (start[bidder] / factor).clamp(1.0, market.cap);
    let (new, resolved, new_values, new_revenue) = if factor == 1.0 {
        (base.clone(), false, old_values.clone(), old_revenue)
    } else {
        let scaled = v.with_scaled_row(bidder, &factor);
        let res = solve(
            &scaled,
            market,
            &IterConfig {
                initial: Some(start.clone()),
                ..iter.clone()
            },
        )?;
        let (vals, rev) = values_and_revenue(&scaled, &res, market);
        (res, true, vals, rev)
    };
    let record = SensitivityRecord {
        bidder,
        factor,
        warm_start_alpha: start[bidder],
        old_status: base.status,
        new_status: new.status,
        old_value: old_values[bidder],
        new_value: new_values[bidder],
        delta: relative_delta(new_values[bidder], old_values[bidder]),
        old_revenue,
        new_revenue,
        new_alpha: new.candidate.alpha.0.clone(),
        resolved,
    };
    Ok((record, new))
}

/// One coin-flip perturbation of every bidder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRun {
    pub seed: u64,
    pub factors: Vec<f64>,
    pub status: SolveStatus,
    pub revenue: f64,
    pub revenue_change: f64,
    /// `(bidder, relative value change)` for the focus bidders.
    pub deltas: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationReport {
    pub magnitude: f64,
    pub base_status: SolveStatus,
    pub base_revenue: f64,
    /// Focus bidders: the `top_k` largest acquired values at the base solution.
    pub top: Vec<usize>,
    pub runs: Vec<PopulationRun>,
    pub revenue_changes: Quantiles,
    pub deltas: Quantiles,
}

impl PopulationReport {
    pub fn records(&self, experiment: &str) -> Vec<LongRecord> {
        let mut out = Vec::new();
        for r in &self.runs {
            out.push(LongRecord::new(experiment, r.seed, "population", "revenue_change", r.revenue_change));
            for (i, d) in &r.deltas {
                out.push(LongRecord::new(experiment, r.seed, format!("b{i}"), "delta", *d));
            }
        }
        out
    }
}

/// Per seed, scales each row by `1 + magnitude` or `1 - magnitude` on a fair
/// coin and re-solves from the warm-started base multipliers.
pub fn sensitivity_population(
    v: &ValuationMatrix,
    magnitude: f64,
    top_k: usize,
    seeds: &[u64],
    market: &MarketConfig,
    iter: &IterConfig,
) -> Result<PopulationReport> {
    if !(0.0..1.0).contains(&magnitude) {
        return Err(Error::Invalid(format!("magnitude {magnitude} must lie in [0, 1)")));
    }
    let base = solve(v, market, iter)?;
    let (old_values, base_revenue) = values_and_revenue(v, &base, market);
    let mut top: Vec<usize> = (0..v.n_bidders()).collect();
    top.sort_by(|&a, &b| old_values[b].total_cmp(&old_values[a]).then(a.cmp(&b)));
    top.truncate(top_k);

    let runs: Vec<PopulationRun> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let factors: Vec<f64> = (0..v.n_bidders())
                .map(|_| {
                    if rng.random_bool(0.5) {
                        1.0 + magnitude
                    } else {
                        1.0 - magnitude
                    }
                })
                .collect();
            let (status, new_values, revenue) = if magnitude == 0.0 {
                (base.status, old_values.clone(), base_revenue)
            } else {
                let scaled = v.with_scaled_rows(&factors);
                let start = base
                    .candidate
                    .alpha
                    .0
                    .iter()
                    .zip(&factors)
                    .map(|(a, f)| (a / f).clamp(1.0, market.cap))
                    .collect();
                let res = solve(
                    &scaled,
                    market,
                    &IterConfig {
                        initial: Some(start),
                        ..iter.clone()
                    },
                )?;
                let (vals, rev) = values_and_revenue(&scaled, &res, market);
                (res.status, vals, rev)
            };
            Ok(PopulationRun {
                seed,
                factors,
                status,
                revenue,
                revenue_change: relative_delta(revenue, base_revenue),
                deltas: top
                    .iter()
                    .map(|&i| (i, relative_delta(new_values[i], old_values[i])))
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;
    let changes: Vec<f64> = runs.iter().map(|r| r.revenue_change).collect();
    let deltas: Vec<f64> = runs.iter().flat_map(|r| r.deltas.iter().map(|d| d.1)).collect();
    Ok(PopulationReport {
        magnitude,
        base_status: base.status,
        base_revenue,
        top,
        revenue_changes: Quantiles::of(&changes),
        deltas: Quantiles::of(&deltas),
        runs,
    })
}

/// A bidder whose certified value rises after scaling its row down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonMonotoneWitness {
    /// Generator seed of the instance (uniform values, complete graph).
    pub instance_seed: u64,
    pub n: usize,
    pub m: usize,
    pub record: SensitivityRecord,
    pub old_alpha: Vec<f64>,
    /// Instances examined up to and including the witness.
    pub examined: usize,
}

/// Searches seeded small instances for a factor below 1 that strictly
/// raises the scaled bidder's value by more than `min_delta`, with both
/// solves certified.
///
/// Instance `k` has seed `child_seed(seed, k)`, `n = 3 + k % 3` bidders and
/// `m = 2n` goods.
pub fn search_non_monotone(
    seed: u64,
    max_instances: usize,
    factors: &[f64],
    min_delta: f64,
    market: &MarketConfig,
    iter: &IterConfig,
) -> Result<Option<NonMonotoneWitness>> {
    if let Some(f) = factors.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
        return Err(Error::Invalid(format!("search factor {f} must lie in (0, 1)")));
    }
    for k in 0..max_instances {
        let instance_seed = child_seed(seed, k as u64);
        let n = 3 + k % 3;
        let m = 2 * n;
        let v = gen_complete(n, m, ValueDistribution::Uniform01, instance_seed)?;
        let base = solve(&v, market, iter)?;
        if !base.converged() {
            continue;
        }
        let trials: Vec<(usize, f64)> = (0..n)
            .flat_map(|i| factors.iter().map(move |&f| (i, f)))
            .collect();
        let hits: Vec<SensitivityRecord> = trials
            .par_iter()
            .map(|&(i, f)| sensitivity_from(&v, &base, i, f, market, iter).map(|r| r.0))
            .collect::<Result<_>>()?;
        if let Some(record) = hits
            .into_iter()
            .find(|r| r.certified() && r.old_value > 0.0 && r.delta > min_delta)
        {
            return Ok(Some(NonMonotoneWitness {
                instance_seed,
                n,
                m,
                record,
                old_alpha: base.candidate.alpha.0.clone(),
                examined: k + 1,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> ValuationMatrix {
        ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]]).unwrap()
    }

    #[test]
    fn unit_factor_is_a_no_op() {
        let v = fixture();
        let market = MarketConfig::default();
        let iter = IterConfig::default();
        let base = solve(&v, &market, &iter).unwrap();
        let (r, res) = sensitivity_from(&v, &base, 0, 1.0, &market, &iter).unwrap();
        assert_eq!(r.delta, 0.0);
        assert!(!r.resolved);
        assert_eq!(res.candidate, base.candidate);
        assert_eq!(r.new_status, SolveStatus::Converged);
    }

    #[test]
    fn warm_start_divides_by_factor() {
        let v = fixture();
        let market = MarketConfig::default();
        let iter = IterConfig::default();
        let mut base = solve(&v, &market, &iter).unwrap();
        base.candidate.alpha.0 = vec![1.0, 1.0];
        let (r, _) = sensitivity_from(&v, &base, 1, 0.95, &market, &iter).unwrap();
        assert!((r.warm_start_alpha - 1.0 / 0.95).abs() < 1e-15);
        let (r, _) = sensitivity_from(&v, &base, 1, 1.05, &market, &iter).unwrap();
        assert_eq!(r.warm_start_alpha, 1.0);
    }

    #[test]
    fn rejects_bad_factors() {
        let v = fixture();
        let base = solve(&v, &MarketConfig::default(), &IterConfig::default()).unwrap();
        for f in [0.0, -1.0, f64::NAN] {
            assert!(sensitivity_from(&v, &base, 0, f, &MarketConfig::default(), &IterConfig::default()).is_err());
        }
    }

    #[test]
    fn zero_magnitude_population_is_flat_and_seeded() {
        let v = fixture();
        let market = MarketConfig::default();
        let iter = IterConfig::default();
        let r = sensitivity_population(&v, 0.0, 2, &[1, 2], &market, &iter).unwrap();
        assert!(r.runs.iter().all(|x| x.revenue_change == 0.0));
        assert!(r.runs.iter().all(|x| x.deltas.iter().all(|d| d.1 == 0.0)));
        let a = sensitivity_population(&v, 0.01, 2, &[7], &market, &iter).unwrap();
        let b = sensitivity_population(&v, 0.01, 2, &[7], &market, &iter).unwrap();
        assert_eq!(a, b);
    }
}
