use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::market::{market_metrics, Certificate, EquilibriumCandidate, MarketConfig, ValuationMatrix};

use super::{solve, IterConfig, SolveResult, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residual: f64,
    /// Per-bidder acquired value of the returned candidate.
    pub values: Vec<f64>,
    /// Index into [`MultiStartResult::equilibria`] when converged.
    pub equilibrium: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct FoundEquilibrium {
    pub candidate: EquilibriumCandidate,
    pub certificate: Certificate,
    pub values: Vec<f64>,
    pub revenue: f64,
    pub welfare: f64,
    /// Starts that reached this equilibrium.
    pub starts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MultiStartResult {
    pub alpha_low: f64,
    /// Median multiplier of the all-ones run.
    pub alpha_bar: f64,
    pub starts: Vec<StartOutcome>,
    pub equilibria: Vec<FoundEquilibrium>,
}

impl MultiStartResult {
    pub fn converged_starts(&self) -> usize {
        self.starts
            .iter()
            .filter(|s| s.status == SolveStatus::Converged)
            .count()
    }
}

/// Two per-bidder value vectors describe the same equilibrium when every
/// entry agrees within `rel` of `max(value, 1e-3 * total)`.
pub fn same_equilibrium(a: &[f64], b: &[f64], rel: f64) -> bool {
    let total: f64 = a.iter().chain(b).map(|x| x.abs()).sum::<f64>() / 2.0;
    let floor = 1e-3 * total;
    a.iter().zip(b).all(|(x, y)| {
        let scale = x.abs().max(y.abs()).max(floor).max(f64::MIN_POSITIVE);
        (x - y).abs() <= rel * scale
    })
}

fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

/// The `2n + 2` starting profiles built from `low` and `high`.
pub fn start_profiles(n: usize, low: f64, high: f64) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![low; n], vec![high; n]];
    for i in 0..n {
        let mut a = vec![low; n];
        a[i] = high;
        starts.push(a);
    }
    for i in 0..n {
        let mut a = vec![high; n];
        a[i] = low;
        starts.push(a);
    }
    starts
}

/// Runs the solver from `2n + 2` starts and groups the certified results
/// by per-bidder value.
///
/// The high level `alpha_bar` is the median multiplier (capped ones
/// included) of the run from all ones. Starts run in parallel.
pub fn multi_start(
    v: &ValuationMatrix,
    market: &MarketConfig,
    base: &IterConfig,
    dedup_tol: f64,
) -> Result<MultiStartResult> {
    let n = v.n_bidders();
    let first = solve(
        v,
        market,
        &IterConfig {
            initial: Some(vec![1.0; n]),
            ..base.clone()
        },
    )?;
    let alpha_bar = median(&first.candidate.alpha.0);
    let profiles = start_profiles(n, 1.0, alpha_bar);
    let rest: Vec<SolveResult> = profiles[1..]
        .par_iter()
        .map(|a| {
            solve(
                v,
                market,
                &IterConfig {
                    initial: Some(a.clone()),
                    ..base.clone()
                },
            )
        })
        .collect::<Result<_>>()?;

    let mut starts = Vec::with_capacity(profiles.len());
    let mut equilibria: Vec<FoundEquilibrium> = Vec::new();
    for (idx, (start, res)) in profiles
        .into_iter()
        .zip(std::iter::once(first).chain(rest))
        .enumerate()
    {
        let metrics = market_metrics(
            v,
            &res.candidate.allocation,
            &res.candidate.prices,
            market,
        );
        let values: Vec<f64> = metrics.bidders.iter().map(|b| b.value).collect();
        let mut eq_index = None;
        if res.converged() {
            match equilibria
                .iter()
                .position(|e| same_equilibrium(&e.values, &values, dedup_tol))
            {
                Some(k) => {
                    equilibria[k].starts.push(idx);
                    eq_index = Some(k);
                }
                None => {
                    eq_index = Some(equilibria.len());
                    equilibria.push(FoundEquilibrium {
                        candidate: res.candidate.clone(),
                        certificate: res.certificate.clone(),
                        values: values.clone(),
                        revenue: metrics.revenue,
                        welfare: metrics.welfare,
                        starts: vec![idx],
                    });
                }
            }
        }
        starts.push(StartOutcome {
            start,
            status: res.status,
            iterations: res.trace.iterations,
            residual: res.certificate.worst(),
            values,
            equilibrium: eq_index,
        });
    }
    Ok(MultiStartResult {
        alpha_low: 1.0,
        alpha_bar,
        starts,
        equilibria,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_count_is_two_n_plus_two() {
        assert_eq!(start_profiles(10, 1.0, 2.0).len(), 22);
        let s = start_profiles(2, 1.0, 2.0);
        assert_eq!(s[2], vec![2.0, 1.0]);
        assert_eq!(s[5], vec![2.0, 1.0]);
    }

    #[test]
    fn value_vectors_match_relatively() {
        assert!(same_equilibrium(&[1.0, 2.0], &[1.005, 2.0], 1e-2));
        assert!(!same_equilibrium(&[1.0, 2.0], &[1.5, 2.0], 1e-2));
        // tiny entries compare against the market-wide floor
        assert!(same_equilibrium(&[1.0, 1e-9], &[1.0, 2e-9], 1e-2));
    }

    #[test]
    fn median_handles_even_counts() {
        assert_eq!(median(&[3.0, 1.0]), 2.0);
        assert_eq!(median(&[3.0, 1.0, 10.0]), 3.0);
    }
}
