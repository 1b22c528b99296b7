use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iterative::{solve, IterConfig, SolveStatus};
use crate::market::{market_metrics, MarketConfig, ValuationMatrix};

use super::LongRecord;

/// Splits `m` goods into networks `"a"` and `"b"` of sizes `ceil(m/2)` and
/// `floor(m/2)`, shuffled by `seed`.
pub fn two_network_labels(m: usize, seed: u64) -> Vec<String> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut labels = vec![String::new(); m];
    for (k, j) in order.into_iter().enumerate() {
        labels[j] = if k < m.div_ceil(2) { "a" } else { "b" }.to_string();
    }
    labels
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservePoint {
    pub level: f64,
    pub status: SolveStatus,
    pub total_revenue: f64,
    pub network_revenue: BTreeMap<String, f64>,
}

impl ReservePoint {
    pub fn revenue_of(&self, network: &str) -> f64 {
        self.network_revenue.get(network).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReserveReport {
    pub target: String,
    pub baseline: ReservePoint,
    pub points: Vec<ReservePoint>,
}

impl ReserveReport {
    /// Certified levels where the target network gains revenue and the
    /// market as a whole gains strictly less.
    pub fn cannibalizing_levels(&self) -> Vec<f64> {
        if self.baseline.status != SolveStatus::Converged {
            return Vec::new();
        }
        let base_target = self.baseline.revenue_of(&self.target);
        self.points
            .iter()
            .filter(|p| p.status == SolveStatus::Converged)
            .filter(|p| {
                let gain = p.revenue_of(&self.target) - base_target;
                gain > 0.0 && p.total_revenue - self.baseline.total_revenue < gain
            })
            .map(|p| p.level)
            .collect()
    }

    pub fn records(&self, experiment: &str, seed: u64) -> Vec<LongRecord> {
        let mut out = Vec::new();
        for p in std::iter::once(&self.baseline).chain(&self.points) {
            let arm = format!("level{}", p.level);
            out.push(LongRecord::new(experiment, seed, &arm, "total_revenue", p.total_revenue));
            for (net, rev) in &p.network_revenue {
                out.push(LongRecord::new(experiment, seed, &arm, &format!("revenue_{net}"), *rev));
            }
            let ok = f64::from(u8::from(p.status == SolveStatus::Converged));
            out.push(LongRecord::new(experiment, seed, &arm, "certified", ok));
        }
        out
    }
}

/// For each level, reserves every good labeled `target` at that level
/// (other goods keep their configured reserves), re-solves from the
/// baseline multipliers and reports revenue by network.
pub fn network_reserve_externality(
    v: &ValuationMatrix,
    market: &MarketConfig,
    levels: &[f64],
    target: &str,
    iter: &IterConfig,
) -> Result<ReserveReport> {
    let labels = market
        .networks
        .as_ref()
        .ok_or_else(|| Error::Invalid("reserve study needs network labels".into()))?;
    let distinct: std::collections::BTreeSet<&String> = labels.iter().collect();
    if distinct.len() < 2 {
        return Err(Error::Invalid("reserve study needs at least two networks".into()));
    }
    if !distinct.iter().any(|l| l.as_str() == target) {
        return Err(Error::Invalid(format!("no good is labeled `{target}`")));
    }
    if let Some(l) = levels.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::Invalid(format!("reserve level {l} must be nonnegative")));
    }
    market.validate(v.n_bidders(), v.n_goods())?;

    let point = |cfg: &MarketConfig, res: &crate::iterative::SolveResult, level: f64| {
        let m = market_metrics(v, &res.candidate.allocation, &res.candidate.prices, cfg);
        ReservePoint {
            level,
            status: res.status,
            total_revenue: m.revenue,
            network_revenue: m.networks.into_iter().map(|n| (n.network, n.revenue)).collect(),
        }
    };
    let base_res = solve(v, market, iter)?;
    let baseline = point(market, &base_res, 0.0);
    let warm = IterConfig {
        initial: Some(base_res.candidate.alpha.0.clone()),
        ..iter.clone()
    };
    let points = levels
        .par_iter()
        .map(|&level| {
            let mut reserves = market
                .reserves
                .clone()
                .unwrap_or_else(|| vec![0.0; v.n_goods()]);
            for (j, l) in labels.iter().enumerate() {
                if l == target {
                    reserves[j] = level;
                }
            }
            if level == 0.0 && market.reserves.is_none() {
                return Ok(point(market, &base_res, level));
            }
            let cfg = MarketConfig {
                reserves: Some(reserves),
                ..market.clone()
            };
            let res = solve(v, &cfg, &warm)?;
            Ok(point(&cfg, &res, level))
        })
        .collect::<Result<_>>()?;
    Ok(ReserveReport {
        target: target.to_string(),
        baseline,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_correlated;

    #[test]
    fn labels_are_balanced_and_seeded() {
        let l = two_network_labels(7, 3);
        assert_eq!(l.iter().filter(|x| *x == "a").count(), 4);
        assert_eq!(l, two_network_labels(7, 3));
    }

    #[test]
    fn zero_level_matches_baseline_and_high_level_blocks_target() {
        let v = gen_correlated(4, 6, 0.3, 2).unwrap();
        let market = MarketConfig {
            networks: Some(two_network_labels(6, 1)),
            ..MarketConfig::default()
        };
        let iter = IterConfig::default();
        let top = market.cap * v.max_value() * 1.01;
        let r = network_reserve_externality(&v, &market, &[0.0, top], "a", &iter).unwrap();
        assert_eq!(r.points[0].total_revenue, r.baseline.total_revenue);
        assert_eq!(r.points[0].network_revenue, r.baseline.network_revenue);
        assert_eq!(r.points[1].revenue_of("a"), 0.0);
    }

    #[test]
    fn requires_two_networks() {
        let v = gen_correlated(2, 2, 0.3, 2).unwrap();
        let one = MarketConfig {
            networks: Some(vec!["a".into(), "a".into()]),
            ..MarketConfig::default()
        };
        assert!(network_reserve_externality(&v, &one, &[1.0], "a", &IterConfig::default()).is_err());
        assert!(network_reserve_externality(&v, &MarketConfig::default(), &[1.0], "a", &IterConfig::default()).is_err());
    }
}
