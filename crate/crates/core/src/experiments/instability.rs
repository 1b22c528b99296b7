use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::first_price_equivalent;
use crate::iterative::{multi_start, IterConfig, SolveStatus};
use crate::market::{MarketConfig, ValuationMatrix};

use super::stats::Quantiles;
use super::LongRecord;

/// A bidder's acquired value across the equilibria of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidderGap {
    pub bidder: usize,
    pub max_value: f64,
    pub min_value: f64,
    /// `(max - min) / max`; `None` for bidders winning nothing anywhere.
    pub gap: Option<f64>,
}

impl BidderGap {
    pub fn eligible(&self) -> bool {
        self.gap.is_some()
    }
}

/// Per-bidder gaps from `values[equilibrium][bidder]`.
pub fn gap_report(values: &[Vec<f64>]) -> Vec<BidderGap> {
    let n = values.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            let (lo, hi) = values
                .iter()
                .map(|e| e[i])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
            BidderGap {
                bidder: i,
                max_value: hi,
                min_value: lo,
                gap: (hi > 0.0).then(|| ((hi - lo) / hi).clamp(0.0, 1.0)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub instance: usize,
    pub starts: usize,
    pub converged_starts: usize,
    /// Start indices whose run did not certify.
    pub non_converged: Vec<usize>,
    pub alpha_bar: f64,
    pub equilibria: usize,
    pub revenues: Vec<f64>,
    pub welfares: Vec<f64>,
    pub bidders: Vec<BidderGap>,
    /// Over eligible bidders only.
    pub quantiles: Quantiles,
    /// Bidders ranked by first-price acquired value, when requested.
    pub top: Option<Vec<usize>>,
    pub top_quantiles: Option<Quantiles>,
}

impl GapReport {
    pub fn eligible_gaps(&self) -> Vec<f64> {
        self.bidders.iter().filter_map(|b| b.gap).collect()
    }

    pub fn max_gap(&self) -> f64 {
        self.eligible_gaps().into_iter().fold(0.0, f64::max)
    }

    pub fn records(&self, experiment: &str, seed: u64) -> Vec<LongRecord> {
        let arm = format!("instance{}", self.instance);
        let mut out = vec![
            LongRecord::new(experiment, seed, &arm, "equilibria", self.equilibria as f64),
            LongRecord::new(experiment, seed, &arm, "converged_starts", self.converged_starts as f64),
            LongRecord::new(experiment, seed, &arm, "max_gap", self.max_gap()),
        ];
        for b in &self.bidders {
            if let Some(g) = b.gap {
                out.push(LongRecord::new(experiment, seed, &arm, &format!("gap_b{}", b.bidder), g));
            }
        }
        out
    }
}

/// Runs the multi-start solver on every instance and reports value gaps
/// across the distinct certified equilibria.
///
/// With `top_k`, the `k` bidders acquiring the most value under the
/// first-price-equivalent profile get their own quantiles.
pub fn instability_report(
    instances: &[ValuationMatrix],
    market: &MarketConfig,
    iter: &IterConfig,
    dedup_tol: f64,
    top_k: Option<usize>,
) -> Result<Vec<GapReport>> {
    instances
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let ms = multi_start(v, market, iter, dedup_tol)?;
            let values: Vec<Vec<f64>> = ms.equilibria.iter().map(|e| e.values.clone()).collect();
            let bidders = if values.is_empty() {
                Vec::new()
            } else {
                gap_report(&values)
            };
            let gaps: Vec<f64> = bidders.iter().filter_map(|b| b.gap).collect();
            let (top, top_quantiles) = match top_k {
                Some(k) => {
                    let ranked = first_price_ranking(v)?;
                    let top: Vec<usize> = ranked.into_iter().take(k).collect();
                    let sub: Vec<f64> = top
                        .iter()
                        .filter_map(|&i| bidders.get(i).and_then(|b| b.gap))
                        .collect();
                    (Some(top), Some(Quantiles::of(&sub)))
                }
                None => (None, None),
            };
            Ok(GapReport {
                instance: idx,
                starts: ms.starts.len(),
                converged_starts: ms.converged_starts(),
                non_converged: ms
                    .starts
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.status != SolveStatus::Converged)
                    .map(|(k, _)| k)
                    .collect(),
                alpha_bar: ms.alpha_bar,
                equilibria: ms.equilibria.len(),
                revenues: ms.equilibria.iter().map(|e| e.revenue).collect(),
                welfares: ms.equilibria.iter().map(|e| e.welfare).collect(),
                quantiles: Quantiles::of(&gaps),
                bidders,
                top,
                top_quantiles,
            })
        })
        .collect()
}

/// Bidders by first-price acquired value, largest first; ties by index.
fn first_price_ranking(v: &ValuationMatrix) -> Result<Vec<usize>> {
    let fp = first_price_equivalent(v)?;
    let mut acquired = vec![0.0; v.n_bidders()];
    for (i, j, x) in fp.allocation.entries() {
        acquired[i] += x * v.value(i, j);
    }
    let mut order: Vec<usize> = (0..v.n_bidders()).collect();
    order.sort_by(|&a, &b| acquired[b].total_cmp(&acquired[a]).then(a.cmp(&b)));
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_arithmetic() {
        let g = gap_report(&[vec![10.0, 0.0, 1.0], vec![2.0, 0.0, 1.0]]);
        assert!((g[0].gap.unwrap() - 0.8).abs() < 1e-15);
        assert!(!g[1].eligible());
        assert_eq!(g[2].gap, Some(0.0));
    }

    #[test]
    fn fixture_has_zero_gaps() {
        let v = ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]]).unwrap();
        let reports = instability_report(
            &[v],
            &MarketConfig::default(),
            &IterConfig::default(),
            1e-2,
            Some(1),
        )
        .unwrap();
        let r = &reports[0];
        assert_eq!(r.starts, 6);
        assert_eq!(r.equilibria, 1);
        assert!(r.eligible_gaps().iter().all(|&g| g == 0.0));
        // bidder 1 takes the 3-value good under first price
        assert_eq!(r.top.as_deref(), Some(&[1][..]));
    }
}
