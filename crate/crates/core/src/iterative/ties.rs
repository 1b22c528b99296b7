use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::market::{Allocation, MarketConfig, MultiplierProfile, PriceVector, ValuationMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidderTieCheck {
    pub bidder: usize,
    /// Goods where the bidder is one of several near-tied top bidders.
    pub tied_goods: Vec<usize>,
    /// `sum_{j not tied} x_ij (v_ij - p_j)`, relative to acquired value.
    pub lower: f64,
    /// `lower + sum_{j tied} (v_ij - p_j)`, same scale.
    pub upper: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieReport {
    pub tolerance: f64,
    pub tie_epsilon: f64,
    pub bidders: Vec<BidderTieCheck>,
    pub pass: bool,
}

/// Relaxed check that ignores how tied goods are split.
///
/// For each bidder the slack outside its tied goods must be nonnegative,
/// and taking every tied good whole must leave no positive slack. The upper
/// condition is waived for bidders at the cap.
pub fn certify_up_to_ties(
    v: &ValuationMatrix,
    alpha: &MultiplierProfile,
    x: &Allocation,
    p: &PriceVector,
    market: &MarketConfig,
    tol: f64,
    tie_epsilon: f64,
) -> Result<TieReport> {
    market.validate(v.n_bidders(), v.n_goods())?;
    alpha.validate(v.n_bidders(), &market.cap)?;
    let n = v.n_bidders();
    let boosts = market.boost_table(v);
    let mut tied: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..v.n_goods() {
        let scores: Vec<f64> = v
            .good(j)
            .iter()
            .zip(&boosts[j])
            .map(|((i, vij), c)| alpha.get(*i) * vij + c)
            .collect();
        let top = scores.iter().copied().fold(0.0, f64::max);
        let band = top * (1.0 - tie_epsilon);
        let near: Vec<usize> = v
            .good(j)
            .iter()
            .zip(&scores)
            .filter(|(_, s)| **s >= band)
            .map(|((i, _), _)| *i)
            .collect();
        if near.len() > 1 {
            for i in near {
                tied[i].push(j);
            }
        }
    }
    let mut bidders = Vec::with_capacity(n);
    for (i, tied_goods) in tied.into_iter().enumerate() {
        let mut outside = 0.0;
        let mut acquired = 0.0;
        for &(j, vij) in v.bidder(i) {
            let share = x.share(i, j);
            acquired += share * vij;
            if tied_goods.binary_search(&j).is_err() {
                outside += share * (vij - p.get(j));
            }
        }
        let inside: f64 = tied_goods.iter().map(|&j| v.value(i, j) - p.get(j)).sum();
        let scale = if acquired > 0.0 { acquired } else { 1.0 };
        let lower = outside / scale;
        let upper = (outside + inside) / scale;
        let capped = *alpha.get(i) >= market.cap - tol;
        let pass = lower >= -tol && (capped || upper <= tol);
        bidders.push(BidderTieCheck {
            bidder: i,
            tied_goods,
            lower,
            upper,
            pass,
        });
    }
    Ok(TieReport {
        tolerance: tol,
        tie_epsilon,
        pass: bidders.iter().all(|b| b.pass),
        bidders,
    })
}
