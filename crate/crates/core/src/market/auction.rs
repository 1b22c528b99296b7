use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{MarketConfig, MultiplierProfile, PriceVector, ValuationMatrix};

/// Result of one good's auction.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodOutcome<T> {
    /// Highest boosted score among participants.
    pub top_score: T,
    /// Whether the top score clears the reserve.
    pub sold: bool,
    /// Tied winners (empty when unsold), ascending bidder id.
    pub winners: Vec<usize>,
    /// Price charged to each entry of `winners`.
    pub winner_prices: Vec<T>,
}

impl<T: Scalar> GoodOutcome<T> {
    pub fn price_of(&self, bidder: usize) -> Option<&T> {
        self.winners
            .iter()
            .position(|&w| w == bidder)
            .map(|k| &self.winner_prices[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome<T> {
    pub goods: Vec<GoodOutcome<T>>,
    /// Per-good price: the lowest price among tied winners, 0 when unsold.
    pub prices: PriceVector<T>,
}

/// Runs every good's second-price auction under fixed multipliers.
///
/// Score of bidder `i` on good `j` is `alpha_i * v_ij + c_ij`; only bidders
/// with `v_ij > 0` take part. A winner pays the best competing score minus
/// its own boost, floored at the reserve and at zero. Ties are reported as
/// sets.
pub fn run_auctions<T: Scalar>(
    v: &ValuationMatrix<T>,
    alpha: &MultiplierProfile<T>,
    cfg: &MarketConfig<T>,
) -> Result<AuctionOutcome<T>> {
    cfg.validate(v.n_bidders(), v.n_goods())?;
    alpha.validate(v.n_bidders(), &cfg.cap)?;
    let boosts = cfg.boost_table(v);
    let goods: Vec<GoodOutcome<T>> = (0..v.n_goods())
        .map(|j| auction_good(v, alpha, &boosts[j], &cfg.reserve(j), j))
        .collect();
    for (j, g) in goods.iter().enumerate() {
        if !g.top_score.is_finite_value() {
            return Err(Error::NonFinite(format!("score on good {j}")));
        }
    }
    let prices = PriceVector(
        goods
            .iter()
            .map(|g| {
                g.winner_prices
                    .iter()
                    .cloned()
                    .reduce(T::min_of)
                    .unwrap_or_else(T::zero)
            })
            .collect(),
    );
    Ok(AuctionOutcome { goods, prices })
}

pub(crate) fn scores<T: Scalar>(
    v: &ValuationMatrix<T>,
    alpha: &MultiplierProfile<T>,
    boosts: &[T],
    j: usize,
) -> Vec<T> {
    v.good(j)
        .iter()
        .zip(boosts)
        .map(|((i, vij), c)| alpha.get(*i).clone() * vij.clone() + c.clone())
        .collect()
}

/// Price bidder at position `k` of good `j`'s entry list would pay if it won.
pub(crate) fn price_at<T: Scalar>(scores: &[T], boosts: &[T], k: usize, reserve: &T) -> T {
    let best_other = scores
        .iter()
        .enumerate()
        .filter(|(q, _)| *q != k)
        .map(|(_, s)| s.clone())
        .fold(T::zero(), T::max_of);
    let p = T::max_of(best_other - boosts[k].clone(), reserve.clone());
    T::max_of(p, T::zero())
}

fn auction_good<T: Scalar>(
    v: &ValuationMatrix<T>,
    alpha: &MultiplierProfile<T>,
    boosts: &[T],
    reserve: &T,
    j: usize,
) -> GoodOutcome<T> {
    let s = scores(v, alpha, boosts, j);
    let top = s.iter().cloned().fold(T::zero(), T::max_of);
    let sold = top >= *reserve;
    let mut winners = Vec::new();
    let mut winner_prices = Vec::new();
    if sold {
        for (k, (i, _)) in v.good(j).iter().enumerate() {
            if s[k] == top {
                winners.push(*i);
                winner_prices.push(price_at(&s, boosts, k, reserve));
            }
        }
    }
    GoodOutcome {
        top_score: top,
        sold,
        winners,
        winner_prices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Boost;

    fn fixture() -> ValuationMatrix {
        ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]]).unwrap()
    }

    #[test]
    fn fixture_at_equilibrium_multipliers() {
        let out = run_auctions(
            &fixture(),
            &MultiplierProfile(vec![3.0, 1.0]),
            &MarketConfig::default(),
        )
        .unwrap();
        assert_eq!(out.goods[0].winners, vec![0]);
        assert_eq!(out.prices.0[0], 0.0);
        assert_eq!(out.goods[1].winners, vec![0, 1]);
        assert_eq!(out.prices.0[1], 3.0);
    }

    #[test]
    fn lone_bidder_pays_nothing() {
        let v = ValuationMatrix::from_dense(&[vec![5.0]]).unwrap();
        let out = run_auctions(&v, &MultiplierProfile(vec![1.0]), &MarketConfig::default()).unwrap();
        assert_eq!(out.goods[0].winners, vec![0]);
        assert_eq!(out.prices.0[0], 0.0);
    }

    #[test]
    fn boost_breaks_tie_and_discounts_price() {
        let v = ValuationMatrix::from_dense(&[vec![1.0], vec![1.0]]).unwrap();
        let mut cfg = MarketConfig::default();
        cfg.boosts = Some(vec![Boost {
            bidder: 0,
            good: 0,
            value: 0.5,
        }]);
        let out = run_auctions(&v, &MultiplierProfile(vec![1.0, 1.0]), &cfg).unwrap();
        assert_eq!(out.goods[0].winners, vec![0]);
        assert_eq!(out.prices.0[0], 0.5);
    }

    #[test]
    fn reserve_blocks_or_floors() {
        let v = ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.5, 0.0]]).unwrap();
        let mut cfg = MarketConfig::default();
        cfg.reserves = Some(vec![0.8, 2.0]);
        let out = run_auctions(&v, &MultiplierProfile(vec![1.0, 1.0]), &cfg).unwrap();
        assert!(out.goods[0].sold);
        assert_eq!(out.prices.0[0], 0.8);
        assert!(!out.goods[1].sold);
        assert!(out.goods[1].winners.is_empty());
        assert_eq!(out.prices.0[1], 0.0);
    }

    #[test]
    fn zero_value_bidder_never_wins_even_with_boost() {
        let v = ValuationMatrix::from_dense(&[vec![1.0], vec![0.0]]).unwrap();
        let mut cfg = MarketConfig::default();
        cfg.boosts = Some(vec![Boost {
            bidder: 1,
            good: 0,
            value: 5.0,
        }]);
        let out = run_auctions(&v, &MultiplierProfile(vec![1.0, 1.0]), &cfg).unwrap();
        assert_eq!(out.goods[0].winners, vec![0]);
    }

    #[test]
    fn rejects_out_of_range_multiplier() {
        assert!(run_auctions(
            &fixture(),
            &MultiplierProfile(vec![0.5, 1.0]),
            &MarketConfig::default()
        )
        .is_err());
    }
}
