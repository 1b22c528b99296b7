use crate::error::{Error, Result};
use crate::market::{Allocation, Boost, MarketConfig, MultiplierProfile, PriceVector, ValuationMatrix};
use crate::scalar::Scalar;

/// Per-(bidder, good) multipliers that make every participant bid the
/// good's highest value, with the resulting allocation and prices.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPriceProfile<T = f64> {
    /// `(bidder, good, alpha_ij)` for every positive value.
    pub multipliers: Vec<(usize, usize, T)>,
    pub allocation: Allocation<T>,
    pub prices: PriceVector<T>,
}

impl<T: Scalar> FirstPriceProfile<T> {
    pub fn revenue(&self) -> T {
        self.prices.0.iter().cloned().fold(T::zero(), |a, p| a + p)
    }

    pub fn welfare(&self, v: &ValuationMatrix<T>) -> T {
        self.allocation
            .entries()
            .fold(T::zero(), |a, (i, j, x)| a + x.clone() * v.value(i, j))
    }

    /// Uniform-multiplier market reproducing these bids: all multipliers 1,
    /// boost `max_j - v_ij`, reserve `max_j`. The reserve prices a good with
    /// a single participant at its value, which second pricing alone would
    /// not.
    pub fn certification_market(
        &self,
        v: &ValuationMatrix<T>,
        cap: T,
    ) -> (MultiplierProfile<T>, MarketConfig<T>) {
        let mut cfg = MarketConfig::with_cap(cap);
        cfg.reserves = Some((0..v.n_goods()).map(|j| v.good_max(j)).collect());
        cfg.boosts = Some(
            v.triplets()
                .map(|(i, j, x)| Boost {
                    bidder: i,
                    good: j,
                    value: v.good_max(j) - x.clone(),
                })
                .collect(),
        );
        (MultiplierProfile::uniform(v.n_bidders(), T::one()), cfg)
    }
}

/// Scales each bid to the good's highest value; the good is shared equally
/// by the bidders holding that value and priced at it.
pub fn first_price_equivalent<T: Scalar>(v: &ValuationMatrix<T>) -> Result<FirstPriceProfile<T>> {
    let (n, m) = (v.n_bidders(), v.n_goods());
    let mut multipliers = Vec::with_capacity(v.nnz());
    let mut entries = Vec::new();
    let mut prices = Vec::with_capacity(m);
    for j in 0..m {
        let top = v.good_max(j);
        if !top.gt_zero() {
            return Err(Error::Invalid(format!("good {j} has no positive value")));
        }
        let best: Vec<usize> = v
            .good(j)
            .iter()
            .filter(|(_, x)| *x == top)
            .map(|(i, _)| *i)
            .collect();
        let share = T::one() / T::from_usize(best.len()).expect("small count");
        entries.extend(best.into_iter().map(|i| (i, j, share.clone())));
        multipliers.extend(
            v.good(j)
                .iter()
                .map(|(i, x)| (*i, j, top.clone() / x.clone())),
        );
        prices.push(top);
    }
    Ok(FirstPriceProfile {
        multipliers,
        allocation: Allocation::from_entries(n, m, entries)?,
        prices: PriceVector(prices),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::check_candidate;
    use crate::scalar::{rat_int, Rational};
    use num_traits::Zero;

    #[test]
    fn fixture_profile() {
        let v = ValuationMatrix::from_dense(&[
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(0), rat_int(3)],
        ])
        .unwrap();
        let fp = first_price_equivalent(&v).unwrap();
        assert_eq!(fp.prices.0, vec![rat_int(1), rat_int(3)]);
        assert_eq!(fp.revenue(), rat_int(4));
        assert_eq!(fp.welfare(&v), rat_int(4));
        assert!(fp.multipliers.contains(&(0, 1, rat_int(3))));
        let (alpha, cfg) = fp.certification_market(&v, rat_int(10));
        let cert =
            check_candidate(&v, &alpha, &fp.allocation, &fp.prices, &cfg, &Rational::zero())
                .unwrap();
        assert!(cert.pass, "{cert:?}");
    }

    #[test]
    fn identical_bidders_share_equally() {
        let v = ValuationMatrix::from_dense(&[vec![2.0], vec![2.0], vec![1.0]]).unwrap();
        let fp = first_price_equivalent(&v).unwrap();
        assert_eq!(fp.allocation.share(0, 0), 0.5);
        assert_eq!(fp.allocation.share(1, 0), 0.5);
        assert_eq!(fp.allocation.share(2, 0), 0.0);
        assert_eq!(fp.prices.0, vec![2.0]);
    }
}
