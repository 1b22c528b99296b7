use crate::error::Result;
use crate::market::{run_auctions, Allocation, MarketConfig, MultiplierProfile, ValuationMatrix};
use crate::scalar::Scalar;

use super::lp::{Cmp, Lp};

/// Allocation completing `alpha` to an equilibrium, if one exists.
///
/// Shares are restricted to each good's winners; sold goods are fully
/// allocated (any total in `[0, 1]` when the top score equals the reserve);
/// bidders at the cap need `spend <= value`, all others `spend = value`.
/// Among feasible allocations the one maximizing the smallest share on
/// multi-winner goods is returned, so symmetric ties split evenly.
///
/// Exact when `T` is an exact field; `f64` is not supported.
pub fn feasible_allocation_at<T: Scalar>(
    v: &ValuationMatrix<T>,
    alpha: &MultiplierProfile<T>,
    cfg: &MarketConfig<T>,
) -> Result<Option<Allocation<T>>> {
    let outcome = run_auctions(v, alpha, cfg)?;
    let (n, m) = (v.n_bidders(), v.n_goods());
    let mut vars: Vec<(usize, usize, T)> = Vec::new();
    let mut per_good: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (j, g) in outcome.goods.iter().enumerate() {
        for (k, &i) in g.winners.iter().enumerate() {
            let surplus = v.value(i, j) - g.winner_prices[k].clone();
            per_good[j].push(vars.len());
            vars.push((i, j, surplus));
        }
    }
    let t = vars.len();
    let mut lp = Lp::new(t + 1);
    for (j, g) in outcome.goods.iter().enumerate() {
        if !g.sold {
            continue;
        }
        let row = per_good[j].iter().map(|&k| (k, T::one())).collect();
        let at_reserve = g.top_score == cfg.reserve(j);
        lp.constrain(row, if at_reserve { Cmp::Le } else { Cmp::Eq }, T::one());
        if per_good[j].len() > 1 {
            for &k in &per_good[j] {
                lp.constrain(vec![(k, T::one()), (t, -T::one())], Cmp::Ge, T::zero());
            }
        }
    }
    lp.constrain(vec![(t, T::one())], Cmp::Le, T::one());
    for i in 0..n {
        let row: Vec<(usize, T)> = vars
            .iter()
            .enumerate()
            .filter(|(_, (b, _, _))| *b == i)
            .map(|(k, (_, _, s))| (k, s.clone()))
            .collect();
        let capped = *alpha.get(i) >= cfg.cap;
        lp.constrain(row, if capped { Cmp::Ge } else { Cmp::Eq }, T::zero());
    }
    let Some(x) = lp.maximize(&[(t, T::one())]).point() else {
        return Ok(None);
    };
    let entries = vars
        .iter()
        .zip(x)
        .filter(|(_, share)| share.gt_zero())
        .map(|((i, j, _), share)| (*i, *j, share));
    Allocation::from_entries(n, m, entries).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::check_equilibrium;
    use crate::scalar::{rat, rat_int, Rational};
    use num_traits::Zero;

    fn fixture() -> ValuationMatrix<Rational> {
        ValuationMatrix::from_dense(&[
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(0), rat_int(3)],
        ])
        .unwrap()
    }

    fn cfg() -> MarketConfig<Rational> {
        MarketConfig::with_cap(rat_int(10))
    }

    #[test]
    fn fixture_witness_is_forced() {
        let v = fixture();
        let alpha = MultiplierProfile(vec![rat_int(3), rat_int(1)]);
        let x = feasible_allocation_at(&v, &alpha, &cfg()).unwrap().unwrap();
        assert_eq!(x.share(0, 0), rat_int(1));
        assert_eq!(x.share(0, 1), rat(1, 2));
        assert_eq!(x.share(1, 1), rat(1, 2));
        let cert = check_equilibrium(&v, &alpha, &x, &cfg(), &Rational::zero()).unwrap();
        assert!(cert.pass);
    }

    #[test]
    fn fixture_off_equilibrium_has_none() {
        let alpha = MultiplierProfile(vec![rat_int(2), rat_int(1)]);
        assert!(feasible_allocation_at(&fixture(), &alpha, &cfg()).unwrap().is_none());
    }

    #[test]
    fn lone_bidder_at_cap_takes_everything() {
        let v = ValuationMatrix::from_dense(&[vec![rat_int(2), rat(1, 2)]]).unwrap();
        let alpha = MultiplierProfile(vec![rat_int(10)]);
        let x = feasible_allocation_at(&v, &alpha, &cfg()).unwrap().unwrap();
        assert_eq!(x.share(0, 0), rat_int(1));
        assert_eq!(x.share(0, 1), rat_int(1));
        let below = MultiplierProfile(vec![rat_int(9)]);
        assert!(feasible_allocation_at(&v, &below, &cfg()).unwrap().is_none());
    }

    #[test]
    fn symmetric_tie_splits_evenly() {
        let v = ValuationMatrix::from_dense(&[vec![rat_int(1)], vec![rat_int(1)]]).unwrap();
        let alpha = MultiplierProfile(vec![rat_int(1), rat_int(1)]);
        let x = feasible_allocation_at(&v, &alpha, &cfg()).unwrap().unwrap();
        assert_eq!(x.share(0, 0), rat(1, 2));
        assert_eq!(x.share(1, 0), rat(1, 2));
    }
}
