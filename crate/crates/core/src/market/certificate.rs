use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::auction::{price_at, scores};
use super::{Allocation, MarketConfig, MultiplierProfile, PriceVector, ValuationMatrix};

/// The five equilibrium conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    HighestBidder,
    Pricing,
    FullAllocation,
    RoiFeasible,
    MaximalPacing,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::HighestBidder,
        Condition::Pricing,
        Condition::FullAllocation,
        Condition::RoiFeasible,
        Condition::MaximalPacing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::HighestBidder => "highest-bidder",
            Condition::Pricing => "pricing",
            Condition::FullAllocation => "full-allocation",
            Condition::RoiFeasible => "roi-feasible",
            Condition::MaximalPacing => "maximal-pacing",
        }
    }
}

/// Worst residual of each condition at a stated tolerance.
///
/// Score and price residuals are relative to the good's top score; ROI
/// residuals are relative to the bidder's acquired value (1 when that is 0);
/// allocation residuals are absolute shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub tolerance: f64,
    pub highest_bidder: f64,
    pub pricing: f64,
    pub full_allocation: f64,
    pub roi_feasible: f64,
    pub maximal_pacing: f64,
    pub pass: bool,
    /// `sum_j x_ij (v_ij - p_ij)` per bidder.
    pub slack: Vec<f64>,
    /// Conditions that fail, in canonical order.
    pub failing: Vec<Condition>,
}

impl Certificate {
    pub fn residual(&self, c: Condition) -> f64 {
        match c {
            Condition::HighestBidder => self.highest_bidder,
            Condition::Pricing => self.pricing,
            Condition::FullAllocation => self.full_allocation,
            Condition::RoiFeasible => self.roi_feasible,
            Condition::MaximalPacing => self.maximal_pacing,
        }
    }

    pub fn worst(&self) -> f64 {
        Condition::ALL
            .iter()
            .map(|c| self.residual(*c))
            .fold(0.0, f64::max)
    }

    pub fn failing_names(&self) -> Vec<&'static str> {
        self.failing.iter().map(|c| c.name()).collect()
    }
}

/// Checks `(alpha, x)` with prices derived from the auction rules.
pub fn check_equilibrium<T: Scalar>(
    v: &ValuationMatrix<T>,
    alpha: &MultiplierProfile<T>,
    x: &Allocation<T>,
    cfg: &MarketConfig<T>,
    tol: &T,
) -> Result<Certificate> {
    evaluate(v, alpha, x, None, cfg, tol)
}

/// Checks `(alpha, x, p)` where `p` is supplied, e.g. window-averaged.
pub fn check_candidate<T: Scalar>(
    v: &ValuationMatrix<T>,
    alpha: &MultiplierProfile<T>,
    x: &Allocation<T>,
    p: &PriceVector<T>,
    cfg: &MarketConfig<T>,
    tol: &T,
) -> Result<Certificate> {
    evaluate(v, alpha, x, Some(p), cfg, tol)
}

fn evaluate<T: Scalar>(
    v: &ValuationMatrix<T>,
    alpha: &MultiplierProfile<T>,
    x: &Allocation<T>,
    explicit: Option<&PriceVector<T>>,
    cfg: &MarketConfig<T>,
    tol: &T,
) -> Result<Certificate> {
    let (n, m) = (v.n_bidders(), v.n_goods());
    cfg.validate(n, m)?;
    alpha.validate(n, &cfg.cap)?;
    if x.n_bidders() != n || x.n_goods() != m {
        return Err(Error::Dimension(format!(
            "allocation is {}x{}, market is {n}x{m}",
            x.n_bidders(),
            x.n_goods()
        )));
    }
    if let Some(p) = explicit {
        if p.len() != m {
            return Err(Error::Dimension(format!("{} prices for {m} goods", p.len())));
        }
        if p.0.iter().any(|q| !q.is_finite_value() || q.lt_zero()) {
            return Err(Error::Invalid("prices must be finite and nonnegative".into()));
        }
    }
    if tol.lt_zero() {
        return Err(Error::Invalid("negative tolerance".into()));
    }

    let zero = T::zero();
    let one = T::one();
    let boosts = cfg.boost_table(v);
    let mut res_a = zero.clone();
    let mut res_b = zero.clone();
    let mut res_c = zero.clone();
    let mut value = vec![zero.clone(); n];
    let mut spend = vec![zero.clone(); n];

    for j in 0..m {
        let entries = v.good(j);
        let s = scores(v, alpha, &boosts[j], j);
        let top = s.iter().cloned().fold(zero.clone(), T::max_of);
        let reserve = cfg.reserve(j);
        let scale = {
            let t = T::max_of(top.clone(), reserve.clone());
            if t.gt_zero() {
                t
            } else {
                one.clone()
            }
        };
        let total = x.good_total(j);
        for (i, share) in x.good(j) {
            if share.lt_zero() || *share > one {
                let over = T::max_of(-share.clone(), share.clone() - one.clone());
                res_c = T::max_of(res_c, over);
            }
            let Ok(k) = entries.binary_search_by_key(i, |e| e.0) else {
                if share > tol {
                    res_a = T::max_of(res_a, one.clone());
                }
                continue;
            };
            let vij = &entries[k].1;
            let own_price = price_at(&s, &boosts[j], k, &reserve);
            let pij = explicit.map_or_else(|| own_price.clone(), |p| p.get(j).clone());
            value[*i] = value[*i].clone() + share.clone() * vij.clone();
            spend[*i] = spend[*i].clone() + share.clone() * pij.clone();
            if share > tol {
                res_a = T::max_of(res_a, (top.clone() - s[k].clone()) / scale.clone());
                if explicit.is_some() {
                    res_b = T::max_of(res_b, (pij - own_price).abs() / scale.clone());
                }
            }
        }
        // Sold iff top >= reserve; at exact equality any total in [0, 1] is allowed.
        let margin = tol.clone() * scale.clone();
        let alloc_res = if top.clone() + margin.clone() < reserve {
            total.abs()
        } else if top > reserve.clone() + margin {
            (total - one.clone()).abs()
        } else {
            T::max_of(T::max_of(total.clone() - one.clone(), -total), zero.clone())
        };
        res_c = T::max_of(res_c, alloc_res);
    }

    let mut res_d = zero.clone();
    let mut res_e = zero.clone();
    let cap_floor = cfg.cap.clone() - tol.clone();
    let mut slack = Vec::with_capacity(n);
    for i in 0..n {
        let scale = if value[i].gt_zero() {
            value[i].clone()
        } else {
            one.clone()
        };
        let diff = value[i].clone() - spend[i].clone();
        slack.push(diff.to_f64_lossy());
        let rel = diff / scale;
        res_d = T::max_of(res_d, -rel.clone());
        if *alpha.get(i) < cap_floor {
            res_e = T::max_of(res_e, rel.abs());
        }
    }

    let residuals = [res_a, res_b, res_c, res_d, res_e];
    let failing: Vec<Condition> = Condition::ALL
        .iter()
        .zip(&residuals)
        .filter(|(_, r)| *r > tol)
        .map(|(c, _)| *c)
        .collect();
    let f = |r: &T| r.to_f64_lossy();
    Ok(Certificate {
        tolerance: tol.to_f64_lossy(),
        highest_bidder: f(&residuals[0]),
        pricing: f(&residuals[1]),
        full_allocation: f(&residuals[2]),
        roi_feasible: f(&residuals[3]),
        maximal_pacing: f(&residuals[4]),
        pass: failing.is_empty(),
        slack,
        failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int, Rational};

    fn fixture() -> ValuationMatrix {
        ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]]).unwrap()
    }

    fn fixture_x() -> Allocation {
        Allocation::from_entries(2, 2, [(0, 0, 1.0), (0, 1, 0.5), (1, 1, 0.5)]).unwrap()
    }

    #[test]
    fn fixture_equilibrium_passes() {
        let c = check_equilibrium(
            &fixture(),
            &MultiplierProfile(vec![3.0, 1.0]),
            &fixture_x(),
            &MarketConfig::default(),
            &1e-9,
        )
        .unwrap();
        assert!(c.pass, "{c:?}");
        assert_eq!(c.slack, vec![0.0, 0.0]);
    }

    #[test]
    fn fixture_equilibrium_passes_exactly() {
        let v = fixture().to_exact();
        let x = fixture_x().map(|s| Rational::from_f64_exact(*s));
        let c = check_equilibrium(
            &v,
            &MultiplierProfile(vec![rat_int(3), rat_int(1)]),
            &x,
            &MarketConfig::with_cap(rat_int(10)),
            &rat_int(0),
        )
        .unwrap();
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn unit_multipliers_fail_maximal_pacing() {
        let x = Allocation::from_entries(2, 2, [(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let c = check_equilibrium(
            &fixture(),
            &MultiplierProfile(vec![1.0, 1.0]),
            &x,
            &MarketConfig::default(),
            &1e-9,
        )
        .unwrap();
        assert!(!c.pass);
        assert!(c.failing.contains(&Condition::MaximalPacing));
        assert_eq!(c.slack[0], 1.0);
    }

    #[test]
    fn partial_allocation_fails() {
        let x = Allocation::from_entries(2, 2, [(0, 0, 0.9), (0, 1, 0.5), (1, 1, 0.5)]).unwrap();
        let c = check_equilibrium(
            &fixture(),
            &MultiplierProfile(vec![3.0, 1.0]),
            &x,
            &MarketConfig::default(),
            &1e-9,
        )
        .unwrap();
        assert!(c.failing.contains(&Condition::FullAllocation));
    }

    #[test]
    fn explicit_prices_are_checked() {
        let c = check_candidate(
            &fixture(),
            &MultiplierProfile(vec![3.0, 1.0]),
            &fixture_x(),
            &PriceVector(vec![0.0, 2.5]),
            &MarketConfig::default(),
            &1e-9,
        )
        .unwrap();
        assert!(c.failing.contains(&Condition::Pricing));
    }

    #[test]
    fn cap_bidder_may_keep_slack() {
        let v = ValuationMatrix::from_dense(&[vec![1.0]]).unwrap();
        let x = Allocation::from_entries(1, 1, [(0, 0, 1.0)]).unwrap();
        let cfg = MarketConfig::default();
        let c = check_equilibrium(&v, &MultiplierProfile(vec![cfg.cap]), &x, &cfg, &1e-9).unwrap();
        assert!(c.pass);
        let c = check_equilibrium(&v, &MultiplierProfile(vec![1.0]), &x, &cfg, &1e-9).unwrap();
        assert!(!c.pass);
    }

    #[test]
    fn reserve_at_top_score_allows_partial_sale() {
        let v = ValuationMatrix::from_dense(&[vec![rat(1, 2)]]).unwrap();
        let mut cfg = MarketConfig::with_cap(rat_int(2));
        cfg.reserves = Some(vec![rat_int(1)]);
        // top score 1 equals the reserve: price 1 = 2 * value, so zero share is the
        // only ROI-feasible allocation below the cap.
        let x = Allocation::empty(1, 1);
        let c = check_equilibrium(&v, &MultiplierProfile(vec![rat_int(2)]), &x, &cfg, &rat_int(0))
            .unwrap();
        assert!(c.pass, "{c:?}");
    }
}
