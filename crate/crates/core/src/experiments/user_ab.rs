//! User-side A/B tests: goods (auctions) are split between arms while
//! bidders keep one multiplier across both, so the arms interfere.
//!
//! The estimator is the traffic-normalized contrast: each arm's metric is
//! divided by its share of goods and the treatment figure is compared to
//! the control figure as a relative change.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::rng::child_seed;
use crate::iterative::{solve, IterConfig, SolveResult, SolveStatus};
use crate::market::{Boost, MarketConfig, ValuationMatrix};

use super::stats::{percentile_interval, relative_delta};
use super::LongRecord;

/// Per-auction treatment rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UserTransform {
    Identity,
    /// Boost `c_ij = fraction * v_ij`.
    ProportionalBoost { fraction: f64 },
    /// Boost `c_ij = fraction * (max_k v_kj - v_ij)`, favoring weaker
    /// bidders on each good. A synthetic stand-in for production boost
    /// rules, which are not public.
    GapBoost { fraction: f64 },
    /// Reserve price on the good.
    Reserve { level: f64 },
}

impl UserTransform {
    fn validate(&self) -> Result<()> {
        let x = match self {
            UserTransform::Identity => return Ok(()),
            UserTransform::ProportionalBoost { fraction } | UserTransform::GapBoost { fraction } => {
                *fraction
            }
            UserTransform::Reserve { level } => *level,
        };
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::Invalid(format!("transform parameter {x} must be nonnegative")));
        }
        Ok(())
    }

    fn apply(&self, v: &ValuationMatrix, j: usize, boosts: &mut Vec<Boost>, reserves: &mut [f64]) {
        match self {
            UserTransform::Identity => {}
            UserTransform::ProportionalBoost { fraction } => {
                boosts.extend(v.good(j).iter().map(|&(i, x)| Boost {
                    bidder: i,
                    good: j,
                    value: fraction * x,
                }));
            }
            UserTransform::GapBoost { fraction } => {
                let top = v.good_max(j);
                boosts.extend(v.good(j).iter().map(|&(i, x)| Boost {
                    bidder: i,
                    good: j,
                    value: fraction * (top - x),
                }));
            }
            UserTransform::Reserve { level } => reserves[j] = reserves[j].max(*level),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UserSideAbSpec {
    pub treatment: UserTransform,
    pub control: UserTransform,
    /// Fraction of goods receiving the treatment, strictly inside (0, 1).
    pub traffic: f64,
    /// Re-randomized assignments; the first is the reported A/B run.
    pub replicates: usize,
    /// Coverage of the percentile intervals.
    pub level: f64,
    pub seed: u64,
}

impl Default for UserSideAbSpec {
    fn default() -> Self {
        UserSideAbSpec {
            treatment: UserTransform::ProportionalBoost { fraction: 0.05 },
            control: UserTransform::Identity,
            traffic: 0.5,
            replicates: 50,
            level: 0.95,
            seed: 0,
        }
    }
}

impl UserSideAbSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.traffic > 0.0 && self.traffic < 1.0) {
            return Err(Error::Invalid(format!("traffic {} must lie strictly in (0, 1)", self.traffic)));
        }
        if self.replicates == 0 {
            return Err(Error::Invalid("at least one replicate is needed".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Invalid(format!("interval level {} must lie in (0, 1)", self.level)));
        }
        self.treatment.validate()?;
        self.control.validate()
    }
}

/// Relative revenue and welfare effects.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Effect {
    pub revenue: f64,
    pub welfare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub seed: u64,
    pub status: SolveStatus,
    pub treated_goods: usize,
    pub estimate: Effect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSideAbReport {
    pub spec: UserSideAbSpec,
    /// Status of the all-treatment and all-control solves.
    pub truth_status: (SolveStatus, SolveStatus),
    pub truth: Effect,
    /// First replicate's estimate.
    pub estimate: Effect,
    pub bias: Effect,
    pub replicates: Vec<Replicate>,
    pub revenue_ci: (f64, f64),
    pub welfare_ci: (f64, f64),
    /// Revenue estimate minus welfare estimate, and its interval. An
    /// interval excluding zero means the two metrics disagree.
    pub divergence: f64,
    pub divergence_ci: (f64, f64),
}

impl UserSideAbReport {
    pub fn divergence_flag(&self) -> bool {
        !contains(self.divergence_ci, 0.0)
    }

    /// True when the interval of either metric's estimate excludes the truth.
    pub fn biased(&self) -> bool {
        !contains(self.revenue_ci, self.truth.revenue) || !contains(self.welfare_ci, self.truth.welfare)
    }

    /// True when both estimate intervals contain zero.
    pub fn null_within_ci(&self) -> bool {
        contains(self.revenue_ci, 0.0) && contains(self.welfare_ci, 0.0)
    }

    pub fn records(&self, experiment: &str) -> Vec<LongRecord> {
        let s = self.spec.seed;
        let mut out = vec![
            LongRecord::new(experiment, s, "truth", "revenue", self.truth.revenue),
            LongRecord::new(experiment, s, "truth", "welfare", self.truth.welfare),
            LongRecord::new(experiment, s, "ab", "revenue", self.estimate.revenue),
            LongRecord::new(experiment, s, "ab", "welfare", self.estimate.welfare),
            LongRecord::new(experiment, s, "bias", "revenue", self.bias.revenue),
            LongRecord::new(experiment, s, "bias", "welfare", self.bias.welfare),
            LongRecord::new(experiment, s, "ci_low", "revenue", self.revenue_ci.0),
            LongRecord::new(experiment, s, "ci_high", "revenue", self.revenue_ci.1),
            LongRecord::new(experiment, s, "ci_low", "welfare", self.welfare_ci.0),
            LongRecord::new(experiment, s, "ci_high", "welfare", self.welfare_ci.1),
            LongRecord::new(experiment, s, "ab", "divergence", self.divergence),
        ];
        for r in &self.replicates {
            out.push(LongRecord::new(experiment, r.seed, "replicate", "revenue", r.estimate.revenue));
            out.push(LongRecord::new(experiment, r.seed, "replicate", "welfare", r.estimate.welfare));
        }
        out
    }
}

fn contains(ci: (f64, f64), x: f64) -> bool {
    ci.0 <= x && x <= ci.1
}

/// Builds the market where goods flagged in `treated` get the treatment
/// transform and the rest the control one.
fn arm_market(
    v: &ValuationMatrix,
    base: &MarketConfig,
    spec: &UserSideAbSpec,
    treated: &[bool],
) -> MarketConfig {
    let mut boosts = base.boosts.clone().unwrap_or_default();
    let mut reserves = base.reserves.clone().unwrap_or_else(|| vec![0.0; v.n_goods()]);
    for (j, &t) in treated.iter().enumerate() {
        let rule = if t { &spec.treatment } else { &spec.control };
        rule.apply(v, j, &mut boosts, &mut reserves);
    }
    MarketConfig {
        boosts: (!boosts.is_empty()).then_some(boosts),
        reserves: reserves.iter().any(|r| *r > 0.0).then_some(reserves),
        ..base.clone()
    }
}

/// Revenue and welfare of the goods where `mask` equals `arm`.
fn arm_totals(v: &ValuationMatrix, res: &SolveResult, mask: &[bool], arm: bool) -> (f64, f64) {
    let x = &res.candidate.allocation;
    let mut rev = 0.0;
    let mut wel = 0.0;
    for j in (0..v.n_goods()).filter(|&j| mask[j] == arm) {
        let p = *res.candidate.prices.get(j);
        for (i, s) in x.good(j) {
            rev += s * p;
            wel += s * v.value(*i, j);
        }
    }
    (rev, wel)
}

/// Ground truth versus the traffic-split A/B estimate, with percentile
/// intervals over re-randomized assignments.
pub fn user_side_ab(
    v: &ValuationMatrix,
    spec: &UserSideAbSpec,
    market: &MarketConfig,
    iter: &IterConfig,
) -> Result<UserSideAbReport> {
    spec.validate()?;
    market.validate(v.n_bidders(), v.n_goods())?;
    let m = v.n_goods();
    if m < 2 {
        return Err(Error::Invalid("a split needs at least two goods".into()));
    }
    let all = vec![true; m];
    let none = vec![false; m];
    let (all_t, all_c) = rayon::join(
        || solve(v, &arm_market(v, market, spec, &all), iter),
        || solve(v, &arm_market(v, market, spec, &none), iter),
    );
    let (all_t, all_c) = (all_t?, all_c?);
    let t = arm_totals(v, &all_t, &all, true);
    let c = arm_totals(v, &all_c, &none, false);
    let truth = Effect {
        revenue: relative_delta(t.0, c.0),
        welfare: relative_delta(t.1, c.1),
    };

    let treated_goods = ((spec.traffic * m as f64).round() as usize).clamp(1, m - 1);
    let r = treated_goods as f64 / m as f64;
    let replicates: Vec<Replicate> = (0..spec.replicates)
        .into_par_iter()
        .map(|k| {
            let seed = child_seed(spec.seed, k as u64);
            let mut mask = vec![false; m];
            for j in sample(&mut ChaCha8Rng::seed_from_u64(seed), m, treated_goods) {
                mask[j] = true;
            }
            // identical arms leave the market unchanged by the split
            let fresh;
            let res = if spec.treatment == spec.control {
                &all_c
            } else {
                fresh = solve(v, &arm_market(v, market, spec, &mask), iter)?;
                &fresh
            };
            let (tr, tw) = arm_totals(v, res, &mask, true);
            let (cr, cw) = arm_totals(v, res, &mask, false);
            Ok(Replicate {
                seed,
                status: res.status,
                treated_goods,
                estimate: Effect {
                    revenue: relative_delta(tr / r, cr / (1.0 - r)),
                    welfare: relative_delta(tw / r, cw / (1.0 - r)),
                },
            })
        })
        .collect::<Result<_>>()?;
    let revs: Vec<f64> = replicates.iter().map(|x| x.estimate.revenue).collect();
    let wels: Vec<f64> = replicates.iter().map(|x| x.estimate.welfare).collect();
    let divs: Vec<f64> = revs.iter().zip(&wels).map(|(a, b)| a - b).collect();
    let ci = |xs: &[f64]| percentile_interval(xs, spec.level).expect("nonempty");
    let estimate = replicates[0].estimate;
    Ok(UserSideAbReport {
        spec: spec.clone(),
        truth_status: (all_t.status, all_c.status),
        truth,
        estimate,
        bias: Effect {
            revenue: estimate.revenue - truth.revenue,
            welfare: estimate.welfare - truth.welfare,
        },
        revenue_ci: ci(&revs),
        welfare_ci: ci(&wels),
        divergence: divs[0],
        divergence_ci: ci(&divs),
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_correlated;

    #[test]
    fn transforms_build_boosts_and_reserves() {
        let v = ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]]).unwrap();
        let spec = UserSideAbSpec {
            treatment: UserTransform::GapBoost { fraction: 0.5 },
            control: UserTransform::Reserve { level: 0.25 },
            ..UserSideAbSpec::default()
        };
        let cfg = arm_market(&v, &MarketConfig::default(), &spec, &[false, true]);
        assert_eq!(cfg.reserves, Some(vec![0.25, 0.0]));
        let b = cfg.boosts.unwrap();
        assert_eq!(b.len(), 2);
        assert!(b.iter().any(|x| x.bidder == 0 && x.good == 1 && x.value == 1.0));
        assert!(b.iter().any(|x| x.bidder == 1 && x.good == 1 && x.value == 0.0));
    }

    #[test]
    fn identical_arms_have_zero_truth() {
        let v = gen_correlated(4, 8, 0.3, 11).unwrap();
        let spec = UserSideAbSpec {
            treatment: UserTransform::Identity,
            control: UserTransform::Identity,
            replicates: 8,
            ..UserSideAbSpec::default()
        };
        let r = user_side_ab(&v, &spec, &MarketConfig::default(), &IterConfig::default()).unwrap();
        assert_eq!(r.truth, Effect::default());
        assert!(r.replicates.iter().all(|x| x.treated_goods == 4));
        let again = user_side_ab(&v, &spec, &MarketConfig::default(), &IterConfig::default()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn traffic_must_be_interior() {
        for traffic in [0.0, 1.0, -0.1] {
            let spec = UserSideAbSpec {
                traffic,
                ..UserSideAbSpec::default()
            };
            assert!(spec.validate().is_err());
        }
    }
}
