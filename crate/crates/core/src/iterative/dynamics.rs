use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{
    check_candidate, run_auctions, Allocation, Certificate, EquilibriumCandidate, MarketConfig,
    MultiplierProfile, PriceVector, ValuationMatrix,
};

use super::{DirectionRule, IterConfig, IterTrace, StepRule, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    /// The window candidate passed the certificate.
    Converged,
    /// The watch-set metrics settled; the certificate may still fail.
    Stable,
    NonConverged,
}

#[derive(Debug, Clone)]
struct Round {
    alpha: Vec<f64>,
    /// `(good, bidder, share, price)` for every winner.
    wins: Vec<(usize, usize, f64, f64)>,
    slack: Vec<f64>,
    value: Vec<f64>,
    spend: Vec<f64>,
}

/// Multipliers plus the window of recent auction outcomes.
#[derive(Debug, Clone)]
pub struct IterState {
    pub t: usize,
    pub alpha: Vec<f64>,
    norm: Vec<f64>,
    window: usize,
    averaging: usize,
    rounds: VecDeque<Round>,
}

/// Quantities computed by one [`step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub t: usize,
    /// Instant slack normalized by each bidder's total valuation.
    pub slack: Vec<f64>,
    /// Window slack sum, same normalization.
    pub window_slack: Vec<f64>,
    pub direction: Vec<f64>,
    pub step: Vec<f64>,
}

impl IterState {
    pub fn new(v: &ValuationMatrix, cfg: &IterConfig, market: &MarketConfig) -> Result<Self> {
        cfg.validate()?;
        let n = v.n_bidders();
        let alpha = match &cfg.initial {
            Some(a) => a.clone(),
            None => vec![1.0; n],
        };
        MultiplierProfile(alpha.clone()).validate(n, &market.cap)?;
        let norm = (0..n)
            .map(|i| {
                let s = v.bidder_total(i);
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            t: 0,
            alpha,
            norm,
            window: cfg.window,
            averaging: cfg.averaging(),
            rounds: VecDeque::with_capacity(cfg.window.max(cfg.averaging())),
        })
    }

    /// Rounds available for the candidate average.
    pub fn rounds_in_window(&self) -> usize {
        self.rounds.len().min(self.averaging)
    }

    /// The most recent `k` rounds.
    fn recent(&self, k: usize) -> impl Iterator<Item = &Round> {
        self.rounds.iter().skip(self.rounds.len().saturating_sub(k))
    }

    /// Averages multipliers, shares and spend-weighted prices over the
    /// window.
    pub fn window_candidate(&self, v: &ValuationMatrix, cap: f64) -> EquilibriumCandidate {
        let (n, m) = (v.n_bidders(), v.n_goods());
        let k = self.rounds_in_window().max(1) as f64;
        let mut alpha = vec![0.0; n];
        let mut x = Allocation::empty(n, m);
        let mut paid = vec![0.0; m];
        let mut sold = vec![0.0; m];
        for r in self.recent(self.averaging) {
            for (a, b) in alpha.iter_mut().zip(&r.alpha) {
                *a += b;
            }
            for &(j, i, share, price) in &r.wins {
                x.add(i, j, share);
                paid[j] += share * price;
                sold[j] += share;
            }
        }
        let alpha = alpha.into_iter().map(|a| (a / k).clamp(1.0, cap)).collect();
        let prices = paid
            .iter()
            .zip(&sold)
            .map(|(p, s)| if *s > 0.0 { p / s } else { 0.0 })
            .collect();
        EquilibriumCandidate {
            alpha: MultiplierProfile(alpha),
            allocation: x.scaled(&(1.0 / k)),
            prices: PriceVector(prices),
        }
    }

    fn window_value(&self, i: usize) -> f64 {
        self.recent(self.window).map(|r| r.value[i]).sum()
    }
}

/// Runs one round of auctions and moves every multiplier.
pub fn step(
    v: &ValuationMatrix,
    market: &MarketConfig,
    cfg: &IterConfig,
    state: &mut IterState,
) -> Result<StepInfo> {
    let n = v.n_bidders();
    state.t += 1;
    let t = state.t;
    let out = run_auctions(v, &MultiplierProfile(state.alpha.clone()), market)?;

    let mut wins = Vec::new();
    let mut value = vec![0.0; n];
    let mut spend = vec![0.0; n];
    for (j, g) in out.goods.iter().enumerate() {
        let share = 1.0 / g.winners.len().max(1) as f64;
        for (&i, &price) in g.winners.iter().zip(&g.winner_prices) {
            wins.push((j, i, share, price));
            value[i] += share * v.value(i, j);
            spend[i] += share * price;
        }
    }
    let slack: Vec<f64> = value.iter().zip(&spend).map(|(a, b)| a - b).collect();
    if state.rounds.len() == state.window.max(state.averaging) {
        state.rounds.pop_front();
    }
    state.rounds.push_back(Round {
        alpha: state.alpha.clone(),
        wins,
        slack: slack.clone(),
        value,
        spend,
    });

    let mut info = StepInfo {
        t,
        slack: vec![0.0; n],
        window_slack: vec![0.0; n],
        direction: vec![0.0; n],
        step: vec![0.0; n],
    };
    let cap = market.cap;
    for i in 0..n {
        let inst = slack[i] / state.norm[i];
        let win: f64 = state.recent(state.window).map(|r| r.slack[i]).sum::<f64>() / state.norm[i];
        let d = match cfg.direction {
            DirectionRule::Instant => sign(inst),
            DirectionRule::Windowed => 0.5 * sign(inst) + 0.5 * sign(win),
        };
        let s = match cfg.step {
            StepRule::SlackMin => cfg.step_scale / t as f64 * inst.abs().min(win.abs()),
            StepRule::LogRoas => {
                let val: f64 = state.recent(state.window).map(|r| r.value[i]).sum();
                let pay: f64 = state.recent(state.window).map(|r| r.spend[i]).sum();
                let ratio = if pay > 0.0 && val > 0.0 {
                    (val / pay).ln().abs()
                } else {
                    cap.ln()
                };
                cfg.step_scale * ratio
            }
        };
        let next = (state.alpha[i] + d * s).clamp(1.0, cap);
        if !next.is_finite() {
            return Err(Error::Numerical(format!(
                "multiplier of bidder {i} became non-finite at iteration {t}"
            )));
        }
        state.alpha[i] = next;
        info.slack[i] = inst;
        info.window_slack[i] = win;
        info.direction[i] = d;
        info.step[i] = s;
    }
    Ok(info)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best window candidate seen (the passing one when converged).
    pub candidate: EquilibriumCandidate,
    pub certificate: Certificate,
    /// Multipliers after the last iteration.
    pub final_alpha: Vec<f64>,
    pub trace: IterTrace,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Iterates [`step`] until the window candidate passes the certificate at
/// `cfg.residual_tol`, the watch set settles, or the budget runs out.
pub fn solve(v: &ValuationMatrix, market: &MarketConfig, cfg: &IterConfig) -> Result<SolveResult> {
    market.validate(v.n_bidders(), v.n_goods())?;
    let mut state = IterState::new(v, cfg, market)?;
    let budget = cfg.iteration_budget(v.n_bidders(), v.n_goods());
    let tol = cfg.residual_tol;
    let mut trace = IterTrace::default();
    let mut best: Option<(EquilibriumCandidate, Certificate)> = None;
    let mut status = SolveStatus::NonConverged;
    let mut last_watch: Option<Vec<f64>> = None;

    while state.t < budget {
        let info = step(v, market, cfg, &mut state)?;
        let t = info.t;
        let evaluate = state.rounds_in_window() == cfg.averaging() || t == budget;
        let mut residual = None;
        if evaluate {
            let cand = state.window_candidate(v, market.cap);
            let cert = check_candidate(
                v,
                &cand.alpha,
                &cand.allocation,
                &cand.prices,
                market,
                &tol,
            )?;
            let worst = cert.worst();
            residual = Some(worst);
            let improves = best.as_ref().is_none_or(|(_, c)| worst < c.worst());
            let passed = cert.pass;
            if improves || passed {
                trace.best_residual = Some(worst);
                trace.best_iteration = Some(t);
                best = Some((cand, cert));
            }
            if passed {
                status = SolveStatus::Converged;
            }
        }
        if t % cfg.trace_every == 0 || status == SolveStatus::Converged || t == budget {
            trace.records.push(TraceRecord {
                t,
                alpha: state.alpha.clone(),
                slack: info.slack,
                residual,
            });
        }
        if status == SolveStatus::Converged {
            break;
        }
        if let Some(w) = &cfg.watch {
            if t % cfg.window == 0 {
                let now: Vec<f64> = w.bidders.iter().map(|&i| state.window_value(i)).collect();
                if let Some(prev) = &last_watch {
                    let settled = now.iter().zip(prev).all(|(a, b)| {
                        (a - b).abs() <= w.rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
                    });
                    if settled {
                        status = SolveStatus::Stable;
                        break;
                    }
                }
                last_watch = Some(now);
            }
        }
    }
    trace.iterations = state.t;
    let (candidate, certificate) = best.expect("at least one candidate is evaluated");
    Ok(SolveResult {
        status,
        candidate,
        certificate,
        final_alpha: state.alpha,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> ValuationMatrix {
        ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]]).unwrap()
    }

    #[test]
    fn zero_slack_interior_bidder_stays() {
        // 3 identical bidders on one good at alpha = 1: price equals value.
        let v = ValuationMatrix::from_dense(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let cfg = IterConfig::default();
        let market = MarketConfig::default();
        let mut st = IterState::new(&v, &cfg, &market).unwrap();
        let info = step(&v, &market, &cfg, &mut st).unwrap();
        assert_eq!(info.slack, vec![0.0; 3]);
        assert_eq!(st.alpha, vec![1.0; 3]);
    }

    #[test]
    fn overpaying_bidder_lowers_multiplier() {
        let v = ValuationMatrix::from_dense(&[vec![1.0], vec![1.5]]).unwrap();
        let cfg = IterConfig {
            initial: Some(vec![2.0, 1.0]),
            ..IterConfig::default()
        };
        let market = MarketConfig::default();
        let mut st = IterState::new(&v, &cfg, &market).unwrap();
        step(&v, &market, &cfg, &mut st).unwrap();
        assert!(st.alpha[0] < 2.0);
    }

    #[test]
    fn fixture_transient_bidder_two_rises_then_returns() {
        let v = fixture();
        let cfg = IterConfig::default();
        let market = MarketConfig::default();
        let mut st = IterState::new(&v, &cfg, &market).unwrap();
        let mut peak: f64 = 1.0;
        for _ in 0..50 {
            step(&v, &market, &cfg, &mut st).unwrap();
            peak = peak.max(st.alpha[1]);
        }
        assert!(peak > 1.0);
        let r = solve(&v, &market, &cfg).unwrap();
        assert!(r.converged());
        assert!(r.candidate.alpha.0[1] < 1.05);
    }

    #[test]
    fn three_identical_bidders_share_one_good() {
        let v = ValuationMatrix::from_dense(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let r = solve(&v, &MarketConfig::default(), &IterConfig::default()).unwrap();
        assert!(r.converged());
        assert_eq!(r.candidate.alpha.0, vec![1.0; 3]);
        for i in 0..3 {
            assert!((r.candidate.allocation.share(i, 0) - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(r.candidate.prices.0[0], 1.0);
    }

    #[test]
    fn lone_bidder_reaches_cap() {
        let v = ValuationMatrix::from_dense(&[vec![2.0]]).unwrap();
        let r = solve(&v, &MarketConfig::default(), &IterConfig::default()).unwrap();
        assert!(r.converged(), "{:?}", r.certificate);
        assert_eq!(r.candidate.alpha.0[0], 10.0);
        assert_eq!(r.candidate.prices.0[0], 0.0);
    }
}
