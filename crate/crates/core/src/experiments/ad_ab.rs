//! Ad-side A/B tests: bidders (not auctions) are split between two
//! bidding algorithms that compete in the same auctions.
//!
//! Bidders run a PID controller on their multiplier, updated after every
//! episode of second-price auctions on the stochastic ad-side stream. A
//! winner receives the cell's Bernoulli conversion, not its expected value.
//!
//! Designs:
//! - ground truth: all bidders run the treatment in one simulation and the
//!   control in another, on the same stream;
//! - naive: a random half of the bidders runs the treatment, and the two
//!   halves are compared within the one market;
//! - boosted: naive, plus a uniform additive boost on treatment scores,
//!   recomputed after each episode so that it would have split that
//!   episode's goods evenly between the groups.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::rng::child_seed;
use crate::instance::{gen_adside_stochastic, Episode};
use crate::market::DEFAULT_CAP;

use super::stats::{paired_location_test, relative_delta, LocationTest};
use super::LongRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Initial multiplier, at least 1.
    pub alpha0: f64,
}

impl PidParams {
    pub fn validate(&self) -> Result<()> {
        if ![self.kp, self.ki, self.kd].iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("PID gain".into()));
        }
        if !(self.alpha0.is_finite() && self.alpha0 >= 1.0) {
            return Err(Error::Invalid(format!("alpha0 {} must be at least 1", self.alpha0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    pub multiplier: f64,
    pub integral: f64,
    pub prev_error: f64,
}

impl PidState {
    pub fn new(p: &PidParams) -> Self {
        PidState {
            multiplier: p.alpha0,
            integral: 0.0,
            prev_error: 0.0,
        }
    }
}

/// Floor applied to episode value and spend before taking their log ratio.
pub const PID_FLOOR: f64 = 1e-6;

/// One controller step on an episode's realized value and spend; returns
/// the new multiplier, clamped to `[1, cap]`.
pub fn pid_update(p: &PidParams, state: &mut PidState, value: f64, spend: f64, cap: f64) -> f64 {
    let e = (value.max(PID_FLOOR) / spend.max(PID_FLOOR)).ln();
    state.integral += e;
    let u = p.kp * e + p.ki * state.integral + p.kd * (e - state.prev_error);
    state.prev_error = e;
    state.multiplier = (state.multiplier * u.exp()).clamp(1.0, cap);
    state.multiplier
}

/// Uniform boost for the treatment group chosen from one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostChoice {
    pub c: f64,
    /// Range of boosts with the same treatment win count; a single point
    /// when the count only balances at a tie.
    pub interval: (f64, f64),
    /// Treatment wins at `c`, ties counted as half.
    pub treatment_wins: f64,
    pub exact: bool,
}

/// Treatment wins with boost `c` when treatment wins strictly above the
/// control score, ties counted as half.
pub fn treatment_wins(treatment: &[f64], control: &[f64], c: f64) -> f64 {
    treatment
        .iter()
        .zip(control)
        .map(|(t, k)| {
            let s = t + c;
            if s > *k {
                1.0
            } else if s == *k {
                0.5
            } else {
                0.0
            }
        })
        .sum()
}

/// Boost `c` under which the best treatment score plus `c` would have won
/// exactly half of the auctions against the best control score.
///
/// The treatment win count is a nondecreasing step function of `c` that
/// jumps at `control - treatment` of each auction. Among the pieces (open
/// intervals between jumps, and the jump points themselves) the one closest
/// to an even split is chosen, preferring the smaller `|c|` on ties, and its
/// midpoint returned. Unbounded pieces are never chosen.
pub fn boosted_counterfactual(treatment: &[f64], control: &[f64]) -> BoostChoice {
    let s = treatment.len().min(control.len());
    let half = s as f64 / 2.0;
    let mut jumps: Vec<f64> = treatment
        .iter()
        .zip(control)
        .map(|(t, k)| k - t)
        .collect();
    jumps.sort_by(f64::total_cmp);
    let mut points: Vec<(f64, usize)> = Vec::new();
    for u in jumps {
        match points.last_mut() {
            Some((x, c)) if *x == u => *c += 1,
            _ => points.push((u, 1)),
        }
    }
    if points.is_empty() {
        return BoostChoice {
            c: 0.0,
            interval: (0.0, 0.0),
            treatment_wins: 0.0,
            exact: s == 0,
        };
    }
    // (imbalance, |mid|, lo, hi, wins). Wins are evaluated at the midpoint
    // rather than counted, since `t + (k - t)` need not round back to `k`.
    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    let mut consider = |lo: f64, hi: f64| {
        let mid = 0.5 * (lo + hi);
        let wins = treatment_wins(treatment, control, mid);
        let key = ((wins - half).abs(), mid.abs());
        if best.is_none_or(|b| key < (b.0, b.1)) {
            best = Some((key.0, key.1, lo, hi, wins));
        }
    };
    // The counted wins locate the pieces near an even split; only those
    // are evaluated.
    let mut below = 0usize;
    for (k, &(u, cnt)) in points.iter().enumerate() {
        let at = below as f64 + cnt as f64 / 2.0;
        below += cnt;
        if (at - half).abs() <= 1.0 + cnt as f64 {
            consider(u, u);
        }
        if let Some(&(next, _)) = points.get(k + 1) {
            if (below as f64 - half).abs() <= 1.0 + cnt as f64 {
                consider(u, next);
            }
        }
    }
    let (imbalance, _, lo, hi, wins) = best.expect("at least one piece");
    BoostChoice {
        c: 0.5 * (lo + hi),
        interval: (lo, hi),
        treatment_wins: wins,
        exact: imbalance == 0.0,
    }
}

/// Band of final ROAS counted as success.
pub const SUCCESS_BAND: (f64, f64) = (0.975, 1.025);

/// Revenue, welfare and ROAS-band revenue shares of a set of bidders.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdSideMetrics {
    pub revenue: f64,
    pub welfare: f64,
    pub success_rate: f64,
    pub failure_rate: f64,
}

impl AdSideMetrics {
    pub const NAMES: [&'static str; 4] = ["revenue", "welfare", "success_rate", "failure_rate"];

    pub fn of(value: &[f64], spend: &[f64], members: impl Iterator<Item = usize>) -> Self {
        let (mut rev, mut wel, mut ok, mut over) = (0.0, 0.0, 0.0, 0.0);
        for i in members {
            rev += spend[i];
            wel += value[i];
            if spend[i] > 0.0 {
                let roas = value[i] / spend[i];
                if (SUCCESS_BAND.0..=SUCCESS_BAND.1).contains(&roas) {
                    ok += spend[i];
                } else if roas > SUCCESS_BAND.1 {
                    over += spend[i];
                }
            }
        }
        let share = |x: f64| if rev > 0.0 { x / rev } else { 0.0 };
        AdSideMetrics {
            revenue: rev,
            welfare: wel,
            success_rate: share(ok),
            failure_rate: share(over),
        }
    }

    pub fn get(&self, k: usize) -> f64 {
        [self.revenue, self.welfare, self.success_rate, self.failure_rate][k]
    }
}

/// Totals of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    /// Realized conversions per bidder.
    pub value: Vec<f64>,
    pub spend: Vec<f64>,
    pub final_alpha: Vec<f64>,
    /// Boost used in each episode (zero without boosting).
    pub boosts: Vec<f64>,
}

/// Runs the episodes with one controller per bidder.
///
/// With `boosted` set, `treated` marks the treatment group and its scores
/// get the counterfactual boost from the previous episode (zero in the
/// first). Winners pay the second-highest boosted score minus their own
/// boost, floored at zero; exact score ties go to the lowest index.
pub fn simulate(
    episodes: &[Episode],
    params: &[PidParams],
    treated: &[bool],
    boosted: bool,
    cap: f64,
) -> SimOutcome {
    let n = params.len();
    let mut state: Vec<PidState> = params.iter().map(PidState::new).collect();
    let mut value = vec![0.0; n];
    let mut spend = vec![0.0; n];
    let mut boosts = Vec::with_capacity(episodes.len());
    let mut c = 0.0;
    for ep in episodes {
        let slots = ep.slots();
        let mut ep_value = vec![0.0; n];
        let mut ep_spend = vec![0.0; n];
        let mut best_t = Vec::with_capacity(if boosted { slots } else { 0 });
        let mut best_c = Vec::with_capacity(best_t.capacity());
        for s in 0..slots {
            let (mut top, mut second) = ((usize::MAX, f64::NEG_INFINITY), f64::NEG_INFINITY);
            let (mut bt, mut bc) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for i in 0..n {
                let raw = state[i].multiplier * ep.value(s, i);
                let own = if boosted && treated[i] { c } else { 0.0 };
                if boosted {
                    if treated[i] {
                        bt = bt.max(raw);
                    } else {
                        bc = bc.max(raw);
                    }
                }
                let score = raw + own;
                if score > top.1 {
                    second = top.1;
                    top = (i, score);
                } else if score > second {
                    second = score;
                }
            }
            let w = top.0;
            let own = if boosted && treated[w] { c } else { 0.0 };
            let price = if second.is_finite() { (second - own).max(0.0) } else { 0.0 };
            ep_spend[w] += price;
            if ep.realized(s, w) {
                ep_value[w] += 1.0;
            }
            if boosted {
                best_t.push(bt);
                best_c.push(bc);
            }
        }
        boosts.push(c);
        for i in 0..n {
            value[i] += ep_value[i];
            spend[i] += ep_spend[i];
            pid_update(&params[i], &mut state[i], ep_value[i], ep_spend[i], cap);
        }
        if boosted {
            c = boosted_counterfactual(&best_t, &best_c).c;
        }
    }
    SimOutcome {
        value,
        spend,
        final_alpha: state.iter().map(|s| s.multiplier).collect(),
        boosts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdSideDesign {
    GroundTruth,
    Naive,
    Boosted,
}

impl AdSideDesign {
    pub const ALL: [AdSideDesign; 3] = [AdSideDesign::GroundTruth, AdSideDesign::Naive, AdSideDesign::Boosted];

    pub fn name(self) -> &'static str {
        match self {
            AdSideDesign::GroundTruth => "ground-truth",
            AdSideDesign::Naive => "naive",
            AdSideDesign::Boosted => "boosted",
        }
    }
}

/// Stream size, repetitions and test level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdSideSpec {
    /// Bidders; split designs need an even count.
    pub n: usize,
    pub episodes: usize,
    pub auctions_per_episode: usize,
    pub runs: usize,
    pub seed: u64,
    pub cap: f64,
    pub test_level: f64,
}

impl Default for AdSideSpec {
    fn default() -> Self {
        AdSideSpec {
            n: 50,
            episodes: 100,
            auctions_per_episode: 200,
            runs: 30,
            seed: 0,
            cap: DEFAULT_CAP,
            test_level: 0.05,
        }
    }
}

impl AdSideSpec {
    /// Full scale: 200 bidders, 400 episodes of 1000 auctions, 100 runs.
    pub fn paper_scale(seed: u64) -> Self {
        AdSideSpec {
            n: 200,
            episodes: 400,
            auctions_per_episode: 1000,
            runs: 100,
            seed,
            ..AdSideSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::Invalid(format!("bidder count {} must be even and at least 2", self.n)));
        }
        if self.episodes == 0 || self.auctions_per_episode == 0 || self.runs == 0 {
            return Err(Error::Invalid("episodes, auctions and runs must be positive".into()));
        }
        if !(self.cap.is_finite() && self.cap >= 1.0) {
            return Err(Error::Invalid(format!("cap {} must be at least 1", self.cap)));
        }
        if !(self.test_level > 0.0 && self.test_level < 1.0) {
            return Err(Error::Invalid(format!("test level {} must lie in (0, 1)", self.test_level)));
        }
        Ok(())
    }

    /// Stream seed of run `r`.
    pub fn run_seed(&self, r: usize) -> u64 {
        child_seed(self.seed, r as u64)
    }
}

/// Treatment and control metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub treatment: AdSideMetrics,
    pub control: AdSideMetrics,
}

impl RunMetrics {
    pub fn diff(&self, k: usize) -> f64 {
        self.treatment.get(k) - self.control.get(k)
    }
}

/// Relative difference of the treatment and control means of one metric,
/// with a paired test on the per-run differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: String,
    pub delta: f64,
    pub test: LocationTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdSideReport {
    pub design: AdSideDesign,
    pub control: PidParams,
    pub treatment: PidParams,
    pub runs: Vec<RunMetrics>,
    pub deltas: Vec<MetricDelta>,
}

impl AdSideReport {
    pub fn delta(&self, metric: &str) -> Option<f64> {
        self.deltas.iter().find(|d| d.metric == metric).map(|d| d.delta)
    }

    pub fn any_significant(&self) -> bool {
        self.deltas.iter().any(|d| d.test.significant)
    }

    pub fn records(&self, experiment: &str, pair: usize) -> Vec<LongRecord> {
        let arm = format!("pair{pair}_{}", self.design.name());
        let mut out = Vec::new();
        for r in &self.runs {
            for (k, name) in AdSideMetrics::NAMES.iter().enumerate() {
                out.push(LongRecord::new(experiment, r.seed, format!("{arm}_treatment"), name, r.treatment.get(k)));
                out.push(LongRecord::new(experiment, r.seed, format!("{arm}_control"), name, r.control.get(k)));
            }
        }
        for d in &self.deltas {
            out.push(LongRecord::new(experiment, 0, &arm, &format!("delta_{}", d.metric), d.delta));
            out.push(LongRecord::new(experiment, 0, &arm, &format!("p_{}", d.metric), d.test.p_value));
        }
        out
    }
}

fn summarize(
    design: AdSideDesign,
    control: PidParams,
    treatment: PidParams,
    runs: Vec<RunMetrics>,
    level: f64,
) -> AdSideReport {
    let deltas = AdSideMetrics::NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let d: Vec<f64> = runs.iter().map(|r| r.diff(k)).collect();
            let mean = |f: fn(&RunMetrics) -> &AdSideMetrics| {
                runs.iter().map(|r| f(r).get(k)).sum::<f64>() / runs.len() as f64
            };
            MetricDelta {
                metric: name.to_string(),
                delta: relative_delta(mean(|r| &r.treatment), mean(|r| &r.control)),
                test: paired_location_test(&d, level),
            }
        })
        .collect();
    AdSideReport {
        design,
        control,
        treatment,
        runs,
        deltas,
    }
}

/// Random half of `n` bidders, seeded.
pub fn split_groups(n: usize, seed: u64) -> Vec<bool> {
    let mut treated = vec![false; n];
    for i in sample(&mut ChaCha8Rng::seed_from_u64(seed), n, n / 2) {
        treated[i] = true;
    }
    treated
}

fn run_design(
    episodes: &[Episode],
    spec: &AdSideSpec,
    seed: u64,
    control: PidParams,
    treatment: PidParams,
    design: AdSideDesign,
) -> RunMetrics {
    let n = spec.n;
    match design {
        AdSideDesign::GroundTruth => {
            let none = vec![false; n];
            let t = simulate(episodes, &vec![treatment; n], &none, false, spec.cap);
            let c = simulate(episodes, &vec![control; n], &none, false, spec.cap);
            RunMetrics {
                seed,
                treatment: AdSideMetrics::of(&t.value, &t.spend, 0..n),
                control: AdSideMetrics::of(&c.value, &c.spend, 0..n),
            }
        }
        AdSideDesign::Naive | AdSideDesign::Boosted => {
            let treated = split_groups(n, child_seed(seed, 1));
            let params: Vec<PidParams> = treated
                .iter()
                .map(|&t| if t { treatment } else { control })
                .collect();
            let out = simulate(episodes, &params, &treated, design == AdSideDesign::Boosted, spec.cap);
            RunMetrics {
                seed,
                treatment: AdSideMetrics::of(&out.value, &out.spend, (0..n).filter(|&i| treated[i])),
                control: AdSideMetrics::of(&out.value, &out.spend, (0..n).filter(|&i| !treated[i])),
            }
        }
    }
}

/// Every `(control, treatment)` pair under every design, one report per
/// pair and design in that order. Each run's stream is generated once and
/// shared by all pairs and designs, so ground truth and the split designs
/// are paired by run.
pub fn ad_side_study(
    spec: &AdSideSpec,
    pairs: &[(PidParams, PidParams)],
    designs: &[AdSideDesign],
) -> Result<Vec<AdSideReport>> {
    spec.validate()?;
    for (c, t) in pairs {
        c.validate()?;
        t.validate()?;
    }
    let per_run: Vec<Vec<RunMetrics>> = (0..spec.runs)
        .into_par_iter()
        .map(|r| {
            let seed = spec.run_seed(r);
            let stream = gen_adside_stochastic(spec.n, spec.episodes, spec.auctions_per_episode, seed)?;
            let episodes: Vec<Episode> = (0..spec.episodes).map(|e| stream.episode(e)).collect();
            let jobs: Vec<(PidParams, PidParams, AdSideDesign)> = pairs
                .iter()
                .flat_map(|&(c, t)| designs.iter().map(move |&d| (c, t, d)))
                .collect();
            Ok(jobs
                .into_par_iter()
                .map(|(c, t, d)| run_design(&episodes, spec, seed, c, t, d))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut reports = Vec::new();
    let mut k = 0;
    for &(c, t) in pairs {
        for &d in designs {
            let runs = per_run.iter().map(|r| r[k].clone()).collect();
            reports.push(summarize(d, c, t, runs, spec.test_level));
            k += 1;
        }
    }
    Ok(reports)
}

/// A single pair under a single design.
pub fn ad_side_ab(
    spec: &AdSideSpec,
    control: PidParams,
    treatment: PidParams,
    design: AdSideDesign,
) -> Result<AdSideReport> {
    Ok(ad_side_study(spec, &[(control, treatment)], &[design])?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: PidParams = PidParams {
        kp: 0.1,
        ki: 0.01,
        kd: 0.0,
        alpha0: 1.5,
    };

    #[test]
    fn pid_zero_error_keeps_multiplier() {
        let mut s = PidState::new(&P);
        assert_eq!(pid_update(&P, &mut s, 2.0, 2.0, 10.0), 1.5);
        assert_eq!(s.integral, 0.0);
    }

    #[test]
    fn pid_underspending_raises_multiplier() {
        let mut s = PidState::new(&P);
        let a = pid_update(&P, &mut s, 2.0, 1.0, 10.0);
        let e = 2f64.ln();
        assert!((a - 1.5 * (0.1 * e + 0.01 * e).exp()).abs() < 1e-15);
        // zero spend is floored, not a division by zero
        let mut s = PidState::new(&P);
        let e = 1e6f64.ln();
        let a = pid_update(&P, &mut s, 1.0, 0.0, 10.0);
        assert!((a - 1.5 * (0.11 * e).exp()).abs() < 1e-12);
        // clamp from below
        let mut s = PidState::new(&P);
        assert_eq!(pid_update(&P, &mut s, 0.0, 1.0, 10.0), 1.0);
    }

    #[test]
    fn pid_closes_the_loop_on_a_stationary_price_stream() {
        // 1000 auctions per episode, value 1, competing bids 3k/1000. A
        // multiplier a wins every bid below a, so ROAS is about 2 / a.
        let p = PidParams {
            kp: 0.5,
            ki: 0.0,
            kd: 0.0,
            alpha0: 1.0,
        };
        let mut s = PidState::new(&p);
        let mut errors = Vec::new();
        for _ in 0..10 {
            let a = s.multiplier;
            let won: Vec<f64> = (1..1000).map(|k| 3.0 * k as f64 / 1000.0).filter(|&b| b < a).collect();
            let value = won.len() as f64;
            let spend: f64 = won.iter().sum();
            errors.push((value / spend).ln().abs());
            pid_update(&p, &mut s, value, spend, 10.0);
        }
        assert!(errors[9] < 0.1 * errors[0], "{errors:?}");
        assert!((s.multiplier - 2.0).abs() < 0.02, "{}", s.multiplier);
    }

    #[test]
    fn counterfactual_mirrored_groups_need_no_boost() {
        let t = [1.0, 3.0, 2.0, 0.5];
        let c = [3.0, 1.0, 0.5, 2.0];
        let b = boosted_counterfactual(&t, &c);
        assert_eq!(b.c, 0.0);
        assert!(b.exact);
        assert_eq!(treatment_wins(&t, &c, b.c), 2.0);
    }

    #[test]
    fn counterfactual_recovers_uniform_shift() {
        let c = [1.0, 2.0, 3.0, 4.0];
        let t: Vec<f64> = c.iter().map(|x| x - 0.25).collect();
        let b = boosted_counterfactual(&t, &c);
        assert_eq!(b.c, 0.25);
        assert!(b.exact);
        // with a matched shift only the jump point balances the groups
        assert_eq!(b.interval, (0.25, 0.25));
    }

    #[test]
    fn counterfactual_takes_interval_midpoint() {
        // jumps at -1, 0, 2, 5: two wins for c in (0, 2]
        let t = [2.0, 0.0, 0.0, 0.0];
        let c = [1.0, 0.0, 2.0, 5.0];
        let b = boosted_counterfactual(&t, &c);
        assert_eq!(b.interval, (0.0, 2.0));
        assert_eq!(b.c, 1.0);
        assert_eq!(treatment_wins(&t, &c, b.c), 2.0);
        // odd count: only a tie at the middle jump balances
        let b = boosted_counterfactual(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]);
        assert_eq!(b.treatment_wins, 1.5);
        assert_eq!(b.c, 2.0);
        // no balancing piece: nearest split, smallest boost
        let b = boosted_counterfactual(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(b.exact);
        let b = boosted_counterfactual(&[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 1.0, 3.0]);
        assert!(!b.exact);
        assert_eq!(b.interval, (1.0, 1.0));
        assert_eq!(b.treatment_wins, 1.5);
    }

    fn small_spec(seed: u64) -> AdSideSpec {
        AdSideSpec {
            n: 6,
            episodes: 5,
            auctions_per_episode: 30,
            runs: 4,
            seed,
            ..AdSideSpec::default()
        }
    }

    #[test]
    fn identical_arms_in_ground_truth_are_exactly_equal() {
        let r = ad_side_ab(&small_spec(3), P, P, AdSideDesign::GroundTruth).unwrap();
        assert!(r.deltas.iter().all(|d| d.delta == 0.0 && !d.test.significant));
    }

    #[test]
    fn study_is_seeded() {
        let q = PidParams { kp: 0.3, ..P };
        let a = ad_side_study(&small_spec(9), &[(P, q)], &AdSideDesign::ALL).unwrap();
        let b = ad_side_study(&small_spec(9), &[(P, q)], &AdSideDesign::ALL).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a[2].design, AdSideDesign::Boosted);
    }

    #[test]
    fn odd_bidder_counts_are_rejected() {
        let spec = AdSideSpec { n: 5, ..small_spec(0) };
        assert!(ad_side_ab(&spec, P, P, AdSideDesign::Naive).is_err());
    }

    #[test]
    fn metrics_bands() {
        let value = [1.0, 2.0, 1.0, 0.0];
        let spend = [1.0, 1.0, 2.0, 0.0];
        let m = AdSideMetrics::of(&value, &spend, 0..4);
        assert_eq!(m.revenue, 4.0);
        assert_eq!(m.welfare, 4.0);
        assert_eq!(m.success_rate, 0.25);
        assert_eq!(m.failure_rate, 0.25);
    }
}
