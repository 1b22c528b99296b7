//! Property tests over random markets, streams and outcomes.

use autobid::exact::{export_miblp, first_price_equivalent, MiblpObjective};
use autobid::experiments::{
    boosted_counterfactual, gap_report, sensitivity_from, simulate, treatment_wins, AdSideMetrics, PidParams,
};
use autobid::instance::{gen_adside_stochastic, gen_complete, gen_sampled, Episode, Family, GeneratorSpec, ValueDistribution};
use autobid::iterative::{solve, step, IterConfig, IterState};
use autobid::market::{
    check_equilibrium, market_metrics, run_auctions, Allocation, MarketConfig, MultiplierProfile, ValuationMatrix,
};
use autobid::Error;
use proptest::prelude::*;

fn market(n: usize, m: usize, seed: u64, sparse: bool) -> ValuationMatrix {
    if sparse {
        gen_sampled(n, m, ValueDistribution::Uniform01, seed).unwrap()
    } else {
        gen_complete(n, m, ValueDistribution::Uniform01, seed).unwrap()
    }
}

/// Auction allocation at `alpha` with ties split equally.
fn split_allocation(v: &ValuationMatrix, alpha: &MultiplierProfile, cfg: &MarketConfig) -> Allocation {
    let out = run_auctions(v, alpha, cfg).unwrap();
    let mut x = Allocation::empty(v.n_bidders(), v.n_goods());
    for (j, g) in out.goods.iter().enumerate() {
        for &i in &g.winners {
            x.add(i, j, 1.0 / g.winners.len() as f64);
        }
    }
    x
}

fn alphas(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0..10.0f64, n)
}

fn sized() -> impl Strategy<Value = (usize, usize, u64, bool)> {
    (2usize..5, 1usize..6, any::<u64>(), any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn winners_never_pay_above_bid_or_below_reserve(
        (n, m, seed, sparse) in sized(),
        a in alphas(4),
        reserve in 0.0..1.5f64,
    ) {
        let v = market(n, m, seed, sparse);
        let alpha = MultiplierProfile(a[..n].to_vec());
        let cfg = MarketConfig { reserves: Some(vec![reserve; m]), ..MarketConfig::default() };
        let out = run_auctions(&v, &alpha, &cfg).unwrap();
        for (j, g) in out.goods.iter().enumerate() {
            prop_assert_eq!(g.sold, !g.winners.is_empty());
            for (w, p) in g.winners.iter().zip(&g.winner_prices) {
                prop_assert!(*p <= alpha.0[*w] * v.value(*w, j) + 1e-12);
                prop_assert!(*p >= reserve);
            }
        }
    }

    #[test]
    fn welfare_at_most_top_values_and_revenue_at_most_welfare_when_roi_holds(
        (n, m, seed, sparse) in sized(),
        a in alphas(4),
    ) {
        let v = market(n, m, seed, sparse);
        let cfg = MarketConfig::default();
        let alpha = MultiplierProfile(a[..n].to_vec());
        let x = split_allocation(&v, &alpha, &cfg);
        let p = run_auctions(&v, &alpha, &cfg).unwrap().prices;
        let mm = market_metrics(&v, &x, &p, &cfg);
        let top: f64 = (0..m).map(|j| v.good_max(j)).sum();
        prop_assert!(mm.welfare <= top + 1e-12);
        if mm.bidders.iter().all(|b| b.spend <= b.value) {
            prop_assert!(mm.revenue <= mm.welfare + 1e-12);
        }
    }

    #[test]
    fn certificate_is_scale_invariant(
        (n, m, seed, sparse) in sized(),
        a in alphas(4),
        lambda in 0.1..10.0f64,
    ) {
        let v = market(n, m, seed, sparse);
        let cfg = MarketConfig::default();
        let alpha = MultiplierProfile(a[..n].to_vec());
        let x = split_allocation(&v, &alpha, &cfg);
        let scaled = v.scaled(&lambda);
        let c1 = check_equilibrium(&v, &alpha, &x, &cfg, &1e-6).unwrap();
        let c2 = check_equilibrium(&scaled, &alpha, &x, &cfg, &1e-6).unwrap();
        prop_assert_eq!(c1.pass, c2.pass);
        let p1 = run_auctions(&v, &alpha, &cfg).unwrap().prices;
        let p2 = run_auctions(&scaled, &alpha, &cfg).unwrap().prices;
        for (a, b) in p1.0.iter().zip(&p2.0) {
            prop_assert!((a * lambda - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn generators_are_pure_functions_of_their_spec(
        seed in any::<u64>(),
        family in prop::sample::select(vec![Family::Complete, Family::Sampled, Family::Correlated]),
        n in 2usize..6,
        m in 1usize..8,
    ) {
        let spec = GeneratorSpec {
            family,
            n,
            m,
            distribution: ValueDistribution::Uniform01,
            sigma: (family == Family::Correlated).then_some(0.5),
            auctions_per_episode: None,
            seed,
        };
        let a = spec.generate().unwrap();
        prop_assert_eq!(&a, &spec.generate().unwrap());
        prop_assert_eq!((a.n_bidders(), a.n_goods()), (n, m));
        for (_, _, x) in a.triplets() {
            prop_assert!(x.is_finite() && *x >= 0.0);
        }
        for j in 0..m {
            prop_assert!(a.good(j).iter().filter(|(_, x)| *x > 0.0).count() >= 1);
        }
    }

    #[test]
    fn first_price_profile_extracts_every_top_value(seed in any::<u64>(), n in 2usize..5, m in 1usize..6) {
        let v = market(n, m, seed, true).to_exact();
        let fp = first_price_equivalent(&v).unwrap();
        let top: autobid::scalar::Rational = (0..m).map(|j| v.good_max(j)).sum();
        prop_assert_eq!(fp.revenue(), top.clone());
        prop_assert_eq!(fp.welfare(&v), top);
    }

    #[test]
    fn export_refuses_exactly_when_a_bidder_is_uncontested(seed in any::<u64>(), n in 2usize..5, m in 1usize..6) {
        let v = market(n, m, seed, true);
        let dense = v.to_dense();
        let lone = (0..n).any(|i| {
            let mine: Vec<usize> = (0..m).filter(|&j| dense[i][j] > 0.0).collect();
            !mine.is_empty() && mine.iter().all(|&j| (0..n).all(|k| k == i || dense[k][j] == 0.0))
        });
        let res = export_miblp(&v, &MarketConfig::default(), MiblpObjective::Revenue);
        prop_assert_eq!(lone, matches!(res, Err(Error::Refused(_))));
        if !lone {
            prop_assert!(res.is_ok());
        }
    }

    #[test]
    fn gaps_are_scale_invariant(
        values in prop::collection::vec(prop::collection::vec(0.0..5.0f64, 4), 1..6),
        lambda in 0.01..100.0f64,
    ) {
        let scaled: Vec<Vec<f64>> = values.iter().map(|e| e.iter().map(|x| x * lambda).collect()).collect();
        for (a, b) in gap_report(&values).iter().zip(gap_report(&scaled)) {
            match (a.gap, b.gap) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-12),
                (x, y) => prop_assert_eq!(x, y),
            }
            if let Some(g) = a.gap {
                prop_assert!((0.0..=1.0).contains(&g));
            }
        }
    }

    #[test]
    fn treatment_wins_grow_with_the_boost(
        pairs in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..40),
        cs in prop::collection::vec(-1.5..1.5f64, 2..20),
    ) {
        let (t, c): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut cs = cs;
        cs.sort_by(f64::total_cmp);
        let wins: Vec<f64> = cs.iter().map(|&b| treatment_wins(&t, &c, b)).collect();
        prop_assert!(wins.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn counterfactual_boost_balances_wins_as_well_as_any_piece(
        pairs in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..40),
    ) {
        let (t, c): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let half = t.len() as f64 / 2.0;
        // Brute force over every jump point and every gap between jumps.
        let mut jumps: Vec<f64> = t.iter().zip(&c).map(|(a, b)| b - a).collect();
        jumps.sort_by(f64::total_cmp);
        jumps.dedup();
        let mut probes = jumps.clone();
        probes.extend(jumps.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        let best = probes
            .iter()
            .map(|&b| (treatment_wins(&t, &c, b) - half).abs())
            .fold(f64::INFINITY, f64::min);
        let choice = boosted_counterfactual(&t, &c);
        prop_assert_eq!(treatment_wins(&t, &c, choice.c), choice.treatment_wins);
        prop_assert!(((choice.treatment_wins - half).abs() - best).abs() <= 1e-12);
    }

    #[test]
    fn ground_truth_ignores_bidder_order(
        seed in any::<u64>(),
        perm_seed in any::<u64>(),
        kp in 0.01..0.3f64,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = 8;
        let stream = gen_adside_stochastic(n, 10, 30, seed).unwrap();
        let episodes: Vec<Episode> = (0..stream.episodes).map(|e| stream.episode(e)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let permuted: Vec<Episode> = episodes
            .iter()
            .map(|ep| {
                let mut values = vec![0.0; ep.values.len()];
                let mut realized = vec![false; ep.realized.len()];
                for s in 0..ep.slots() {
                    for i in 0..n {
                        values[s * n + i] = ep.value(s, perm[i]);
                        realized[s * n + i] = ep.realized(s, perm[i]);
                    }
                }
                Episode { n, values, realized }
            })
            .collect();
        let p = vec![PidParams { kp, ki: 0.0, kd: 0.0, alpha0: 1.0 }; n];
        let none = vec![false; n];
        let a = simulate(&episodes, &p, &none, false, 10.0);
        let b = simulate(&permuted, &p, &none, false, 10.0);
        let ma = AdSideMetrics::of(&a.value, &a.spend, 0..n);
        let mb = AdSideMetrics::of(&b.value, &b.spend, 0..n);
        for k in 0..AdSideMetrics::NAMES.len() {
            prop_assert!((ma.get(k) - mb.get(k)).abs() <= 1e-9 * (1.0 + ma.get(k).abs()));
        }
        for i in 0..n {
            prop_assert!((b.spend[i] - a.spend[perm[i]]).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn multipliers_stay_in_range_and_solves_repeat(seed in any::<u64>(), n in 2usize..4, m in 2usize..5) {
        let v = market(n, m, seed, false);
        let cfg = MarketConfig::default();
        let iter = IterConfig { max_iters: Some(1500), trace_every: 10, ..IterConfig::default() };
        let a = solve(&v, &cfg, &iter).unwrap();
        for r in &a.trace.records {
            prop_assert!(r.alpha.iter().all(|x| (1.0..=cfg.cap).contains(x)));
        }
        let b = solve(&v, &cfg, &iter).unwrap();
        prop_assert_eq!(a.trace.to_json_lines(), b.trace.to_json_lines());
        if a.converged() {
            let c = &a.candidate;
            let cert = autobid::market::check_candidate(&v, &c.alpha, &c.allocation, &c.prices, &cfg, &iter.residual_tol).unwrap();
            prop_assert!(cert.pass);
        }
    }

    #[test]
    fn positive_slack_never_lowers_a_multiplier(seed in any::<u64>(), n in 2usize..5, m in 2usize..6) {
        let v = market(n, m, seed, true);
        let cfg = MarketConfig::default();
        let iter = IterConfig::default();
        let mut state = IterState::new(&v, &iter, &cfg).unwrap();
        for _ in 0..20 {
            let before = state.alpha.clone();
            let info = step(&v, &cfg, &iter, &mut state).unwrap();
            if info.slack.iter().all(|s| *s > 0.0) && info.window_slack.iter().all(|s| *s > 0.0) {
                prop_assert!(state.alpha.iter().zip(&before).all(|(a, b)| a >= b));
            }
        }
    }

    #[test]
    fn unit_factor_reuses_the_base_solve(seed in any::<u64>(), bidder in 0usize..3) {
        let v = market(3, 4, seed, false);
        let cfg = MarketConfig::default();
        let iter = IterConfig { max_iters: Some(3000), ..IterConfig::default() };
        let base = solve(&v, &cfg, &iter).unwrap();
        let (r, again) = sensitivity_from(&v, &base, bidder, 1.0, &cfg, &iter).unwrap();
        prop_assert!(!r.resolved);
        prop_assert_eq!(r.delta, 0.0);
        prop_assert_eq!(r.old_value.to_bits(), r.new_value.to_bits());
        prop_assert_eq!(&again.candidate, &base.candidate);
    }
}
