//! Scales one bidder's valuation row (a tCPA change) and re-solves from the
//! base multipliers, then searches small markets for a bidder that gains
//! value by lowering its target.
//!
//! ```bash
//! cargo run --release --example tcpa_sensitivity
//! ```

use autobid::experiments::{search_non_monotone, sensitivity_from, sensitivity_population};
use autobid::instance::gen_correlated;
use autobid::iterative::{solve, IterConfig};
use autobid::market::MarketConfig;

fn main() -> autobid::Result<()> {
    let v = gen_correlated(6, 10, 0.3, 4)?;
    let market = MarketConfig::default();
    let iter = IterConfig::default();
    let base = solve(&v, &market, &iter)?;
    println!("base {:?}", base.status);
    for factor in [0.96, 0.98, 1.02, 1.04] {
        let (r, _) = sensitivity_from(&v, &base, 0, factor, &market, &iter)?;
        println!(
            "  bidder 0 x{factor}: value {:.4} -> {:.4} ({:+.4}), revenue {:.4} -> {:.4}, certified {}",
            r.old_value,
            r.new_value,
            r.delta,
            r.old_revenue,
            r.new_revenue,
            r.certified()
        );
    }

    let pop = sensitivity_population(&v, 0.01, 3, &[1, 2, 3, 4, 5], &market, &iter)?;
    println!("population +/-1%: revenue change quantiles {:?}", pop.revenue_changes);

    match search_non_monotone(0, 200, &[0.95, 0.9, 0.8], 1e-2, &market, &iter)? {
        Some(w) => println!(
            "witness after {} instances: bidder {} of a {}x{} market gains {:+.4} at factor {}",
            w.examined, w.record.bidder, w.n, w.m, w.record.delta, w.record.factor
        ),
        None => println!("no witness"),
    }
    Ok(())
}
