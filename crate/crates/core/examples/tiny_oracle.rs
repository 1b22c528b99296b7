//! Enumerates every equilibrium class of a seeded three-bidder market
//! exactly and compares each with the better-response solver's answer.
//!
//! ```bash
//! cargo run --release --example tiny_oracle
//! ```

use autobid::exact::{enumerate_equilibria_tiny, OracleLimits};
use autobid::instance::{gen_complete, ValueDistribution};
use autobid::iterative::{solve, IterConfig};
use autobid::market::{market_metrics, MarketConfig};

fn main() -> autobid::Result<()> {
    let v = gen_complete(3, 3, ValueDistribution::Uniform01, 11)?;
    let market = MarketConfig::default();
    let report = enumerate_equilibria_tiny(&v.to_exact(), &market.to_exact(), &OracleLimits::default())?;
    println!(
        "{} structures, {} cells, {} equilibrium classes",
        report.structures,
        report.cells,
        report.equilibria.len()
    );
    for (k, e) in report.equilibria.iter().enumerate() {
        println!(
            "  class {k}: alpha {:?} values {:?} revenue {:.4} rational {}",
            e.alpha_f64(),
            e.values,
            e.revenue,
            e.rational
        );
    }

    let iter = IterConfig {
        residual_tol: 1e-4,
        ..IterConfig::default()
    };
    let res = solve(&v, &market, &iter)?;
    let c = &res.candidate;
    let values: Vec<f64> = market_metrics(&v, &c.allocation, &c.prices, &market)
        .bidders
        .iter()
        .map(|b| b.value)
        .collect();
    println!("solver: {:?}, values {values:?}", res.status);
    match report.find_match(&c.alpha.0, &values, 1e-2) {
        Some(k) => println!("solver candidate matches class {k}"),
        None => println!("solver candidate matches no class"),
    }
    Ok(())
}
