//! Multi-start search on seeded correlated markets: distinct certified
//! equilibria and each bidder's value gap across them.
//!
//! ```bash
//! cargo run --release --example multiplicity
//! ```

use autobid::experiments::instability_report;
use autobid::instance::gen_correlated;
use autobid::iterative::IterConfig;
use autobid::market::MarketConfig;

fn main() -> autobid::Result<()> {
    let instances = [(0.1, 1), (1.0, 9)]
        .iter()
        .map(|&(sigma, seed)| gen_correlated(8, 12, sigma, seed))
        .collect::<autobid::Result<Vec<_>>>()?;
    let reports = instability_report(&instances, &MarketConfig::default(), &IterConfig::default(), 1e-2, Some(3))?;
    for r in &reports {
        println!(
            "instance {}: {}/{} starts certified, {} distinct equilibria, max gap {:.3}",
            r.instance,
            r.converged_starts,
            r.starts,
            r.equilibria,
            r.max_gap()
        );
        println!("  revenues {:?}", r.revenues);
        println!("  gap quantiles {:?}", r.quantiles);
        if let Some(top) = &r.top {
            println!("  top bidders under first pricing {top:?}");
        }
    }
    Ok(())
}
