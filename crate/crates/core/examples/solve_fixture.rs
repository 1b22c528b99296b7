//! Better-response dynamics on the two-bidder, two-good market
//! `v = [[1, 1], [0, 3]]`, whose unique equilibrium is `alpha = (3, 1)` with
//! good 2 split evenly.
//!
//! ```bash
//! cargo run --release --example solve_fixture
//! ```

use autobid::iterative::{solve, IterConfig};
use autobid::market::{market_metrics, MarketConfig, ValuationMatrix};

fn main() -> autobid::Result<()> {
    let v = ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]])?;
    let market = MarketConfig::default();
    let res = solve(&v, &market, &IterConfig::default())?;
    let c = &res.candidate;
    let m = market_metrics(&v, &c.allocation, &c.prices, &market);

    println!("status      {:?} after {} iterations", res.status, res.trace.iterations);
    println!("alpha       {:?}", c.alpha.0);
    println!("x[0][1]     {:.4}", c.allocation.share(0, 1));
    println!("prices      {:?}", c.prices.0);
    println!("revenue     {:.4}", m.revenue);
    println!("residual    {:.2e}", res.certificate.worst());
    Ok(())
}
