//! Builds the auction market encoding a satisfiable 3SAT formula and checks
//! that the equilibrium built from a satisfying assignment reaches the
//! revenue target exactly.
//!
//! ```bash
//! cargo run --release --example sat_reduction
//! ```

use autobid::instance::{gen_3sat_reduction, SatFormula};
use autobid::market::{check_equilibrium, market_metrics, MarketConfig};
use autobid::scalar::rat_int;

fn main() -> autobid::Result<()> {
    let f = SatFormula::new(3, vec![[1, -2, 3], [-1, 2, 3]])?;
    let assignment = f.solve_brute_force().expect("satisfiable");
    println!("assignment {assignment:?}");

    let red = gen_3sat_reduction(&f, Some(&assignment))?;
    let v = &red.valuations;
    println!("{} bidders, {} goods, target revenue {}", v.n_bidders(), v.n_goods(), red.target);

    let c = red.candidate.expect("built from an assignment");
    let market = MarketConfig::with_cap(rat_int(5));
    let cert = check_equilibrium(v, &c.alpha, &c.allocation, &market, &rat_int(0))?;
    let m = market_metrics(v, &c.allocation, &c.prices, &market);
    println!("certificate pass {} at tolerance 0", cert.pass);
    println!("revenue {} (target {})", m.revenue, red.target);
    Ok(())
}
