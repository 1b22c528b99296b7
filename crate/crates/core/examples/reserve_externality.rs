//! Raises a uniform reserve on one of two ad networks and tracks each
//! network's revenue, flagging levels where the target network gains more
//! than the market as a whole.
//!
//! ```bash
//! cargo run --release --example reserve_externality
//! ```

use autobid::experiments::{network_reserve_externality, two_network_labels};
use autobid::instance::{gen_complete, ValueDistribution};
use autobid::iterative::IterConfig;
use autobid::market::MarketConfig;

fn main() -> autobid::Result<()> {
    let v = gen_complete(5, 10, ValueDistribution::Uniform01, 0)?;
    let market = MarketConfig {
        networks: Some(two_network_labels(10, 1)),
        ..MarketConfig::default()
    };
    let levels: Vec<f64> = (1..=10).map(|k| v.max_value() * k as f64 / 10.0).collect();
    let report = network_reserve_externality(&v, &market, &levels, "a", &IterConfig::default())?;
    let b = &report.baseline;
    println!("baseline: total {:.4}, a {:.4}, b {:.4}", b.total_revenue, b.revenue_of("a"), b.revenue_of("b"));
    for p in &report.points {
        println!(
            "reserve {:.3}: total {:+.4}, a {:+.4}, b {:+.4} ({:?})",
            p.level,
            p.total_revenue - b.total_revenue,
            p.revenue_of("a") - b.revenue_of("a"),
            p.revenue_of("b") - b.revenue_of("b"),
            p.status
        );
    }
    println!("cannibalizing levels {:?}", report.cannibalizing_levels());
    Ok(())
}
