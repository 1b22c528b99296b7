//! Traffic-split A/B test of a score boost. Both arms share the bidders'
//! multipliers, so the split estimate differs from the all-treatment versus
//! all-control truth.
//!
//! ```bash
//! cargo run --release --example user_side_ab
//! ```

use autobid::experiments::{user_side_ab, UserSideAbSpec, UserTransform};
use autobid::instance::gen_correlated;
use autobid::iterative::IterConfig;
use autobid::market::MarketConfig;

fn main() -> autobid::Result<()> {
    let v = gen_correlated(6, 12, 0.3, 2)?;
    let spec = UserSideAbSpec {
        treatment: UserTransform::GapBoost { fraction: 0.5 },
        control: UserTransform::Identity,
        traffic: 0.5,
        replicates: 20,
        level: 0.95,
        seed: 0,
    };
    let r = user_side_ab(&v, &spec, &MarketConfig::default(), &IterConfig::default())?;
    println!("truth    revenue {:+.4} welfare {:+.4} ({:?})", r.truth.revenue, r.truth.welfare, r.truth_status);
    println!("estimate revenue {:+.4} welfare {:+.4}", r.estimate.revenue, r.estimate.welfare);
    println!("bias     revenue {:+.4} welfare {:+.4}", r.bias.revenue, r.bias.welfare);
    println!("revenue interval {:?}", r.revenue_ci);
    println!("biased: {}", r.biased());
    Ok(())
}
