//! The per-good multiplier profile under which second pricing charges every
//! winner its own value: revenue and welfare both equal the sum of the
//! goods' top values.
//!
//! ```bash
//! cargo run --release --example first_price
//! ```

use autobid::exact::first_price_equivalent;
use autobid::instance::{gen_sampled, ValueDistribution};
use autobid::market::check_candidate;

fn main() -> autobid::Result<()> {
    let v = gen_sampled(5, 8, ValueDistribution::Uniform01, 3)?.to_exact();
    let fp = first_price_equivalent(&v)?;
    let top: autobid::scalar::Rational = (0..v.n_goods()).map(|j| v.good_max(j)).sum();

    let (alpha, market) = fp.certification_market(&v, autobid::scalar::rat_int(10));
    let cert = check_candidate(&v, &alpha, &fp.allocation, &fp.prices, &market, &autobid::scalar::rat_int(0))?;
    println!("certificate pass {}", cert.pass);
    println!("revenue == welfare == sum of top values: {}", fp.revenue() == top && fp.welfare(&v) == top);
    for (i, j, a) in fp.multipliers.iter().take(6) {
        println!("  alpha[{i}][{j}] = {a}");
    }
    Ok(())
}
