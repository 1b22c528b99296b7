//! Draws one instance of each seeded family and prints its shape. The
//! triplet text of the smallest one is printed in full.
//!
//! ```bash
//! cargo run --release --example generate_instances
//! ```

use autobid::instance::{format_instance, Family, GeneratorSpec, ValueDistribution};

fn main() -> autobid::Result<()> {
    let families = [
        (Family::Complete, None, None),
        (Family::Sampled, None, None),
        (Family::Correlated, Some(0.3), None),
        (Family::AdsideStochastic, None, Some(4)),
    ];
    for (family, sigma, auctions_per_episode) in families {
        let spec = GeneratorSpec {
            family,
            n: 6,
            m: 8,
            distribution: ValueDistribution::Uniform01,
            sigma,
            auctions_per_episode,
            seed: 42,
        };
        let v = spec.generate()?;
        println!(
            "{family:?}: {} bidders, {} goods, {} positive values, max {:.3}",
            v.n_bidders(),
            v.n_goods(),
            v.nnz(),
            v.max_value()
        );
    }

    let tiny = GeneratorSpec {
        family: Family::Complete,
        n: 2,
        m: 3,
        distribution: ValueDistribution::Lognormal,
        sigma: None,
        auctions_per_episode: None,
        seed: 7,
    }
    .generate()?;
    print!("\n{}", format_instance(&tiny));
    Ok(())
}
