//! Seeded instance families, the 3SAT reduction fixture and the triplet
//! file format.
//!
//! All randomness comes from ChaCha8 streams keyed by `(good, bidder)`; see
//! [`rng::cell_rng`].

mod generators;
mod io;
pub mod rng;
mod sat;

pub use generators::{
    gen_adside_stochastic, gen_complete, gen_correlated, gen_sampled, AdSideStream, Episode,
    Family, GeneratorSpec, ValueDistribution, ADSIDE_SIGMA,
};
pub use io::{
    format_instance, load_instance, load_instance_exact, parse_instance, parse_instance_exact,
    save_instance, INSTANCE_HEADER,
};
pub use sat::{gen_3sat_reduction, ReductionInstance, SatFormula};
