//! Exact arithmetic: polynomials, real algebraic numbers, a rational
//! simplex, allocation completion, the tiny-market oracle, the MIBLP model
//! and the first-price-equivalent profile.

mod feasible;
mod first_price;
pub mod lp;
pub mod miblp;
mod oracle;
pub mod poly;
mod real;

pub use feasible::feasible_allocation_at;
pub use first_price::{first_price_equivalent, FirstPriceProfile};
pub use miblp::{
    encode_solution, export_miblp, uncontested_bidders, verify_miblp_solution, MiblpModel,
    MiblpObjective, MiblpVerification,
};
pub use oracle::{enumerate_equilibria_tiny, GoodRole, OracleEquilibrium, OracleLimits, OracleReport};
pub use poly::{Poly, RealRoot};
pub use real::{NumberField, Real};
