//! Checks hand-written candidates against the five equilibrium conditions,
//! in floating point and in exact rationals.
//!
//! ```bash
//! cargo run --release --example certify_candidate
//! ```

use autobid::market::{check_equilibrium, Allocation, MarketConfig, MultiplierProfile, ValuationMatrix};
use autobid::scalar::{rat, rat_int};

fn main() -> autobid::Result<()> {
    let v = ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]])?;
    let market = MarketConfig::default();

    let alpha = MultiplierProfile(vec![3.0, 1.0]);
    let x = Allocation::from_entries(2, 2, [(0, 0, 1.0), (0, 1, 0.5), (1, 1, 0.5)])?;
    let cert = check_equilibrium(&v, &alpha, &x, &market, &1e-9)?;
    println!("alpha (3, 1), even split:  pass {}", cert.pass);

    let x = Allocation::from_entries(2, 2, [(0, 0, 1.0), (1, 1, 1.0)])?;
    let cert = check_equilibrium(&v, &alpha, &x, &market, &1e-9)?;
    println!("alpha (3, 1), no split:    pass {} failing {:?}", cert.pass, cert.failing_names());

    let alpha = MultiplierProfile(vec![2.0, 1.0]);
    let x = Allocation::from_entries(2, 2, [(0, 0, 1.0), (1, 1, 1.0)])?;
    let cert = check_equilibrium(&v, &alpha, &x, &market, &1e-9)?;
    println!("alpha (2, 1):              pass {} failing {:?}", cert.pass, cert.failing_names());

    let ve = v.to_exact();
    let alpha = MultiplierProfile(vec![rat_int(3), rat_int(1)]);
    let half = rat(1, 2);
    let x = Allocation::from_entries(2, 2, [(0, 0, rat_int(1)), (0, 1, half.clone()), (1, 1, half)])?;
    let cert = check_equilibrium(&ve, &alpha, &x, &market.to_exact(), &rat_int(0))?;
    println!("exact, tolerance 0:        pass {}", cert.pass);
    Ok(())
}
