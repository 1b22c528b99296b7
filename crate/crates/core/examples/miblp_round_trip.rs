//! Exports the bilevel model of a small market as an LP file, encodes a
//! known equilibrium as a model solution and verifies it.
//!
//! ```bash
//! cargo run --release --example miblp_round_trip
//! ```

use autobid::exact::{encode_solution, export_miblp, verify_miblp_solution, MiblpObjective};
use autobid::market::{Allocation, MarketConfig, MultiplierProfile, ValuationMatrix};
use autobid::scalar::{rat, rat_int};

fn main() -> autobid::Result<()> {
    let v = ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]])?.to_exact();
    let market = MarketConfig::with_cap(rat_int(10));

    let model = export_miblp(&v, &market, MiblpObjective::Revenue)?;
    println!("{} rows in families {:?}", model.rows.len(), model.family_counts());
    let text = model.to_lp_string();
    for line in text.lines().take(8) {
        println!("  {line}");
    }

    let alpha = MultiplierProfile(vec![rat_int(3), rat_int(1)]);
    let x = Allocation::from_entries(2, 2, [(0, 0, rat_int(1)), (0, 1, rat(1, 2)), (1, 1, rat(1, 2))])?;
    let sol = encode_solution(&v, &alpha, &x, &market)?;
    let ver = verify_miblp_solution(&v, &market, &sol, &rat_int(0))?;
    println!("equilibrium: constraints pass {}, certificate pass {}", ver.constraints.pass, ver.certificate.pass);

    let mut bad = sol.clone();
    *bad.get_mut("alpha_1").expect("variable") = rat_int(2);
    let ver = verify_miblp_solution(&v, &market, &bad, &rat_int(0))?;
    println!("perturbed:   constraints pass {}, violated {:?}", ver.constraints.pass, ver.constraints.violated);
    Ok(())
}
