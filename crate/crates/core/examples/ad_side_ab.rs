//! PID-controlled autobidders in a repeated auction: ground truth, the
//! naive group split and the boosted counterfactual design for one change of
//! controller gains.
//!
//! ```bash
//! cargo run --release --example ad_side_ab
//! ```

use autobid::experiments::{ad_side_study, AdSideDesign, AdSideSpec, PidParams};

fn main() -> autobid::Result<()> {
    let spec = AdSideSpec {
        n: 20,
        episodes: 50,
        auctions_per_episode: 100,
        runs: 10,
        ..AdSideSpec::default()
    };
    let control = PidParams { kp: 0.05, ki: 0.0, kd: 0.0, alpha0: 1.0 };
    let treatment = PidParams { kp: 0.2, ..control };
    let reports = ad_side_study(&spec, &[(control, treatment)], &AdSideDesign::ALL)?;
    for r in &reports {
        print!("{:>12}:", r.design.name());
        for d in &r.deltas {
            print!("  {} {:+.3} (p {:.3})", d.metric, d.delta, d.test.p_value);
        }
        println!();
    }
    Ok(())
}
