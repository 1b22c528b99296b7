//! One PID autobidder against a fixed price environment: the multiplier
//! settles where spend matches acquired value.
//!
//! ```bash
//! cargo run --release --example pid_controller
//! ```

use autobid::experiments::{pid_update, PidParams, PidState};

fn main() {
    let p = PidParams { kp: 0.5, ki: 0.0, kd: 0.0, alpha0: 1.0 };
    let mut state = PidState::new(&p);
    // 1000 auctions with value 1 and competing bids spread over [0, 3).
    let competing: Vec<f64> = (0..1000).map(|k| 3.0 * k as f64 / 1000.0).collect();
    for episode in 0..30 {
        let bid = state.multiplier;
        let won: Vec<f64> = competing.iter().copied().filter(|c| *c < bid).collect();
        let value = won.len() as f64;
        let spend: f64 = won.iter().sum();
        let alpha = pid_update(&p, &mut state, value, spend, 10.0);
        if episode % 5 == 0 {
            println!("episode {episode:>2}: bid {bid:.4}, value {value:>4}, spend {spend:8.2}, next alpha {alpha:.4}");
        }
    }
}
