//! The baseline's regret on the lower-bound family grows with the number
//! of contexts, roughly like the square root of |H|·|B|.
//!
//! ```bash
//! cargo run --release --example hard_instance
//! ```

use confidence_align::env::{hard_epsilon, sample_hard_instance, HardInstanceSpec};
use confidence_align::experiment::{final_regrets, Environment};
use confidence_align::Result;

fn main() -> Result<()> {
    let t = 10_000;
    for n_ai in [4, 8, 16, 32] {
        let spec = HardInstanceSpec {
            n_human: 2,
            n_ai,
            epsilon: hard_epsilon(2, n_ai, t),
            seed: 0,
        };
        let env = Environment::synthetic(sample_hard_instance(&spec)?);
        let r = final_regrets(&env, "vanilla", t, 100, 0)?;
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        println!(
            "|B| = {n_ai:>2}, eps = {:.3}: vanilla regret {mean:7.2}  / sqrt(|H||B|T) = {:.3}",
            spec.epsilon,
            mean / ((2 * n_ai * t) as f64).sqrt()
        );
    }
    Ok(())
}
