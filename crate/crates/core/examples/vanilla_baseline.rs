//! The aligned learner against the per-cell baseline on the same streams.
//!
//! ```bash
//! cargo run --release --example vanilla_baseline
//! ```

use confidence_align::env::{sample_aligned, AlignedInstanceSpec};
use confidence_align::experiment::{final_regrets, Environment};
use confidence_align::{Result, UtilityTable};

fn main() -> Result<()> {
    let env = Environment::synthetic(sample_aligned(
        &AlignedInstanceSpec::new(4, 13),
        UtilityTable::agreement(),
    )?);
    for t in [500, 2_000, 8_000] {
        let mean = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len() as f64;
        let aligned = mean(final_regrets(&env, "aligned", t, 50, 0)?);
        let vanilla = mean(final_regrets(&env, "vanilla", t, 50, 0)?);
        println!("T = {t:>5}: aligned {aligned:8.2}  vanilla {vanilla:8.2}");
    }
    Ok(())
}
