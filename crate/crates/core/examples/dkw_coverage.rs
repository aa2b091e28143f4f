//! Concentration radii, Monte Carlo coverage of the DKW bound and the
//! growth of the per-key threshold class deviation with the number of keys.
//!
//! ```bash
//! cargo run --release --example dkw_coverage
//! ```

use confidence_align::analysis::{
    clean_event_radius, dkw_coverage_test, dkw_radius, DeviationStatistic, Uniform01,
};
use confidence_align::Result;

fn main() -> Result<()> {
    println!("dkw radius n=200 alpha=0.05: {:.5}", dkw_radius(200, 0.05)?);
    println!(
        "clean-event radius n=10 |H|=4 T=100: {:.3}",
        clean_event_radius(10, 4, 100)?
    );

    for stat in [DeviationStatistic::LessEq, DeviationStatistic::Greater] {
        for n in [50, 200, 1000] {
            let r = dkw_coverage_test(&Uniform01, stat, n, 0.1, 10_000, 0)?;
            println!(
                "{stat:?} n={n:>4} eps=0.1: exceedance {:.4}, bound {:.4}",
                r.exceedance_rate,
                r.bound.unwrap_or(f64::NAN)
            );
        }
    }
    for keys in [1, 2, 4, 8] {
        let r = dkw_coverage_test(
            &Uniform01,
            DeviationStatistic::ClassD { keys },
            1000,
            0.05,
            2_000,
            0,
        )?;
        println!(
            "class D, {keys} keys: median deviation {:.4} (x sqrt(n/K) = {:.3})",
            r.median_deviation,
            r.median_deviation * (1000.0 / keys as f64).sqrt()
        );
    }
    Ok(())
}
