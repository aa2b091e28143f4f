//! Alignment metrics and monotonicity violations of a small logged dataset.
//!
//! ```bash
//! cargo run --example alignment_report
//! ```

use confidence_align::analysis::monotonicity_report;
use confidence_align::env::CellCounts;
use confidence_align::{ConfidenceGrid, Observation, Result};

fn main() -> Result<()> {
    // P(Y=1) per cell: rises with b except one dip at h = 0.3
    let cells = [
        (0.3, 0.2, 2, 10),
        (0.3, 0.5, 6, 10),
        (0.3, 0.8, 5, 10),
        (0.7, 0.2, 3, 10),
        (0.7, 0.5, 7, 10),
        (0.7, 0.8, 1, 1),
    ];
    let mut obs = Vec::new();
    for (h, b, ones, n) in cells {
        for k in 0..n {
            obs.push(Observation::new(h, b, u8::from(k < ones))?);
        }
    }
    let grid = ConfidenceGrid::from_observations(&obs)?;
    let report = monotonicity_report(&CellCounts::from_observations(&grid, &obs)?)?;
    println!("MAE {:.3}  EAE {:.4}", report.mae, report.eae);
    for v in &report.violations {
        println!(
            "h = {}: P(b={}) = {:.2} > P(b={}) = {:.2} (counts {} / {}{})",
            v.h,
            v.b_low,
            v.p_low,
            v.b_high,
            v.p_high,
            v.n_low,
            v.n_high,
            if v.low_count { ", low count" } else { "" }
        );
    }
    Ok(())
}
