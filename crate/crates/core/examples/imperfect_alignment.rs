//! How much a threshold policy can lose when the confidences are only
//! approximately aligned, against the alignment-error bound.
//!
//! ```bash
//! cargo run --example imperfect_alignment
//! ```

use confidence_align::analysis::{mae_eae, suboptimality_bound, threshold_gap, ConditionalTable};
use confidence_align::{ConfidenceGrid, Instance, Result, UtilityTable};

fn main() -> Result<()> {
    let grid = ConfidenceGrid::evenly_spaced(2, 4)?;
    let utility = UtilityTable::agreement().normalized();
    for dip in [0.0, 0.05, 0.15, 0.3] {
        // the third AI level at the lower human level drops by `dip`,
        // below 1/2 once it exceeds 0.1
        let cond = vec![0.2, 0.6, 0.6 - dip, 0.9, 0.3, 0.65, 0.8, 0.95];
        let inst = Instance::new(grid.clone(), vec![0.125; 8], cond, utility)?;
        let (mae, eae) = mae_eae(&ConditionalTable::from_instance(&inst))?;
        println!(
            "dip {dip:.2}: MAE {mae:.2} EAE {eae:.3}  gap {:.4} <= bound {:.4}",
            threshold_gap(&inst),
            suboptimality_bound(mae, &utility)?
        );
    }
    Ok(())
}
