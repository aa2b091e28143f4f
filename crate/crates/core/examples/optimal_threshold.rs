//! Optimal threshold policy of an aligned instance, checked against the
//! best threshold found by enumeration and the unrestricted optimum.
//!
//! ```bash
//! cargo run --example optimal_threshold
//! ```

use confidence_align::env::{sample_aligned, AlignedInstanceSpec, Link};
use confidence_align::learners::{
    best_threshold_policy, exact_policy_value, optimal_policy, unrestricted_value,
};
use confidence_align::model::decision_rule_threshold;
use confidence_align::{Result, UtilityTable};

fn main() -> Result<()> {
    let mut spec = AlignedInstanceSpec::new(4, 13);
    spec.link = Link::Logistic { kappa: 6.0 };
    let utility = UtilityTable::new(2.0, -1.0, 1.0, 0.0)?;
    let inst = sample_aligned(&spec, utility)?;

    println!(
        "decision rule: decide 0 while P(Y=0|h,b) >= {:.4}",
        decision_rule_threshold(&utility)?
    );
    let opt = optimal_policy(&inst);
    for (h, cut) in inst.grid().human_levels().iter().zip(opt.cuts()) {
        println!("h = {h:.2}: threshold {cut}");
    }
    println!(
        "value of optimal threshold policy  {:.6}",
        exact_policy_value(&inst, &opt)
    );
    println!(
        "value of best enumerated threshold {:.6}",
        exact_policy_value(&inst, &best_threshold_policy(&inst))
    );
    println!(
        "value of cell-wise optimum         {:.6}",
        unrestricted_value(&inst)
    );
    Ok(())
}
