//! The aligned learner on a simulated stream: thresholds per human level as
//! data accumulates, for both estimator formulations.
//!
//! ```bash
//! cargo run --example aligned_learner
//! ```

use confidence_align::env::{rng_from_seed, sample_aligned, AlignedInstanceSpec, StreamSampler};
use confidence_align::learners::optimal_policy;
use confidence_align::{AlignedLearner, Formulation, Learner, Result, UtilityTable};

fn main() -> Result<()> {
    let inst = sample_aligned(&AlignedInstanceSpec::new(3, 9), UtilityTable::agreement())?;
    let sampler = StreamSampler::new(&inst);
    let mut rng = rng_from_seed(1);
    let mut per_h = AlignedLearner::new(inst.grid(), *inst.utility(), Formulation::PerH);
    let mut ell = AlignedLearner::new(inst.grid(), *inst.utility(), Formulation::EllFunction);

    for t in 1..=5_000 {
        let obs = sampler.draw(&mut rng);
        let a = per_h.decide(obs.h, obs.b);
        assert_eq!(a, ell.decide(obs.h, obs.b));
        per_h.observe(&obs)?;
        ell.observe(&obs)?;
        if [10, 100, 1_000, 5_000].contains(&t) {
            let cuts: Vec<String> = per_h
                .policy()
                .cuts()
                .iter()
                .map(|c| c.to_string())
                .collect();
            println!("t = {t:>5}: thresholds {}", cuts.join(", "));
        }
    }
    let cuts: Vec<String> = optimal_policy(&inst)
        .cuts()
        .iter()
        .map(|c| c.to_string())
        .collect();
    println!("optimal:     thresholds {}", cuts.join(", "));
    Ok(())
}
