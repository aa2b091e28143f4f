//! Shuffled replays of a logged dataset, with regret measured against the
//! plug-in optimum of the whole log. Pass a CSV with columns `h,b,y`
//! (optionally `group,q`), or run without arguments on a generated log.
//!
//! ```bash
//! cargo run --release --example replay -- data/group_a.csv
//! ```

use confidence_align::env::{load_replay, ReplayLog};
use confidence_align::experiment::{final_regrets, Environment};
use confidence_align::{Observation, Result, UtilityTable};

fn generated_log() -> ReplayLog {
    let mut obs = Vec::new();
    for i in 0..2_000u64 {
        let h = [0.2, 0.4, 0.6, 0.8][(i % 4) as usize];
        let b = ((i * 37) % 13) as f64 / 12.0;
        let y = u8::from(((i * 7_919) % 1_000) as f64 / 1_000.0 < 0.5 * (h + b));
        obs.push(Observation { h, b, y });
    }
    ReplayLog::from_observations(obs)
}

fn main() -> Result<()> {
    let log = match std::env::args().nth(1) {
        Some(path) => load_replay(path.as_ref())?.1,
        None => generated_log(),
    };
    let env = Environment::replay(log.clone(), UtilityTable::agreement(), true)?;
    for learner in ["aligned", "vanilla"] {
        let r = final_regrets(&env, learner, log.len(), 100, 0)?;
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        println!(
            "{learner:>8}: mean final regret {mean:.2} over 100 shuffles of {} rows",
            log.len()
        );
    }
    Ok(())
}
