//! A full replicated run written to disk: per-seed traces, aggregated
//! curves with 95% half-widths, the alignment report and the manifest.
//!
//! ```bash
//! cargo run --release --example regret_curves -- /tmp/curves
//! ```

use std::path::PathBuf;

use confidence_align::experiment::{load_config, run};
use confidence_align::Result;
use serde_json::json;

fn main() -> Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("confalign-regret-curves"));
    let config = load_config(
        None,
        &[
            ("T".into(), json!(2040)),
            ("seeds".into(), json!(100)),
            ("out".into(), json!(out)),
        ],
    )?;
    let summary = run(&config)?;
    for c in &summary.curves {
        for t in [10, 100, 1000, c.horizon()] {
            println!(
                "{:>8} t = {t:>4}: {:7.2} ± {:5.2}",
                c.learner_id,
                c.mean[t - 1],
                c.ci_halfwidth[t - 1]
            );
        }
    }
    println!("artifacts in {}", summary.out.display());
    Ok(())
}
