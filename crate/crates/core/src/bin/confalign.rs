//! Command-line front end: `run`, `report`, `coverage` and `bound`.
//!
//! Any configuration key can be overridden with a flag of its dotted name,
//! e.g. `--base_seed 7`, `--aligned.link.kappa 8` or `--hard.epsilon=0.05`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use confidence_align::analysis::{
    dkw_coverage_test, DeviationStatistic, DiscreteLaw, Law, Uniform01,
};
use confidence_align::experiment::{
    bound_from_dataset, bound_from_mae, load_config, parse_override_value, report, run,
};
use confidence_align::{Error, Result, UtilityTable};

#[derive(Parser)]
#[command(
    name = "confalign",
    version,
    about = "Aligned-confidence decision policy experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run learners over replicated streams and write traces, curves and reports.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long = "T")]
        horizon: Option<usize>,
        /// Repeatable: aligned, aligned-ell or vanilla.
        #[arg(long)]
        learner: Vec<String>,
        /// Replay this dataset (switches the mode to replay).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// u11,u10,u00,u01
        #[arg(long, allow_hyphen_values = true)]
        utility: Option<String>,
    },
    /// Alignment metrics, monotonicity violations and per-cell frequencies of a dataset.
    Report {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        group: Option<String>,
        /// Write `alignment.json` here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo coverage of uniform deviation bounds.
    Coverage {
        #[arg(long, value_delimiter = ',', default_values_t = [50u64, 200, 1000])]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2])]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = Statistic::Le)]
        statistic: Statistic,
        /// Number of keys for the class-D statistics.
        #[arg(long, default_value_t = 4)]
        keys: usize,
        /// Draw from a uniform law on this many evenly spaced points instead of U(0, 1).
        #[arg(long)]
        support: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate the near-optimality bound for threshold policies.
    Bound {
        #[arg(long, conflicts_with = "mae", required_unless_present = "mae")]
        dataset: Option<PathBuf>,
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        mae: Option<f64>,
        #[arg(long, allow_hyphen_values = true, default_value = "1,-1,1,-1")]
        utility: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Statistic {
    Le,
    Gt,
    ClassD,
    ClassDStrict,
}

/// Remaining arguments and `(key, raw value)` overrides.
type SplitArgs = (Vec<String>, Vec<(String, String)>);

/// Top-level configuration keys without a dedicated flag.
const PLAIN_KEYS: [&str; 6] = ["mode", "base_seed", "learners", "aligned", "hard", "replay"];

/// Splits `--a.b value` and `--a.b=value` pairs (and plain configuration
/// keys) off the argument list.
fn split_dotted(args: Vec<String>) -> Result<SplitArgs> {
    let mut rest = Vec::new();
    let mut dotted = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let dotted_key = |f: &&str| {
            f.split('=')
                .next()
                .is_some_and(|k| k.contains('.') || PLAIN_KEYS.contains(&k))
        };
        let Some(flag) = arg.strip_prefix("--").filter(dotted_key) else {
            rest.push(arg);
            continue;
        };
        match flag.split_once('=') {
            Some((k, v)) => dotted.push((k.to_string(), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::Config(format!("--{flag} needs a value")))?;
                dotted.push((flag.to_string(), v));
            }
        }
    }
    Ok((rest, dotted))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn execute(command: Command, dotted: Vec<(String, String)>) -> Result<()> {
    match command {
        Command::Run {
            config,
            out,
            seeds,
            horizon,
            learner,
            dataset,
            utility,
        } => {
            let mut overrides: Vec<(String, Value)> = Vec::new();
            if let Some(o) = out {
                overrides.push(("out".into(), json!(o)));
            }
            if let Some(s) = seeds {
                overrides.push(("seeds".into(), json!(s)));
            }
            if let Some(t) = horizon {
                overrides.push(("T".into(), json!(t)));
            }
            if !learner.is_empty() {
                overrides.push(("learners".into(), json!(learner)));
            }
            if let Some(d) = dataset {
                overrides.push(("mode".into(), json!("replay")));
                overrides.push(("replay.dataset".into(), json!(d)));
            }
            if let Some(u) = utility {
                overrides.push(("utility".into(), parse_override_value("utility", &u)?));
            }
            for (k, v) in &dotted {
                overrides.push((k.clone(), parse_override_value(k, v)?));
            }
            let cfg = load_config(config.as_deref(), &overrides)?;
            let summary = run(&cfg)?;
            for c in &summary.curves {
                println!(
                    "{}: final mean cumulative regret {:.4} ± {:.4} over {} seeds",
                    c.learner_id,
                    c.final_mean(),
                    c.final_halfwidth(),
                    c.n_seeds
                );
            }
            println!(
                "MAE {:.4}  EAE {:.4}  written to {}",
                summary.alignment.mae,
                summary.alignment.eae,
                summary.out.display()
            );
            Ok(())
        }
        Command::Report {
            dataset,
            group,
            out,
        } => {
            let r = report(&dataset, group.as_deref())?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                        path: dir.clone(),
                        source: e,
                    })?;
                    let path = dir.join("alignment.json");
                    let text = serde_json::to_string_pretty(&r)? + "\n";
                    std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
                    println!(
                        "MAE {:.4}  EAE {:.4}  violations {}  observations {}",
                        r.mae,
                        r.eae,
                        r.violations.len(),
                        r.n_observations
                    );
                    Ok(())
                }
                None => print_json(&r),
            }
        }
        Command::Coverage {
            n,
            eps,
            trials,
            statistic,
            keys,
            support,
            seed,
        } => {
            let law: Box<dyn Law> = match support {
                Some(m) if m > 0 => Box::new(DiscreteLaw::new(
                    (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect(),
                    vec![1.0 / m as f64; m],
                )?),
                Some(_) => return Err(Error::Config("--support must be positive".into())),
                None => Box::new(Uniform01),
            };
            let stat = match statistic {
                Statistic::Le => DeviationStatistic::LessEq,
                Statistic::Gt => DeviationStatistic::Greater,
                Statistic::ClassD => DeviationStatistic::ClassD { keys },
                Statistic::ClassDStrict => DeviationStatistic::ClassDStrict { keys },
            };
            let mut results = Vec::new();
            for &ni in &n {
                for &e in &eps {
                    results.push(dkw_coverage_test(law.as_ref(), stat, ni, e, trials, seed)?);
                }
            }
            print_json(&results)
        }
        Command::Bound {
            dataset,
            group,
            mae,
            utility,
        } => {
            let u: UtilityTable = utility.parse()?;
            let b = match (dataset, mae) {
                (Some(d), _) => bound_from_dataset(&d, group.as_deref(), u)?,
                (None, Some(m)) => bound_from_mae(m, u)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            print_json(&b)
        }
    }
}

fn main() -> ExitCode {
    let (args, dotted) = match split_dotted(std::env::args().collect()) {
        Ok(split) => split,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cli = Cli::parse_from(args);
    match execute(cli.command, dotted) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
