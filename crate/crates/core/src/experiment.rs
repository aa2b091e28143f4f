//! Experiment configuration, replicated runs and the on-disk artifacts they
//! produce.
//!
//! A run writes, under its output directory:
//!
//! ```text
//! <out>/<learner>/seed-<k>.csv   t,h,b,y,action,inst_regret,cum_regret
//! <out>/<learner>/curve.csv      t,mean_cum_regret,ci_halfwidth,n_seeds
//! <out>/alignment.json           AlignmentReport
//! <out>/manifest.json            version, resolved config, wall time
//! ```
//!
//! `k` is the replica index; replica `k` draws its stream from seed
//! `base_seed + k`, and every learner in a replica sees the same stream.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{
    aggregate_series, instance_alignment_report, instantaneous_regret, mae_eae,
    monotonicity_report, suboptimality_bound, threshold_gap, AlignmentReport, ConditionalTable,
    RegretCurve,
};
use crate::env::{
    hard_epsilon, load_replay, rng_from_seed, sample_aligned, sample_hard_instance, shuffle_replay,
    AlignedInstanceSpec, CellCounts, HardInstanceSpec, ReplayLog, StreamSampler,
};
use crate::error::{Error, Result};
use crate::learners::{learner_by_name, Learner};
use crate::model::{ConfidenceGrid, Instance, Observation, RunTrace, StepRecord, UtilityTable};

/// Learner identifiers accepted in configurations.
pub const LEARNER_IDS: [&str; 3] = ["aligned", "aligned-ell", "vanilla"];

/// Header of per-seed trace files.
pub const TRACE_HEADER: &str = "t,h,b,y,action,inst_regret,cum_regret";

/// Header of aggregated curve files.
pub const CURVE_HEADER: &str = "t,mean_cum_regret,ci_halfwidth,n_seeds";

/// `v<crate version>`, the version stamp written to manifests.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    SyntheticAligned,
    SyntheticHard,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardSection {
    pub n_human: usize,
    pub n_ai: usize,
    /// Per-context gap; `√(|H|·|B|/T)` when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for HardSection {
    fn default() -> Self {
        Self {
            n_human: 2,
            n_ai: 8,
            epsilon: None,
            seed: 0,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySection {
    pub dataset: PathBuf,
    /// Keep only rows of this group.
    #[serde(default)]
    pub group: Option<String>,
    /// Shuffle the log per replica; otherwise replay in file order.
    #[serde(default = "default_true")]
    pub shuffle: bool,
}

fn default_seeds() -> usize {
    10
}

fn default_learners() -> Vec<String> {
    vec!["aligned".into(), "vanilla".into()]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Mode,
    /// Horizon. Required for synthetic modes; defaults to the log length in
    /// replay mode.
    #[serde(rename = "T", default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_learners")]
    pub learners: Vec<String>,
    /// Defaults to `(1, −1, 1, −1)`; the hard family fixes `(1, 0, 1, 0)`.
    #[serde(default)]
    pub utility: Option<UtilityTable>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub aligned: Option<AlignedInstanceSpec>,
    #[serde(default)]
    pub hard: Option<HardSection>,
    #[serde(default)]
    pub replay: Option<ReplaySection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            horizon: None,
            seeds: default_seeds(),
            base_seed: 0,
            learners: default_learners(),
            utility: None,
            out: default_out(),
            aligned: Some(AlignedInstanceSpec::new(4, 13)),
            hard: Some(HardSection::default()),
            replay: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.horizon == Some(0) {
            return Err(Error::Config("T must be at least 1".into()));
        }
        if self.learners.is_empty() {
            return Err(Error::Config("at least one learner is required".into()));
        }
        for (i, l) in self.learners.iter().enumerate() {
            if !LEARNER_IDS.contains(&l.as_str()) {
                return Err(Error::Config(format!(
                    "unknown learner {l:?} (expected one of {})",
                    LEARNER_IDS.join(", ")
                )));
            }
            if self.learners[..i].contains(l) {
                return Err(Error::Config(format!("learner {l:?} listed twice")));
            }
        }
        match self.mode {
            Mode::SyntheticAligned | Mode::SyntheticHard if self.horizon.is_none() => {
                Err(Error::Config("T is required for synthetic modes".into()))
            }
            Mode::SyntheticAligned if self.aligned.is_none() => Err(Error::Config(
                "synthetic-aligned mode needs an aligned section".into(),
            )),
            Mode::SyntheticHard if self.hard.is_none() => Err(Error::Config(
                "synthetic-hard mode needs a hard section".into(),
            )),
            Mode::SyntheticHard if self.utility.is_some_and(|u| u != UtilityTable::zero_one()) => {
                Err(Error::Config(
                    "synthetic-hard mode fixes the utility to 1,0,1,0".into(),
                ))
            }
            Mode::Replay if self.replay.is_none() => {
                Err(Error::Config("replay mode requires a dataset path".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn utility_or_default(&self) -> UtilityTable {
        match self.mode {
            Mode::SyntheticHard => UtilityTable::zero_one(),
            _ => self.utility.unwrap_or_else(UtilityTable::agreement),
        }
    }
}

/// Recursively merges `patch` into `base`; non-object values replace.
fn deep_merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses the value of a `--dotted.key value` override. `utility` accepts
/// `u11,u10,u00,u01`; everything else is read as JSON, falling back to a
/// plain string.
pub fn parse_override_value(key: &str, raw: &str) -> Result<Value> {
    if key == "utility" {
        let u: UtilityTable = raw.parse()?;
        return Ok(serde_json::to_value(u)?);
    }
    Ok(serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string())))
}

/// Sets `root[a][b]...` for the dotted path `a.b...`, creating sections.
pub fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key {key:?}")));
    }
    for part in &parts[..parts.len() - 1] {
        if !node.get(*part).is_some_and(Value::is_object) {
            node.as_object_mut()
                .ok_or_else(|| Error::Config(format!("cannot set {key:?}")))?
                .insert((*part).to_string(), Value::Object(Default::default()));
        }
        node = node.get_mut(*part).expect("section just ensured");
    }
    node.as_object_mut()
        .ok_or_else(|| Error::Config(format!("cannot set {key:?}")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Builds a configuration from defaults, an optional file (a config or a
/// manifest carrying one under `config`), then dotted overrides in order.
pub fn load_config(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<ExperimentConfig> {
    let mut merged = serde_json::to_value(ExperimentConfig::default())?;
    if let Some(path) = path {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut doc: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(inner) = doc.get_mut("config").filter(|_| doc_is_manifest(&text)) {
            doc = inner.take();
        }
        deep_merge(&mut merged, doc);
    }
    for (k, v) in overrides {
        set_dotted(&mut merged, k, v.clone())?;
    }
    let config: ExperimentConfig =
        serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

fn doc_is_manifest(text: &str) -> bool {
    serde_json::from_str::<Manifest>(text).is_ok()
}

/// One step of a replica stream with its cell indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub h_index: usize,
    pub b_index: usize,
    pub obs: Observation,
}

#[derive(Debug, Clone)]
enum Source {
    Synthetic,
    Replay { log: ReplayLog, shuffle: bool },
}

/// The instance regret is measured against, plus where observations come
/// from: i.i.d. draws, or a (shuffled) replay of a log whose plug-in
/// instance serves as ground truth.
#[derive(Debug, Clone)]
pub struct Environment {
    instance: Instance,
    source: Source,
}

impl Environment {
    pub fn synthetic(instance: Instance) -> Self {
        Self {
            instance,
            source: Source::Synthetic,
        }
    }

    pub fn replay(log: ReplayLog, utility: UtilityTable, shuffle: bool) -> Result<Self> {
        if log.is_empty() {
            return Err(Error::Validation("replay log has no rows".into()));
        }
        let grid = ConfidenceGrid::from_observations(log.observations())?;
        let counts = CellCounts::from_observations(&grid, log.observations())?;
        Ok(Self {
            instance: counts.plug_in_instance(utility)?,
            source: Source::Replay { log, shuffle },
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    /// Rows available to a replay, `None` for synthetic sources.
    pub fn log_len(&self) -> Option<usize> {
        match &self.source {
            Source::Synthetic => None,
            Source::Replay { log, .. } => Some(log.len()),
        }
    }

    /// The first `horizon` steps of the stream for `seed`.
    pub fn stream(&self, seed: u64, horizon: usize) -> Result<Vec<Step>> {
        match &self.source {
            Source::Synthetic => {
                let sampler = StreamSampler::new(&self.instance);
                let grid = self.instance.grid();
                let mut rng = rng_from_seed(seed);
                Ok((0..horizon)
                    .map(|_| {
                        let (i, j) = sampler.draw_cell(&mut rng);
                        let y = u8::from(rng.random::<f64>() < self.instance.cond(i, j));
                        Step {
                            h_index: i,
                            b_index: j,
                            obs: Observation {
                                h: grid.human_levels()[i],
                                b: grid.ai_levels()[j],
                                y,
                            },
                        }
                    })
                    .collect())
            }
            Source::Replay { log, shuffle } => {
                if horizon > log.len() {
                    return Err(Error::Config(format!(
                        "T = {horizon} exceeds the {} rows of the replay log",
                        log.len()
                    )));
                }
                let order = if *shuffle {
                    shuffle_replay(log, seed)
                } else {
                    log.clone()
                };
                order
                    .observations()
                    .take(horizon)
                    .map(|o| {
                        let (h_index, b_index) = self.instance.grid().cell_of(o)?;
                        Ok(Step {
                            h_index,
                            b_index,
                            obs: *o,
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Builds the environment described by a validated configuration.
pub fn build_environment(config: &ExperimentConfig) -> Result<Environment> {
    let utility = config.utility_or_default();
    match config.mode {
        Mode::SyntheticAligned => {
            let spec = config.aligned.as_ref().expect("validated");
            Ok(Environment::synthetic(sample_aligned(spec, utility)?))
        }
        Mode::SyntheticHard => {
            let hard = config.hard.as_ref().expect("validated");
            let t = config.horizon.expect("validated");
            let spec = HardInstanceSpec {
                n_human: hard.n_human,
                n_ai: hard.n_ai,
                epsilon: hard
                    .epsilon
                    .unwrap_or_else(|| hard_epsilon(hard.n_human, hard.n_ai, t)),
                seed: hard.seed,
            };
            Ok(Environment::synthetic(sample_hard_instance(&spec)?))
        }
        Mode::Replay => {
            let section = config.replay.as_ref().expect("validated");
            let (_, log) = load_replay(&section.dataset)?;
            let log = match &section.group {
                Some(g) => log.filter_group(g),
                None => log,
            };
            Environment::replay(log, utility, section.shuffle)
        }
    }
}

/// The configuration with defaults made explicit (horizon, hard gap), as
/// echoed into the manifest.
pub fn resolve(config: &ExperimentConfig, env: &Environment) -> ExperimentConfig {
    let mut resolved = config.clone();
    if resolved.horizon.is_none() {
        resolved.horizon = env.log_len();
    }
    if config.mode == Mode::SyntheticHard {
        if let (Some(h), Some(t)) = (resolved.hard.as_mut(), resolved.horizon) {
            h.epsilon
                .get_or_insert_with(|| hard_epsilon(h.n_human, h.n_ai, t));
        }
    }
    resolved.utility = Some(config.utility_or_default());
    resolved
}

/// Runs one learner over a stream, charging regret against the
/// environment's instance.
pub fn run_learner(
    env: &Environment,
    stream: &[Step],
    learner: &mut dyn Learner,
    seed: u64,
) -> Result<RunTrace> {
    let mut trace = RunTrace::new(learner.id(), seed);
    for s in stream {
        let a = learner.decide(s.obs.h, s.obs.b);
        trace.push(
            &s.obs,
            a,
            instantaneous_regret(&env.instance, s.h_index, s.b_index, a),
        );
        learner.observe(&s.obs)?;
    }
    Ok(trace)
}

/// Final cumulative regret of one learner on one stream, without keeping
/// the trace.
pub fn final_regret(env: &Environment, stream: &[Step], learner: &mut dyn Learner) -> Result<f64> {
    let mut total = 0.0;
    for s in stream {
        let a = learner.decide(s.obs.h, s.obs.b);
        total += instantaneous_regret(&env.instance, s.h_index, s.b_index, a);
        learner.observe(&s.obs)?;
    }
    Ok(total)
}

/// Final cumulative regret of `learner` on replicas `base_seed + k`,
/// `k < seeds`, in replica order.
pub fn final_regrets(
    env: &Environment,
    learner: &str,
    horizon: usize,
    seeds: usize,
    base_seed: u64,
) -> Result<Vec<f64>> {
    let utility = *env.instance.utility();
    (0..seeds)
        .into_par_iter()
        .map(|k| {
            let stream = env.stream(base_seed + k as u64, horizon)?;
            let mut l = learner_by_name(learner, env.instance.grid(), utility)?;
            final_regret(env, &stream, l.as_mut())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub started_unix_seconds: u64,
    pub wall_time_seconds: f64,
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: PathBuf,
    pub curves: Vec<RegretCurve>,
    pub alignment: AlignmentReport,
    pub manifest: Manifest,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn trace_path(out: &Path, learner: &str, replica: usize) -> PathBuf {
    out.join(learner).join(format!("seed-{replica}.csv"))
}

pub fn curve_path(out: &Path, learner: &str) -> PathBuf {
    out.join(learner).join("curve.csv")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

pub fn write_trace_csv(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut w = csv_writer(path)?;
    if trace.is_empty() {
        w.write_record(TRACE_HEADER.split(','))?;
    }
    for s in trace.steps() {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace_csv(path: &Path, learner_id: &str, seed: u64) -> Result<RunTrace> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(path, r.headers()?, TRACE_HEADER)?;
    let steps = r
        .deserialize::<StepRecord>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    RunTrace::from_steps(learner_id, seed, steps)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CurveRow {
    t: usize,
    mean_cum_regret: f64,
    ci_halfwidth: f64,
    n_seeds: usize,
}

pub fn write_curve_csv(path: &Path, curve: &RegretCurve) -> Result<()> {
    let mut w = csv_writer(path)?;
    if curve.mean.is_empty() {
        w.write_record(CURVE_HEADER.split(','))?;
    }
    for (i, (m, hw)) in curve.mean.iter().zip(&curve.ci_halfwidth).enumerate() {
        w.serialize(CurveRow {
            t: i + 1,
            mean_cum_regret: *m,
            ci_halfwidth: *hw,
            n_seeds: curve.n_seeds,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curve_csv(path: &Path, learner_id: &str) -> Result<RegretCurve> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(path, r.headers()?, CURVE_HEADER)?;
    let rows = r
        .deserialize::<CurveRow>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let n_seeds = rows.first().map_or(0, |r| r.n_seeds);
    for (i, row) in rows.iter().enumerate() {
        if row.t != i + 1 || row.n_seeds != n_seeds {
            return Err(Error::Validation(format!(
                "{}: row {} breaks the curve layout",
                path.display(),
                i + 1
            )));
        }
    }
    Ok(RegretCurve {
        learner_id: learner_id.to_string(),
        n_seeds,
        mean: rows.iter().map(|r| r.mean_cum_regret).collect(),
        ci_halfwidth: rows.iter().map(|r| r.ci_halfwidth).collect(),
        ci_defined: n_seeds > 1,
    })
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &str) -> Result<()> {
    if found.iter().collect::<Vec<_>>().join(",") != expected {
        return Err(Error::Validation(format!(
            "{}: expected header {expected}",
            path.display()
        )));
    }
    Ok(())
}

pub fn read_alignment_json(path: &Path) -> Result<AlignmentReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Runs every configured learner on every replica and writes the artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let started_unix_seconds = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    config.validate()?;
    let env = build_environment(config)?;
    let resolved = resolve(config, &env);
    let horizon = resolved.horizon.expect("resolved");
    let out = &config.out;
    for l in &config.learners {
        create_dir(&out.join(l))?;
    }
    let utility = *env.instance.utility();

    // each replica owns its stream, learners and files
    let per_replica: Vec<Vec<Vec<f64>>> = (0..config.seeds)
        .into_par_iter()
        .map(|k| {
            let seed = config.base_seed + k as u64;
            let stream = env.stream(seed, horizon)?;
            config
                .learners
                .iter()
                .map(|name| {
                    let mut learner = learner_by_name(name, env.instance.grid(), utility)?;
                    let trace = run_learner(&env, &stream, learner.as_mut(), seed)?;
                    write_trace_csv(&trace_path(out, name, k), &trace)?;
                    Ok(trace.steps().iter().map(|s| s.cum_regret).collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut curves = Vec::new();
    for (li, name) in config.learners.iter().enumerate() {
        let series: Vec<Vec<f64>> = per_replica.iter().map(|r| r[li].clone()).collect();
        let curve = aggregate_series(name, &series)?;
        write_curve_csv(&curve_path(out, name), &curve)?;
        curves.push(curve);
    }

    let alignment = match &env.source {
        Source::Synthetic => instance_alignment_report(&env.instance),
        Source::Replay { log, .. } => {
            let counts = CellCounts::from_observations(env.instance.grid(), log.observations())?;
            monotonicity_report(&counts)?
        }
    };
    write_json(&out.join("alignment.json"), &alignment)?;

    let manifest = Manifest {
        version: VERSION.to_string(),
        config: resolved,
        started_unix_seconds,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(RunSummary {
        out: out.clone(),
        curves,
        alignment,
        manifest,
    })
}

fn load_log(dataset: &Path, group: Option<&str>) -> Result<ReplayLog> {
    let (_, log) = load_replay(dataset)?;
    let log = match group {
        Some(g) => log.filter_group(g),
        None => log,
    };
    if log.is_empty() {
        return Err(Error::Validation(format!(
            "{}: no rows selected",
            dataset.display()
        )));
    }
    Ok(log)
}

/// Alignment report of a dataset (optionally one group of it).
pub fn report(dataset: &Path, group: Option<&str>) -> Result<AlignmentReport> {
    let log = load_log(dataset, group)?;
    let grid = ConfidenceGrid::from_observations(log.observations())?;
    monotonicity_report(&CellCounts::from_observations(&grid, log.observations())?)
}

/// The near-optimality bound for threshold policies next to the exact gap
/// it bounds on the dataset's plug-in instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mae: f64,
    /// Utility rescaled to `[0, 1]`; the bound is in these units.
    pub utility_normalized: UtilityTable,
    pub bound: f64,
    /// Plug-in gap between the unrestricted and best threshold policies.
    pub plug_in_gap: Option<f64>,
}

pub fn bound_from_mae(mae: f64, utility: UtilityTable) -> Result<BoundReport> {
    let normalized = utility.normalized();
    Ok(BoundReport {
        mae,
        utility_normalized: normalized,
        bound: suboptimality_bound(mae, &normalized)?,
        plug_in_gap: None,
    })
}

pub fn bound_from_dataset(
    dataset: &Path,
    group: Option<&str>,
    utility: UtilityTable,
) -> Result<BoundReport> {
    let log = load_log(dataset, group)?;
    let grid = ConfidenceGrid::from_observations(log.observations())?;
    let counts = CellCounts::from_observations(&grid, log.observations())?;
    let (mae, _) = mae_eae(&ConditionalTable::from_counts(&counts))?;
    let normalized = utility.normalized();
    // gap of an empirical instance: unseen cells carry no mass
    let inst = counts.plug_in_instance(normalized)?;
    Ok(BoundReport {
        plug_in_gap: Some(threshold_gap(&inst)),
        ..bound_from_mae(mae, utility)?
    })
}
