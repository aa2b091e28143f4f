//! Sources of `(h_t, b_t, y_t)` streams: synthetic instances satisfying
//! perfect alignment, the two-decision hard family used for lower bounds,
//! and replays of recorded human-subject logs.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConfidenceGrid, Decision, Instance, Observation, UtilityTable};

/// Seeded generator used for every stochastic component.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Maps `(h, b)` to `P(Y = 1 | h, b)`. Every variant is nondecreasing in
/// both arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Link {
    /// `σ(κ·(h + b − 1))`.
    Logistic { kappa: f64 },
    /// `clamp(1/2 + slope·(h + b − 1), 0, 1)`.
    PiecewiseLinear { slope: f64 },
    /// `P(Y = 1 | h, b) = b`.
    Identity,
    /// Sorted uniform draws assigned along a random linear extension of the
    /// product order, optionally rounded to multiples of `quantum`.
    RandomMonotone { quantum: Option<f64> },
}

impl Default for Link {
    fn default() -> Self {
        Link::Logistic { kappa: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    #[default]
    Uniform,
    /// Independent `H` and `B` with random positive marginals.
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignedInstanceSpec {
    pub n_human: usize,
    pub n_ai: usize,
    #[serde(default)]
    pub link: Link,
    #[serde(default)]
    pub joint: JointKind,
    #[serde(default)]
    pub seed: u64,
}

impl AlignedInstanceSpec {
    pub fn new(n_human: usize, n_ai: usize) -> Self {
        Self {
            n_human,
            n_ai,
            link: Link::default(),
            joint: JointKind::default(),
            seed: 0,
        }
    }

    /// Logistic slope that shrinks like `1/√T`, so the per-cell margins sit
    /// at the statistical resolution of a horizon-`T` run.
    pub fn horizon_scaled_kappa(kappa_at_reference: f64, reference_t: usize, t: usize) -> f64 {
        kappa_at_reference * (reference_t as f64 / t as f64).sqrt()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn random_marginal(n: usize, rng: &mut SimRng) -> Vec<f64> {
    // bounded away from zero so every cell is reachable
    let w: Vec<f64> = (0..n).map(|_| 0.2 + rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn joint_table(kind: JointKind, n_h: usize, n_b: usize, rng: &mut SimRng) -> Vec<f64> {
    match kind {
        JointKind::Uniform => vec![1.0 / (n_h * n_b) as f64; n_h * n_b],
        JointKind::Product => {
            let ph = random_marginal(n_h, rng);
            let pb = random_marginal(n_b, rng);
            let mut t: Vec<f64> = ph
                .iter()
                .flat_map(|a| pb.iter().map(move |b| a * b))
                .collect();
            let s: f64 = t.iter().sum();
            t.iter_mut().for_each(|x| *x /= s);
            t
        }
    }
}

fn random_monotone(n_h: usize, n_b: usize, quantum: Option<f64>, rng: &mut SimRng) -> Vec<f64> {
    let mut values: Vec<f64> = (0..n_h * n_b).map(|_| rng.random::<f64>()).collect();
    values.sort_by(f64::total_cmp);
    if let Some(q) = quantum.filter(|q| *q > 0.0) {
        for v in &mut values {
            *v = ((*v / q).round() * q).clamp(0.0, 1.0);
        }
    }
    // (i, j) ≤ (i', j') strictly implies i'+j' ≥ i+j+1 > key(i, j)
    let mut order: Vec<(f64, usize)> = (0..n_h * n_b)
        .map(|c| {
            let (i, j) = (c / n_b, c % n_b);
            ((i + j) as f64 + 0.999 * rng.random::<f64>(), c)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cond = vec![0.0; n_h * n_b];
    for (rank, (_, cell)) in order.into_iter().enumerate() {
        cond[cell] = values[rank];
    }
    cond
}

/// Draws a perfectly aligned instance.
pub fn sample_aligned(spec: &AlignedInstanceSpec, utility: UtilityTable) -> Result<Instance> {
    if spec.n_human == 0 || spec.n_ai == 0 {
        return Err(Error::Config("grid sizes must be at least 1".into()));
    }
    let grid = ConfidenceGrid::evenly_spaced(spec.n_human, spec.n_ai)?;
    let mut rng = rng_from_seed(spec.seed);
    let joint = joint_table(spec.joint, spec.n_human, spec.n_ai, &mut rng);
    let cond = match spec.link {
        Link::RandomMonotone { quantum } => {
            random_monotone(spec.n_human, spec.n_ai, quantum, &mut rng)
        }
        link => {
            let mut cond = Vec::with_capacity(grid.n_cells());
            for &h in grid.human_levels() {
                for &b in grid.ai_levels() {
                    cond.push(match link {
                        Link::Logistic { kappa } => sigmoid(kappa * (h + b - 1.0)),
                        Link::PiecewiseLinear { slope } => {
                            (0.5 + slope * (h + b - 1.0)).clamp(0.0, 1.0)
                        }
                        Link::Identity => b,
                        Link::RandomMonotone { .. } => unreachable!(),
                    });
                }
            }
            cond
        }
    };
    Instance::new(grid, joint, cond, utility)
}

/// The lower-bound family: uniform contexts, and in each context one
/// uniformly drawn decision is better than the other by exactly `epsilon`
/// in normalized utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardInstanceSpec {
    pub n_human: usize,
    pub n_ai: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

/// `ε = √(|H|·|B| / T)`.
pub fn hard_epsilon(n_human: usize, n_ai: usize, t: usize) -> f64 {
    ((n_human * n_ai) as f64 / t as f64).sqrt()
}

pub fn sample_hard_instance(spec: &HardInstanceSpec) -> Result<Instance> {
    if !(0.0..0.5).contains(&spec.epsilon) {
        return Err(Error::Config(format!(
            "epsilon {} outside [0, 1/2)",
            spec.epsilon
        )));
    }
    let grid = ConfidenceGrid::evenly_spaced(spec.n_human, spec.n_ai)?;
    let mut rng = rng_from_seed(spec.seed);
    let cells = grid.n_cells();
    // with u = (1,0,1,0): μ(1) = P(Y=1), μ(0) = P(Y=0); the gap is ε
    let cond = (0..cells)
        .map(|_| {
            if rng.random::<bool>() {
                0.5 + spec.epsilon / 2.0
            } else {
                0.5 - spec.epsilon / 2.0
            }
        })
        .collect();
    Instance::new(
        grid,
        vec![1.0 / cells as f64; cells],
        cond,
        UtilityTable::zero_one(),
    )
}

/// Precomputed sampler for i.i.d. draws from an instance.
#[derive(Debug, Clone)]
pub struct StreamSampler<'a> {
    instance: &'a Instance,
    cumulative: Vec<f64>,
}

impl<'a> StreamSampler<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let mut acc = 0.0;
        let cumulative = instance
            .joint_table()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self {
            instance,
            cumulative,
        }
    }

    /// Draws a cell index pair from `P(H, B)`.
    pub fn draw_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let u = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let joint = self.instance.joint_table();
        let idx = match self.cumulative.iter().position(|c| u < *c) {
            Some(i) => i,
            None => joint.iter().rposition(|p| *p > 0.0).unwrap_or(0),
        };
        let n_b = self.instance.grid().n_ai();
        (idx / n_b, idx % n_b)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation {
        let (i, j) = self.draw_cell(rng);
        let grid = self.instance.grid();
        let y = u8::from(rng.random::<f64>() < self.instance.cond(i, j));
        Observation {
            h: grid.human_levels()[i],
            b: grid.ai_levels()[j],
            y,
        }
    }

    /// Draws `(b, y)` conditional on `H = h_i`.
    pub fn draw_given_h<R: Rng + ?Sized>(&self, h: usize, rng: &mut R) -> (f64, u8) {
        let n_b = self.instance.grid().n_ai();
        let row: Vec<f64> = (0..n_b).map(|j| self.instance.joint(h, j)).collect();
        let mass: f64 = row.iter().sum();
        let mut u = rng.random::<f64>() * mass;
        let mut pick = row.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        for (j, p) in row.iter().enumerate() {
            if u < *p {
                pick = j;
                break;
            }
            u -= p;
        }
        let y = u8::from(rng.random::<f64>() < self.instance.cond(h, pick));
        (self.instance.grid().ai_levels()[pick], y)
    }
}

/// One i.i.d. draw; builds the sampler table on every call, so prefer
/// [`StreamSampler`] in loops.
pub fn draw_step<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Observation {
    StreamSampler::new(instance).draw(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub obs: Observation,
    pub group: Option<String>,
    pub q: Option<String>,
}

/// A recorded interaction log in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayLog {
    pub rows: Vec<ReplayRow>,
}

impl ReplayLog {
    pub fn from_observations(obs: impl IntoIterator<Item = Observation>) -> Self {
        Self {
            rows: obs
                .into_iter()
                .map(|obs| ReplayRow {
                    obs,
                    group: None,
                    q: None,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn observations(&self) -> impl Iterator<Item = &Observation> + '_ {
        self.rows.iter().map(|r| &r.obs)
    }

    /// Rows whose `group` column equals `group`.
    pub fn filter_group(&self, group: &str) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .filter(|r| r.group.as_deref() == Some(group))
                .cloned()
                .collect(),
        }
    }
}

const HEADER_H: &str = "h";
const HEADER_B: &str = "b";
const HEADER_Y: &str = "y";
const HEADER_GROUP: &str = "group";
const HEADER_Q: &str = "q";

fn rescale_percent(values: &mut [f64]) {
    if values.iter().any(|v| *v > 1.0) && values.iter().all(|v| *v <= 100.0) {
        for v in values.iter_mut() {
            *v /= 100.0;
        }
    }
}

/// Parses a replay file body. `label` names the source in error messages.
pub fn parse_replay<R: Read>(reader: R, label: &Path) -> Result<(ConfidenceGrid, ReplayLog)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: label.to_path_buf(),
        line,
        message,
    };
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (ih, ib, iy) = match (col(HEADER_H), col(HEADER_B), col(HEADER_Y)) {
        (Some(h), Some(b), Some(y)) => (h, b, y),
        _ => {
            return Err(parse_err(
                1,
                format!(
                    "header must contain h,b,y; found {:?}",
                    headers.iter().collect::<Vec<_>>()
                ),
            ))
        }
    };
    let (ig, iq) = (col(HEADER_GROUP), col(HEADER_Q));
    if let Some(extra) = headers
        .iter()
        .find(|h| ![HEADER_H, HEADER_B, HEADER_Y, HEADER_GROUP, HEADER_Q].contains(h))
    {
        return Err(parse_err(1, format!("unknown column {extra:?}")));
    }

    let mut hs = Vec::new();
    let mut bs = Vec::new();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize, what: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("bad {what} value {raw:?}")))
        };
        let h = num(ih, "h")?;
        let b = num(ib, "b")?;
        let y_raw = record.get(iy).unwrap_or("");
        let y = match y_raw {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Validation(format!(
                    "{}:{line}: label {other:?} not in {{0, 1}}",
                    label.display()
                )))
            }
        };
        hs.push(h);
        bs.push(b);
        rows.push(ReplayRow {
            obs: Observation { h, b, y },
            group: ig.and_then(|i| record.get(i)).map(str::to_owned),
            q: iq.and_then(|i| record.get(i)).map(str::to_owned),
        });
    }
    if rows.is_empty() {
        return Err(Error::Validation(format!(
            "{}: no data rows",
            label.display()
        )));
    }
    rescale_percent(&mut hs);
    rescale_percent(&mut bs);
    for ((row, h), b) in rows.iter_mut().zip(hs).zip(bs) {
        row.obs.h = h;
        row.obs.b = b;
    }
    let log = ReplayLog { rows };
    let grid = ConfidenceGrid::from_observations(log.observations())
        .map_err(|e| Error::Validation(format!("{}: {e}", label.display())))?;
    Ok((grid, log))
}

/// Loads a comma-separated replay file with header `h,b,y[,group][,q]`.
pub fn load_replay(path: &Path) -> Result<(ConfidenceGrid, ReplayLog)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_replay(std::io::BufReader::new(file), path)
}

/// Writes a log in the replay format; `group` and `q` columns are emitted
/// when any row carries them.
pub fn write_replay<W: Write>(writer: W, log: &ReplayLog) -> Result<()> {
    let with_group = log.rows.iter().any(|r| r.group.is_some());
    let with_q = log.rows.iter().any(|r| r.q.is_some());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header = vec![HEADER_H, HEADER_B, HEADER_Y];
    if with_group {
        header.push(HEADER_GROUP);
    }
    if with_q {
        header.push(HEADER_Q);
    }
    w.write_record(&header)?;
    for r in &log.rows {
        let mut rec = vec![
            r.obs.h.to_string(),
            r.obs.b.to_string(),
            r.obs.y.to_string(),
        ];
        if with_group {
            rec.push(r.group.clone().unwrap_or_default());
        }
        if with_q {
            rec.push(r.q.clone().unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<replay writer>", e))?;
    Ok(())
}

/// A uniformly random permutation of the log, deterministic in `seed`.
pub fn shuffle_replay(log: &ReplayLog, seed: u64) -> ReplayLog {
    let mut rows = log.rows.clone();
    rows.shuffle(&mut rng_from_seed(seed));
    ReplayLog { rows }
}

/// Per-cell counts of observations and of `y = 1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCounts {
    grid: ConfidenceGrid,
    total: Vec<u64>,
    ones: Vec<u64>,
}

impl CellCounts {
    pub fn from_observations<'a>(
        grid: &ConfidenceGrid,
        observations: impl IntoIterator<Item = &'a Observation>,
    ) -> Result<Self> {
        let mut total = vec![0; grid.n_cells()];
        let mut ones = vec![0; grid.n_cells()];
        for o in observations {
            let (i, j) = grid.cell_of(o)?;
            let c = i * grid.n_ai() + j;
            total[c] += 1;
            ones[c] += u64::from(o.y);
        }
        Ok(Self {
            grid: grid.clone(),
            total,
            ones,
        })
    }

    pub fn grid(&self) -> &ConfidenceGrid {
        &self.grid
    }

    pub fn count(&self, h: usize, b: usize) -> u64 {
        self.total[h * self.grid.n_ai() + b]
    }

    pub fn ones(&self, h: usize, b: usize) -> u64 {
        self.ones[h * self.grid.n_ai() + b]
    }

    /// Empirical `P(Y = 1 | h, b)`, or `None` for unseen cells.
    pub fn p_one(&self, h: usize, b: usize) -> Option<f64> {
        let n = self.count(h, b);
        (n > 0).then(|| self.ones(h, b) as f64 / n as f64)
    }

    pub fn n(&self) -> u64 {
        self.total.iter().sum()
    }

    /// Plug-in environment: empirical `P(H, B)` and `P(Y = 1 | H, B)`.
    /// Unseen cells get `P(Y = 1) = 0`, so their pointwise best decision is 0.
    pub fn plug_in_instance(&self, utility: UtilityTable) -> Result<Instance> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Validation("no observations".into()));
        }
        let joint = self
            .total
            .iter()
            .map(|c| *c as f64 / n as f64)
            .collect::<Vec<_>>();
        let mass: f64 = joint.iter().sum();
        let joint = joint.into_iter().map(|p| p / mass).collect();
        let cond = self
            .total
            .iter()
            .zip(&self.ones)
            .map(|(t, o)| if *t == 0 { 0.0 } else { *o as f64 / *t as f64 })
            .collect();
        Instance::new(self.grid.clone(), joint, cond, utility)
    }
}

/// Decision used on a cell whose conditional probability is unknown.
pub const UNSEEN_CELL_DECISION: Decision = Decision::Zero;
