//! Regret accounting, alignment metrics, concentration radii and Monte
//! Carlo checks of uniform deviation bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{rng_from_seed, CellCounts, SimRng};
use crate::error::{Error, Result};
use crate::learners::{best_threshold_policy, exact_policy_value, unrestricted_value};
use crate::model::{Decision, Instance, RunTrace, UtilityTable};

/// Cells with fewer observations are flagged as low-count in reports.
pub const LOW_COUNT: u64 = 5;

/// z-score of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

/// `μ(a*|h,b) − μ(a|h,b)` with `a*` the pointwise best decision.
pub fn instantaneous_regret(instance: &Instance, h: usize, b: usize, a: Decision) -> f64 {
    let best = instance
        .mu(Decision::One, h, b)
        .max(instance.mu(Decision::Zero, h, b));
    (best - instance.mu(a, h, b)).max(0.0)
}

/// `P(Y = 1 | h, b)` on a grid, with unknown cells left out.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    n_human: usize,
    n_ai: usize,
    values: Vec<Option<f64>>,
}

impl ConditionalTable {
    pub fn new(n_human: usize, n_ai: usize, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != n_human * n_ai {
            return Err(Error::LengthMismatch {
                expected: n_human * n_ai,
                found: values.len(),
            });
        }
        Ok(Self {
            n_human,
            n_ai,
            values,
        })
    }

    /// Rows are human levels, columns AI levels.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_ai = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_ai) {
            return Err(Error::Invariant("ragged table".into()));
        }
        Self::new(
            rows.len(),
            n_ai,
            rows.iter()
                .flat_map(|r| r.iter().map(|v| Some(*v)))
                .collect(),
        )
    }

    pub fn from_instance(instance: &Instance) -> Self {
        Self {
            n_human: instance.grid().n_human(),
            n_ai: instance.grid().n_ai(),
            values: instance.cond_table().iter().map(|v| Some(*v)).collect(),
        }
    }

    /// Empirical frequencies; cells with zero count are excluded.
    pub fn from_counts(counts: &CellCounts) -> Self {
        let g = counts.grid();
        let values = (0..g.n_human())
            .flat_map(|i| (0..g.n_ai()).map(move |j| (i, j)))
            .map(|(i, j)| counts.p_one(i, j))
            .collect();
        Self {
            n_human: g.n_human(),
            n_ai: g.n_ai(),
            values,
        }
    }

    pub fn get(&self, h: usize, b: usize) -> Option<f64> {
        self.values[h * self.n_ai + b]
    }
}

/// Maximum and expected alignment error.
///
/// Over ordered pairs `(h, b) ≤ (h', b')` (identity pairs included) of known
/// cells, `MAE = max [P(h,b) − P(h',b')]` and
/// `EAE = Σ [P(h,b) − P(h',b')]₊ / (|H|·|B|)`.
pub fn mae_eae(table: &ConditionalTable) -> Result<(f64, f64)> {
    if table.n_human == 0 || table.n_ai == 0 {
        return Err(Error::Domain("empty grid".into()));
    }
    let mut mae = f64::NEG_INFINITY;
    let mut positive = 0.0;
    for i in 0..table.n_human {
        for j in 0..table.n_ai {
            let Some(p) = table.get(i, j) else { continue };
            for i2 in i..table.n_human {
                for j2 in j..table.n_ai {
                    let Some(q) = table.get(i2, j2) else { continue };
                    let d = p - q;
                    mae = mae.max(d);
                    positive += d.max(0.0);
                }
            }
        }
    }
    if mae == f64::NEG_INFINITY {
        return Err(Error::Domain("no cell with data".into()));
    }
    Ok((mae, positive / (table.n_human * table.n_ai) as f64))
}

/// Number of ordered pairs `(h, b) ≤ (h', b')` on a full grid.
pub fn ordered_pair_count(n_human: usize, n_ai: usize) -> usize {
    n_human * (n_human + 1) / 2 * (n_ai * (n_ai + 1) / 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub h: f64,
    pub b: f64,
    pub n: u64,
    pub ones: u64,
    pub p_one: Option<f64>,
    pub low_count: bool,
}

/// A pair `b < b'` at fixed `h` with `P̂(Y=1|h,b) > P̂(Y=1|h,b')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub h: f64,
    pub b_low: f64,
    pub b_high: f64,
    pub p_low: f64,
    pub p_high: f64,
    pub gap: f64,
    pub n_low: u64,
    pub n_high: u64,
    pub low_count: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSupport {
    pub h: f64,
    pub n: u64,
    pub distinct_b: usize,
}

/// Whether a report describes observed frequencies or an exact instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportSource {
    Data,
    Instance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub source: ReportSource,
    pub mae: f64,
    pub eae: f64,
    pub n_observations: u64,
    pub human_levels: Vec<f64>,
    pub ai_levels: Vec<f64>,
    pub cells: Vec<CellEstimate>,
    pub violations: Vec<Violation>,
    pub per_h_support: Vec<LevelSupport>,
}

/// Alignment metrics, per-level monotonicity violations in `b`, and the
/// per-cell empirical probabilities behind them.
pub fn monotonicity_report(counts: &CellCounts) -> Result<AlignmentReport> {
    let g = counts.grid();
    let (mae, eae) = mae_eae(&ConditionalTable::from_counts(counts))?;
    let mut cells = Vec::new();
    let mut violations = Vec::new();
    let mut per_h_support = Vec::new();
    for (i, &h) in g.human_levels().iter().enumerate() {
        let mut level_n = 0;
        let mut distinct = 0;
        for (j, &b) in g.ai_levels().iter().enumerate() {
            let n = counts.count(i, j);
            level_n += n;
            distinct += usize::from(n > 0);
            cells.push(CellEstimate {
                h,
                b,
                n,
                ones: counts.ones(i, j),
                p_one: counts.p_one(i, j),
                low_count: n < LOW_COUNT,
            });
            let Some(p) = counts.p_one(i, j) else {
                continue;
            };
            for (j2, &b2) in g.ai_levels().iter().enumerate().skip(j + 1) {
                let Some(q) = counts.p_one(i, j2) else {
                    continue;
                };
                if p > q {
                    let n2 = counts.count(i, j2);
                    violations.push(Violation {
                        h,
                        b_low: b,
                        b_high: b2,
                        p_low: p,
                        p_high: q,
                        gap: p - q,
                        n_low: n,
                        n_high: n2,
                        low_count: n.min(n2) < LOW_COUNT,
                    });
                }
            }
        }
        per_h_support.push(LevelSupport {
            h,
            n: level_n,
            distinct_b: distinct,
        });
    }
    Ok(AlignmentReport {
        source: ReportSource::Data,
        mae,
        eae,
        n_observations: counts.n(),
        human_levels: g.human_levels().to_vec(),
        ai_levels: g.ai_levels().to_vec(),
        cells,
        violations,
        per_h_support,
    })
}

/// The same report computed from an instance's exact conditional table.
/// Counts are zero and no cell is flagged.
pub fn instance_alignment_report(instance: &Instance) -> AlignmentReport {
    let g = instance.grid();
    let table = ConditionalTable::from_instance(instance);
    let (mae, eae) = mae_eae(&table).expect("instance grids are non-empty");
    let mut cells = Vec::new();
    let mut violations = Vec::new();
    for (i, &h) in g.human_levels().iter().enumerate() {
        for (j, &b) in g.ai_levels().iter().enumerate() {
            let p = instance.cond(i, j);
            cells.push(CellEstimate {
                h,
                b,
                n: 0,
                ones: 0,
                p_one: Some(p),
                low_count: false,
            });
            for (j2, &b2) in g.ai_levels().iter().enumerate().skip(j + 1) {
                let q = instance.cond(i, j2);
                if p > q {
                    violations.push(Violation {
                        h,
                        b_low: b,
                        b_high: b2,
                        p_low: p,
                        p_high: q,
                        gap: p - q,
                        n_low: 0,
                        n_high: 0,
                        low_count: false,
                    });
                }
            }
        }
    }
    AlignmentReport {
        source: ReportSource::Instance,
        mae,
        eae,
        n_observations: 0,
        human_levels: g.human_levels().to_vec(),
        ai_levels: g.ai_levels().to_vec(),
        cells,
        violations,
        per_h_support: g
            .human_levels()
            .iter()
            .map(|&h| LevelSupport {
                h,
                n: 0,
                distinct_b: g.n_ai(),
            })
            .collect(),
    }
}

/// `√(log(2/α) / (2n))`: with probability at least `1 − α` an empirical CDF
/// of `n` samples stays within this distance of the true CDF everywhere.
pub fn dkw_radius(n: u64, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("dkw_radius needs n >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    Ok(((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt())
}

/// `3·√(log(6·|H|·T³) / (2·n_t(h)))`, the radius defining the clean event.
pub fn clean_event_radius(n_t_h: u64, n_human: usize, horizon: u64) -> Result<f64> {
    if n_t_h == 0 || n_human == 0 || horizon == 0 {
        return Err(Error::Domain(
            "clean_event_radius needs positive counts".into(),
        ));
    }
    let t = horizon as f64;
    Ok(3.0 * ((6.0 * n_human as f64 * t * t * t).ln() / (2.0 * n_t_h as f64)).sqrt())
}

/// `2·exp(−2nε²)`.
pub fn dkw_bound(n: u64, eps: f64) -> f64 {
    2.0 * (-2.0 * n as f64 * eps * eps).exp()
}

/// A real-valued law with computable left- and right-continuous CDFs.
pub trait Law: Sync {
    fn sample(&self, rng: &mut SimRng) -> f64;
    /// `P(X ≤ x)`.
    fn cdf(&self, x: f64) -> f64;
    /// `P(X < x)`.
    fn cdf_below(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform01;

impl Law for Uniform01 {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        rng.random::<f64>()
    }

    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    fn cdf_below(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
}

/// A finitely supported law (e.g. AI confidences on a grid).
#[derive(Debug, Clone)]
pub struct DiscreteLaw {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() || values.is_empty() {
            return Err(Error::Invariant(
                "values and probabilities must align".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant(
                "support must be strictly increasing".into(),
            ));
        }
        let s: f64 = probs.iter().sum();
        if probs.iter().any(|p| *p < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::Invariant(
                "probabilities must be a distribution".into(),
            ));
        }
        Ok(Self { values, probs })
    }
}

impl Law for DiscreteLaw {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        let mut u = rng.random::<f64>();
        for (v, p) in self.values.iter().zip(&self.probs) {
            if u < *p {
                return *v;
            }
            u -= p;
        }
        *self.values.last().expect("nonempty support")
    }

    fn cdf(&self, x: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| **v <= x)
            .map(|(_, p)| p)
            .sum()
    }

    fn cdf_below(&self, x: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| **v < x)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Distinct sorted values with `(#< value, #≤ value)` counts.
fn distinct_with_counts(sample: &[f64]) -> Vec<(f64, usize, usize)> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    for (i, x) in sorted.iter().enumerate() {
        match out.last_mut() {
            Some(last) if last.0 == *x => last.2 = i + 1,
            _ => out.push((*x, i, i + 1)),
        }
    }
    out
}

/// `sup_z |F_n(z) − F(z)|` with `F_n(z) = #{X_i ≤ z}/n`.
pub fn sup_deviation_le(sample: &[f64], law: &dyn Law) -> f64 {
    let n = sample.len() as f64;
    let mut sup: f64 = 0.0;
    for (x, below, upto) in distinct_with_counts(sample) {
        sup = sup
            .max((upto as f64 / n - law.cdf(x)).abs())
            .max((below as f64 / n - law.cdf_below(x)).abs());
    }
    if sample.is_empty() {
        return 1.0;
    }
    sup
}

/// `sup_z |F⁺_n(z) − F⁺(z)|` with `F⁺_n(z) = #{X_i > z}/n`, `F⁺(z) = P(X > z)`.
pub fn sup_deviation_gt(sample: &[f64], law: &dyn Law) -> f64 {
    let n = sample.len();
    let mut sup: f64 = 0.0;
    for (x, below, upto) in distinct_with_counts(sample) {
        let above_at = (n - upto) as f64 / n as f64;
        let above_left = (n - below) as f64 / n as f64;
        sup = sup
            .max((above_at - (1.0 - law.cdf(x))).abs())
            .max((above_left - (1.0 - law.cdf_below(x))).abs());
    }
    if n == 0 {
        return 1.0;
    }
    sup
}

/// Pairs `(K, X)` with `K` drawn from `key_probs` and `X` independent of `K`.
pub struct KeyedLaw<'a> {
    pub key_probs: Vec<f64>,
    pub law: &'a dyn Law,
}

impl KeyedLaw<'_> {
    pub fn sample(&self, rng: &mut SimRng) -> (usize, f64) {
        let mut u = rng.random::<f64>();
        let mut key = self.key_probs.len() - 1;
        for (k, p) in self.key_probs.iter().enumerate() {
            if u < *p {
                key = k;
                break;
            }
            u -= p;
        }
        (key, self.law.sample(rng))
    }
}

/// Supremum over per-key threshold vectors `x̄ ∈ X^K` of
/// `|(1/n) Σ Δ(K_i, X_i) − E Δ(K, X)|`, where `Δ(k, x) = I[x ≤ x̄_k]`
/// (or `I[x > x̄_k]` when `strict`).
///
/// The deviation is a sum of one term per key, so the supremum of its
/// absolute value is `max(Σ_k sup g_k, −Σ_k inf g_k)`.
pub fn class_d_sup_deviation(sample: &[(usize, f64)], keyed: &KeyedLaw<'_>, strict: bool) -> f64 {
    let n = sample.len() as f64;
    let mut sup_total = 0.0;
    let mut inf_total = 0.0;
    for (k, &p) in keyed.key_probs.iter().enumerate() {
        let xs: Vec<f64> = sample
            .iter()
            .filter(|(kk, _)| *kk == k)
            .map(|(_, x)| *x)
            .collect();
        let nk = xs.len();
        // values of g_k at x → −∞ and x → +∞
        let tails = if strict {
            [nk as f64 / n - p, 0.0]
        } else {
            [0.0, nk as f64 / n - p]
        };
        let (mut hi, mut lo) = (tails[0].max(tails[1]), tails[0].min(tails[1]));
        for (x, below, upto) in distinct_with_counts(&xs) {
            let (at, left) = if strict {
                (
                    (nk - upto) as f64 / n - p * (1.0 - keyed.law.cdf(x)),
                    (nk - below) as f64 / n - p * (1.0 - keyed.law.cdf_below(x)),
                )
            } else {
                (
                    upto as f64 / n - p * keyed.law.cdf(x),
                    below as f64 / n - p * keyed.law.cdf_below(x),
                )
            };
            hi = hi.max(at).max(left);
            lo = lo.min(at).min(left);
        }
        sup_total += hi;
        inf_total += lo;
    }
    sup_total.max(-inf_total)
}

/// Which uniform deviation a coverage test measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationStatistic {
    /// `≤`-thresholds (the classical empirical CDF).
    LessEq,
    /// `>`-thresholds.
    Greater,
    /// Per-key `≤`-thresholds over `keys` uniformly weighted keys.
    ClassD { keys: usize },
    /// Per-key `>`-thresholds.
    ClassDStrict { keys: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub statistic: DeviationStatistic,
    pub n: u64,
    pub eps: f64,
    pub trials: u64,
    pub exceedances: u64,
    pub exceedance_rate: f64,
    /// `2·exp(−2nε²)` for the one-dimensional statistics.
    pub bound: Option<f64>,
    /// Median of the sup deviation across trials.
    pub median_deviation: f64,
}

/// One draw of the statistic from a fresh sample of size `n`.
pub fn deviation_draw(stat: DeviationStatistic, law: &dyn Law, n: u64, rng: &mut SimRng) -> f64 {
    match stat {
        DeviationStatistic::LessEq | DeviationStatistic::Greater => {
            let sample: Vec<f64> = (0..n).map(|_| law.sample(rng)).collect();
            if stat == DeviationStatistic::LessEq {
                sup_deviation_le(&sample, law)
            } else {
                sup_deviation_gt(&sample, law)
            }
        }
        DeviationStatistic::ClassD { keys } | DeviationStatistic::ClassDStrict { keys } => {
            let keyed = KeyedLaw {
                key_probs: vec![1.0 / keys as f64; keys],
                law,
            };
            let sample: Vec<(usize, f64)> = (0..n).map(|_| keyed.sample(rng)).collect();
            class_d_sup_deviation(
                &sample,
                &keyed,
                matches!(stat, DeviationStatistic::ClassDStrict { .. }),
            )
        }
    }
}

/// Fraction of `trials` independent samples whose sup deviation exceeds
/// `eps`. Trial `i` uses the stream seeded with `seed + i`.
pub fn dkw_coverage_test(
    law: &dyn Law,
    stat: DeviationStatistic,
    n: u64,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<CoverageResult> {
    if trials == 0 || n == 0 {
        return Err(Error::Domain(
            "coverage test needs n >= 1 and trials >= 1".into(),
        ));
    }
    if let DeviationStatistic::ClassD { keys } | DeviationStatistic::ClassDStrict { keys } = stat {
        if keys == 0 {
            return Err(Error::Domain("class D needs at least one key".into()));
        }
    }
    let mut deviations: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(seed.wrapping_add(i));
            deviation_draw(stat, law, n, &mut rng)
        })
        .collect();
    let exceedances = deviations.iter().filter(|d| **d > eps).count() as u64;
    deviations.sort_by(f64::total_cmp);
    let bound = match stat {
        DeviationStatistic::LessEq | DeviationStatistic::Greater => Some(dkw_bound(n, eps)),
        _ => None,
    };
    Ok(CoverageResult {
        statistic: stat,
        n,
        eps,
        trials,
        exceedances,
        exceedance_rate: exceedances as f64 / trials as f64,
        bound,
        median_deviation: median_sorted(&deviations),
    })
}

fn median_sorted(xs: &[f64]) -> f64 {
    let m = xs.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

/// Least-squares fit `y ≈ C·√(k/n)` through the origin; returns `C` and the
/// per-point relative residuals `|y − fit| / fit`.
pub fn fit_sqrt_envelope(points: &[(usize, f64)], n: u64) -> (f64, Vec<f64>) {
    let xs: Vec<f64> = points
        .iter()
        .map(|(k, _)| (*k as f64 / n as f64).sqrt())
        .collect();
    let sxy: f64 = xs.iter().zip(points).map(|(x, (_, y))| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let c = sxy / sxx;
    let residuals = xs
        .iter()
        .zip(points)
        .map(|(x, (_, y))| (y - c * x).abs() / (c * x))
        .collect();
    (c, residuals)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `MAE · [u11 − u01 + (3/2)(u00 − u01)]`, for a utility table in `[0, 1]`.
pub fn suboptimality_bound(mae: f64, utility: &UtilityTable) -> Result<f64> {
    if utility.as_array().iter().any(|u| !(0.0..=1.0).contains(u)) {
        return Err(Error::Domain(
            "suboptimality bound expects a utility normalized to [0, 1]".into(),
        ));
    }
    Ok(mae * (utility.u11 - utility.u01 + 1.5 * (utility.u00 - utility.u01)))
}

/// Exact expected-utility gap between the pointwise best policy and the best
/// threshold policy.
pub fn threshold_gap(instance: &Instance) -> f64 {
    unrestricted_value(instance) - exact_policy_value(instance, &best_threshold_policy(instance))
}

/// Mean cumulative regret per step across seeds, with a normal-approximation
/// 95% half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub learner_id: String,
    pub n_seeds: usize,
    pub mean: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    /// False with a single seed, where the sample deviation is undefined and
    /// the half-width is reported as 0.
    pub ci_defined: bool,
}

impl RegretCurve {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_halfwidth(&self) -> f64 {
        self.ci_halfwidth.last().copied().unwrap_or(0.0)
    }
}

pub fn aggregate_curves(traces: &[RunTrace]) -> Result<RegretCurve> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Domain("no traces to aggregate".into()))?;
    let series: Vec<Vec<f64>> = traces
        .iter()
        .map(|t| t.steps().iter().map(|s| s.cum_regret).collect())
        .collect();
    aggregate_series(&first.learner_id, &series)
}

/// Aggregates per-seed cumulative regret series of equal length.
pub fn aggregate_series(learner_id: &str, series: &[Vec<f64>]) -> Result<RegretCurve> {
    let first = series
        .first()
        .ok_or_else(|| Error::Domain("no traces to aggregate".into()))?;
    let len = first.len();
    if let Some(bad) = series.iter().find(|t| t.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            found: bad.len(),
        });
    }
    let k = series.len();
    let mut mean = Vec::with_capacity(len);
    let mut half = Vec::with_capacity(len);
    for s in 0..len {
        // shifted by the first value, so identical seeds give exactly zero spread
        let x0 = first[s];
        let d: Vec<f64> = series.iter().map(|t| t[s] - x0).collect();
        let sd: f64 = d.iter().sum();
        let m = x0 + sd / k as f64;
        let hw = if k > 1 {
            let ss: f64 = d.iter().map(|x| x * x).sum();
            let var = ((ss - sd * sd / k as f64) / (k - 1) as f64).max(0.0);
            Z_95 * var.sqrt() / (k as f64).sqrt()
        } else {
            0.0
        };
        mean.push(m);
        half.push(hw);
    }
    Ok(RegretCurve {
        learner_id: learner_id.to_string(),
        n_seeds: k,
        mean,
        ci_halfwidth: half,
        ci_defined: k > 1,
    })
}
