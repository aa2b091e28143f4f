//! Empirical utility estimators for threshold policies.
//!
//! For a fixed human confidence `h`, the empirical utility of the cut `c`
//! only changes when `c` crosses an observed AI confidence value, so with
//! `n` observations there are at most `n + 1` distinct values. The scans
//! below enumerate one representative per class instead of the whole grid.
//!
//! Two routes are provided. [`PerHStats`] keeps one sorted counter list per
//! human level and scores cuts level by level. [`JointStats`] keeps a single
//! table of joint counts and scores whole functions `ℓ : H → B` from joint
//! frequencies. Both compare candidates through [`ExactUtility`], so they
//! agree on every tie.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::exact::{ExactUtility, OutcomeCounts};
use crate::model::{Cut, Observation, ThresholdPolicy, UtilityTable};

/// A utility table together with its exact integer rescaling.
#[derive(Debug, Clone)]
pub struct Scorer {
    pub utility: UtilityTable,
    exact: ExactUtility,
}

impl Scorer {
    pub fn new(utility: UtilityTable) -> Self {
        Self {
            exact: ExactUtility::new(&utility),
            utility,
        }
    }

    pub fn cmp(&self, a: &OutcomeCounts, b: &OutcomeCounts) -> Ordering {
        self.exact.cmp(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BCell {
    b: f64,
    zeros: u64,
    ones: u64,
}

/// Observations with one fixed human confidence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HStats {
    cells: Vec<BCell>,
    n: u64,
}

/// Counters at one distinct observed AI confidence `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefixRow {
    pub b: f64,
    /// Observations with `b' ≤ b`.
    pub le: u64,
    /// Observations with `y = 0` and `b' ≤ b`.
    pub zeros_le: u64,
    /// Observations with `y = 0` and `b' > b`.
    pub zeros_gt: u64,
}

/// Counts entering the estimator for one cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CutCounts {
    pub n: u64,
    pub le: u64,
    pub zeros_le: u64,
    pub zeros_gt: u64,
}

impl CutCounts {
    /// `(decision, label)` outcome counts of the policy deciding 1 iff `b > cut`.
    pub fn outcomes(&self) -> OutcomeCounts {
        let zeros = self.zeros_le + self.zeros_gt;
        let ones_le = self.le - self.zeros_le;
        let ones_gt = self.n - zeros - ones_le;
        OutcomeCounts::new(
            ones_gt as i64,
            self.zeros_gt as i64,
            self.zeros_le as i64,
            ones_le as i64,
        )
    }

    /// `μ̄ = P(Y=0, B>c)(u10−u11) + P(Y=0, B≤c)(u00−u01) + P(B≤c)(u01−u11) + u11`.
    pub fn estimate(&self, u: &UtilityTable) -> Option<f64> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        Some(
            self.zeros_gt as f64 / n * (u.u10 - u.u11)
                + self.zeros_le as f64 / n * (u.u00 - u.u01)
                + self.le as f64 / n * (u.u01 - u.u11)
                + u.u11,
        )
    }
}

impl HStats {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn insert(&mut self, b: f64, y: u8) {
        let pos = self.cells.binary_search_by(|c| c.b.total_cmp(&b));
        let cell = match pos {
            Ok(i) => &mut self.cells[i],
            Err(i) => {
                self.cells.insert(
                    i,
                    BCell {
                        b,
                        zeros: 0,
                        ones: 0,
                    },
                );
                &mut self.cells[i]
            }
        };
        if y == 0 {
            cell.zeros += 1;
        } else {
            cell.ones += 1;
        }
        self.n += 1;
    }

    pub fn distinct_b(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.b).collect()
    }

    pub fn zeros(&self) -> u64 {
        self.cells.iter().map(|c| c.zeros).sum()
    }

    pub fn prefix_counters(&self) -> Vec<PrefixRow> {
        let total_zeros = self.zeros();
        let mut le = 0;
        let mut zeros_le = 0;
        self.cells
            .iter()
            .map(|c| {
                le += c.zeros + c.ones;
                zeros_le += c.zeros;
                PrefixRow {
                    b: c.b,
                    le,
                    zeros_le,
                    zeros_gt: total_zeros - zeros_le,
                }
            })
            .collect()
    }

    pub fn counts_at(&self, cut: Cut) -> CutCounts {
        let mut out = CutCounts {
            n: self.n,
            ..Default::default()
        };
        for c in &self.cells {
            if cut.covers(c.b) {
                out.le += c.zeros + c.ones;
                out.zeros_le += c.zeros;
            } else {
                out.zeros_gt += c.zeros;
            }
        }
        out
    }
}

/// Representative cut of the `class`-th interval between consecutive
/// observed values `observed` (sorted, distinct). Class `0` lies below every
/// observation and class `observed.len()` above every observation.
///
/// With `levels`, the representative is the largest level inside the
/// interval, so that ties resolve to the largest threshold of the level set.
pub fn class_cut(observed: &[f64], class: usize, levels: Option<&[f64]>) -> Cut {
    let m = observed.len();
    if class >= m {
        return Cut::AboveAll;
    }
    let upper = observed[class];
    let largest_below = levels.and_then(|l| l.iter().rev().find(|g| **g < upper).copied());
    if class == 0 {
        return largest_below.map_or(Cut::BelowAll, Cut::At);
    }
    let lower = observed[class - 1];
    match largest_below {
        Some(g) if g >= lower => Cut::At(g),
        _ => Cut::At(lower),
    }
}

/// Index of the last maximum under `cmp`, i.e. ties go to the largest index.
fn last_argmax<T>(items: &[T], mut cmp: impl FnMut(&T, &T) -> Ordering) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in 0..items.len() {
        match best {
            Some(b) if cmp(&items[i], &items[b]) == Ordering::Less => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Per-human-level counters for the level-by-level estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PerHStats {
    human_levels: Vec<f64>,
    per_h: Vec<HStats>,
}

impl PerHStats {
    pub fn new(human_levels: &[f64]) -> Self {
        Self {
            human_levels: human_levels.to_vec(),
            per_h: vec![HStats::default(); human_levels.len()],
        }
    }

    pub fn human_index(&self, h: f64) -> Option<usize> {
        self.human_levels.binary_search_by(|v| v.total_cmp(&h)).ok()
    }

    pub fn update(&mut self, obs: &Observation) -> Result<()> {
        let i = self.human_index(obs.h).ok_or_else(|| {
            Error::Validation(format!("human confidence {} is not a grid level", obs.h))
        })?;
        self.per_h[i].insert(obs.b, obs.y);
        Ok(())
    }

    pub fn level(&self, h_index: usize) -> &HStats {
        &self.per_h[h_index]
    }

    pub fn n_levels(&self) -> usize {
        self.per_h.len()
    }

    pub fn n(&self, h_index: usize) -> u64 {
        self.per_h[h_index].n
    }
}

/// `μ̄_t(cut | h)`, or `None` when no observation with this `h` exists yet.
pub fn estimate_mu_bh(
    stats: &PerHStats,
    h_index: usize,
    cut: Cut,
    utility: &UtilityTable,
) -> Option<f64> {
    stats.level(h_index).counts_at(cut).estimate(utility)
}

/// Maximizer of `μ̄_t(· | h)` over one cut per class, ties to the largest
/// cut. Returns the cut, its estimated utility and its outcome counts.
pub fn best_threshold(
    stats: &PerHStats,
    h_index: usize,
    scorer: &Scorer,
    levels: Option<&[f64]>,
) -> Option<(Cut, f64, OutcomeCounts)> {
    let hs = stats.level(h_index);
    if hs.n == 0 {
        return None;
    }
    let rows = hs.prefix_counters();
    let total_zeros = hs.zeros();
    let below_all = CutCounts {
        n: hs.n,
        le: 0,
        zeros_le: 0,
        zeros_gt: total_zeros,
    };
    let candidates: Vec<CutCounts> = std::iter::once(below_all)
        .chain(rows.iter().map(|r| CutCounts {
            n: hs.n,
            le: r.le,
            zeros_le: r.zeros_le,
            zeros_gt: r.zeros_gt,
        }))
        .collect();
    let outcomes: Vec<OutcomeCounts> = candidates.iter().map(CutCounts::outcomes).collect();
    let best = last_argmax(&outcomes, |a, b| scorer.cmp(a, b))?;
    let observed: Vec<f64> = rows.iter().map(|r| r.b).collect();
    let cut = class_cut(&observed, best, levels);
    let value = candidates[best].estimate(&scorer.utility)?;
    Some((cut, value, outcomes[best]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct JointCell {
    h: usize,
    b: f64,
    zeros: u64,
    ones: u64,
}

/// Joint counts over `(h, b)` cells, for estimating whole functions `ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointStats {
    human_levels: Vec<f64>,
    cells: Vec<JointCell>,
    n: u64,
}

impl JointStats {
    pub fn new(human_levels: &[f64]) -> Self {
        Self {
            human_levels: human_levels.to_vec(),
            cells: Vec::new(),
            n: 0,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn n_levels(&self) -> usize {
        self.human_levels.len()
    }

    pub fn update(&mut self, obs: &Observation) -> Result<()> {
        let h = self
            .human_levels
            .binary_search_by(|v| v.total_cmp(&obs.h))
            .map_err(|_| {
                Error::Validation(format!("human confidence {} is not a grid level", obs.h))
            })?;
        let key = |c: &JointCell| c.h.cmp(&h).then(c.b.total_cmp(&obs.b));
        let i = match self.cells.binary_search_by(key) {
            Ok(i) => i,
            Err(i) => {
                self.cells.insert(
                    i,
                    JointCell {
                        h,
                        b: obs.b,
                        zeros: 0,
                        ones: 0,
                    },
                );
                i
            }
        };
        if obs.y == 0 {
            self.cells[i].zeros += 1;
        } else {
            self.cells[i].ones += 1;
        }
        self.n += 1;
        Ok(())
    }

    /// Outcome counts of the policy `b > ℓ(h)` over the whole history.
    pub fn outcomes(&self, policy: &ThresholdPolicy) -> OutcomeCounts {
        self.cells
            .iter()
            .fold(OutcomeCounts::default(), |mut acc, c| {
                if policy.cut(c.h).covers(c.b) {
                    acc.n00 += c.zeros as i64;
                    acc.n01 += c.ones as i64;
                } else {
                    acc.n10 += c.zeros as i64;
                    acc.n11 += c.ones as i64;
                }
                acc
            })
    }

    /// The three empirical joint frequencies of the estimator:
    /// `P_t(Y=0, B>ℓ(H))`, `P_t(Y=0, B≤ℓ(H))`, `P_t(B≤ℓ(H))`.
    pub fn frequencies(&self, policy: &ThresholdPolicy) -> Option<(f64, f64, f64)> {
        if self.n == 0 {
            return None;
        }
        let (mut zeros_gt, mut zeros_le, mut le) = (0u64, 0u64, 0u64);
        for c in &self.cells {
            if policy.cut(c.h).covers(c.b) {
                zeros_le += c.zeros;
                le += c.zeros + c.ones;
            } else {
                zeros_gt += c.zeros;
            }
        }
        let n = self.n as f64;
        Some((zeros_gt as f64 / n, zeros_le as f64 / n, le as f64 / n))
    }

    fn observed_b(&self, h: usize) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.h == h)
            .map(|c| c.b)
            .collect()
    }

    /// Counts of observations per human level.
    pub fn n_per_level(&self) -> Vec<u64> {
        let mut out = vec![0; self.human_levels.len()];
        for c in &self.cells {
            out[c.h] += c.zeros + c.ones;
        }
        out
    }
}

/// `μ̄_t(ℓ)` from joint frequencies, or `None` with an empty history.
pub fn estimate_mu_ell(
    stats: &JointStats,
    policy: &ThresholdPolicy,
    u: &UtilityTable,
) -> Option<f64> {
    let (zeros_gt, zeros_le, le) = stats.frequencies(policy)?;
    Some(zeros_gt * (u.u10 - u.u11) + zeros_le * (u.u00 - u.u01) + le * (u.u01 - u.u11) + u.u11)
}

/// The function `ℓ̄_t` maximizing `μ̄_t(ℓ)`.
///
/// The objective is a sum of one term per human level, so maximizing one
/// coordinate at a time (others held fixed) reaches the global maximum; each
/// coordinate keeps the largest maximizing cut. Levels without data get
/// `AboveAll`.
pub fn best_ell(stats: &JointStats, scorer: &Scorer, levels: Option<&[f64]>) -> ThresholdPolicy {
    let n_levels = stats.n_levels();
    let mut policy = ThresholdPolicy::uniform(n_levels, Cut::AboveAll);
    let mut cuts: Vec<Cut> = policy.cuts().to_vec();
    for h in 0..n_levels {
        let observed = stats.observed_b(h);
        if observed.is_empty() {
            continue;
        }
        let candidates: Vec<Cut> = (0..=observed.len())
            .map(|j| class_cut(&observed, j, levels))
            .collect();
        let totals: Vec<OutcomeCounts> = candidates
            .iter()
            .map(|c| {
                cuts[h] = *c;
                stats.outcomes(&ThresholdPolicy::new(cuts.clone()))
            })
            .collect();
        let best = last_argmax(&totals, |a, b| scorer.cmp(a, b)).expect("nonempty candidates");
        cuts[h] = candidates[best];
        policy = ThresholdPolicy::new(cuts.clone());
    }
    policy
}
