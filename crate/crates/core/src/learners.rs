//! Online learners and the exact optimal-policy oracle.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::estimators::{best_ell, best_threshold, JointStats, PerHStats, Scorer};
use crate::exact::OutcomeCounts;
use crate::model::{
    decision_rule_threshold, ConfidenceGrid, Cut, Decision, Instance, Observation, ThresholdPolicy,
    UtilityTable,
};

/// Step/observe interface shared by every learner so simulations and
/// replays run through one driver loop.
pub trait Learner {
    fn id(&self) -> &str;

    /// Decision for the context `(h, b)` given everything observed so far.
    fn decide(&mut self, h: f64, b: f64) -> Decision;

    /// Records the label of a step. Feedback is full: `y` is recorded
    /// whatever the decision was.
    fn observe(&mut self, obs: &Observation) -> Result<()>;
}

/// Which estimator route drives the aligned learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// One threshold per human level from per-level counters.
    PerH,
    /// A single function `ℓ : H → B` from joint counts.
    EllFunction,
}

#[derive(Debug, Clone)]
enum AlignedStats {
    PerH(PerHStats),
    Ell {
        stats: JointStats,
        cached: Option<ThresholdPolicy>,
    },
}

/// Learner that decides `1` iff `b_t` exceeds the empirically best threshold
/// for `h_t`; before any data for `h_t` it decides `0`.
#[derive(Debug, Clone)]
pub struct AlignedLearner {
    id: String,
    human_levels: Vec<f64>,
    ai_levels: Option<Vec<f64>>,
    scorer: Scorer,
    stats: AlignedStats,
}

impl AlignedLearner {
    /// Thresholds are reported as levels of `grid`'s AI confidence set.
    pub fn new(grid: &ConfidenceGrid, utility: UtilityTable, formulation: Formulation) -> Self {
        let mut l = Self::continuous(grid.human_levels(), utility, formulation);
        l.ai_levels = Some(grid.ai_levels().to_vec());
        l
    }

    /// Thresholds range over observed AI confidence values only; the AI
    /// confidence set may be infinite.
    pub fn continuous(
        human_levels: &[f64],
        utility: UtilityTable,
        formulation: Formulation,
    ) -> Self {
        let (id, stats) = match formulation {
            Formulation::PerH => ("aligned", AlignedStats::PerH(PerHStats::new(human_levels))),
            Formulation::EllFunction => (
                "aligned-ell",
                AlignedStats::Ell {
                    stats: JointStats::new(human_levels),
                    cached: None,
                },
            ),
        };
        Self {
            id: id.to_owned(),
            human_levels: human_levels.to_vec(),
            ai_levels: None,
            scorer: Scorer::new(utility),
            stats,
        }
    }

    pub fn formulation(&self) -> Formulation {
        match self.stats {
            AlignedStats::PerH(_) => Formulation::PerH,
            AlignedStats::Ell { .. } => Formulation::EllFunction,
        }
    }

    fn human_index(&self, h: f64) -> Option<usize> {
        self.human_levels.binary_search_by(|v| v.total_cmp(&h)).ok()
    }

    /// The currently selected threshold for human level `h_index`.
    pub fn threshold(&mut self, h_index: usize) -> Cut {
        let levels = self.ai_levels.as_deref();
        match &mut self.stats {
            AlignedStats::PerH(stats) => best_threshold(stats, h_index, &self.scorer, levels)
                .map_or(Cut::AboveAll, |(cut, _, _)| cut),
            AlignedStats::Ell { stats, cached } => cached
                .get_or_insert_with(|| best_ell(stats, &self.scorer, levels))
                .cut(h_index),
        }
    }

    pub fn policy(&mut self) -> ThresholdPolicy {
        ThresholdPolicy::new(
            (0..self.human_levels.len())
                .map(|h| self.threshold(h))
                .collect(),
        )
    }
}

impl Learner for AlignedLearner {
    fn id(&self) -> &str {
        &self.id
    }

    fn decide(&mut self, h: f64, b: f64) -> Decision {
        match self.human_index(h) {
            Some(i) => self.threshold(i).decide(b),
            None => Decision::Zero,
        }
    }

    fn observe(&mut self, obs: &Observation) -> Result<()> {
        match &mut self.stats {
            AlignedStats::PerH(stats) => stats.update(obs),
            AlignedStats::Ell { stats, cached } => {
                *cached = None;
                stats.update(obs)
            }
        }
    }
}

/// Per-context baseline: keeps, for every `(h, b)` seen, the un-normalized
/// payoff sums of both decisions over past steps in that context.
#[derive(Debug, Clone)]
pub struct VanillaLearner {
    scorer: Scorer,
    /// `(zeros, ones)` label counts per context.
    counts: HashMap<(u64, u64), (u64, u64)>,
}

impl VanillaLearner {
    pub fn new(utility: UtilityTable) -> Self {
        Self {
            scorer: Scorer::new(utility),
            counts: HashMap::new(),
        }
    }

    fn key(h: f64, b: f64) -> (u64, u64) {
        (h.to_bits(), b.to_bits())
    }

    fn outcome_sums(&self, h: f64, b: f64) -> (OutcomeCounts, OutcomeCounts) {
        let (zeros, ones) = self.counts.get(&Self::key(h, b)).copied().unwrap_or((0, 0));
        let (z, o) = (zeros as i64, ones as i64);
        (
            OutcomeCounts::new(0, 0, z, o),
            OutcomeCounts::new(o, z, 0, 0),
        )
    }

    /// `(Σ u(0, y_t'), Σ u(1, y_t'))` over past steps with context `(h, b)`.
    pub fn sums(&self, h: f64, b: f64) -> (f64, f64) {
        let (zero, one) = self.outcome_sums(h, b);
        (
            zero.value(&self.scorer.utility),
            one.value(&self.scorer.utility),
        )
    }
}

impl Learner for VanillaLearner {
    fn id(&self) -> &str {
        "vanilla"
    }

    fn decide(&mut self, h: f64, b: f64) -> Decision {
        let (zero, one) = self.outcome_sums(h, b);
        Decision::from_bool(self.scorer.cmp(&zero, &one).is_lt())
    }

    fn observe(&mut self, obs: &Observation) -> Result<()> {
        let entry = self.counts.entry(Self::key(obs.h, obs.b)).or_default();
        if obs.y == 0 {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
        Ok(())
    }
}

/// Builds a learner from its identifier: `aligned`, `aligned-ell` or `vanilla`.
pub fn learner_by_name(
    name: &str,
    grid: &ConfidenceGrid,
    utility: UtilityTable,
) -> Result<Box<dyn Learner + Send>> {
    match name {
        "aligned" => Ok(Box::new(AlignedLearner::new(
            grid,
            utility,
            Formulation::PerH,
        ))),
        "aligned-ell" => Ok(Box::new(AlignedLearner::new(
            grid,
            utility,
            Formulation::EllFunction,
        ))),
        "vanilla" => Ok(Box::new(VanillaLearner::new(utility))),
        other => Err(Error::Config(format!(
            "unknown learner {other:?} (expected aligned, aligned-ell or vanilla)"
        ))),
    }
}

/// Threshold policy with, per human level, the cut at the largest `b` whose
/// `P(Y=0 | h, b)` reaches the decision-rule threshold. Returned in
/// canonical form: `AboveAll` when that `b` is the largest level,
/// `BelowAll` when no level qualifies.
pub fn optimal_policy(instance: &Instance) -> ThresholdPolicy {
    let rho = decision_rule_threshold(instance.utility()).expect("instance utility is validated");
    let grid = instance.grid();
    let cuts = (0..grid.n_human())
        .map(|i| {
            let sup = (0..grid.n_ai())
                .rev()
                .find(|&j| 1.0 - instance.cond(i, j) >= rho);
            match sup {
                None => Cut::BelowAll,
                Some(j) if j + 1 == grid.n_ai() => Cut::AboveAll,
                Some(j) => Cut::At(grid.ai_levels()[j]),
            }
        })
        .collect();
    ThresholdPolicy::new(cuts)
}

/// Expected utility of a threshold policy under the instance distribution.
pub fn exact_policy_value(instance: &Instance, policy: &ThresholdPolicy) -> f64 {
    let grid = instance.grid();
    let mut total = 0.0;
    for i in 0..grid.n_human() {
        for (j, &b) in grid.ai_levels().iter().enumerate() {
            let p = instance.joint(i, j);
            if p > 0.0 {
                total += p * instance.mu(policy.decide(i, b), i, j);
            }
        }
    }
    total
}

/// Expected utility of the pointwise best decision in every cell.
pub fn unrestricted_value(instance: &Instance) -> f64 {
    let grid = instance.grid();
    let mut total = 0.0;
    for i in 0..grid.n_human() {
        for j in 0..grid.n_ai() {
            let p = instance.joint(i, j);
            if p > 0.0 {
                total +=
                    p * instance
                        .mu(Decision::One, i, j)
                        .max(instance.mu(Decision::Zero, i, j));
            }
        }
    }
    total
}

/// Best threshold policy by scanning every grid cut per level (the value is
/// additive over levels). Ties go to the largest cut.
pub fn best_threshold_policy(instance: &Instance) -> ThresholdPolicy {
    let grid = instance.grid();
    let cuts = (0..grid.n_human())
        .map(|i| {
            let candidates = std::iter::once(Cut::BelowAll)
                .chain(
                    grid.ai_levels()[..grid.n_ai() - 1]
                        .iter()
                        .map(|b| Cut::At(*b)),
                )
                .chain(std::iter::once(Cut::AboveAll));
            let mut best = (Cut::BelowAll, f64::NEG_INFINITY);
            for cut in candidates {
                let v: f64 = grid
                    .ai_levels()
                    .iter()
                    .enumerate()
                    .map(|(j, &b)| instance.joint(i, j) * instance.mu(cut.decide(b), i, j))
                    .sum();
                if v >= best.1 {
                    best = (cut, v);
                }
            }
            best.0
        })
        .collect();
    ThresholdPolicy::new(cuts)
}
