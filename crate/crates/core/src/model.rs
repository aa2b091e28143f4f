//! Domain types shared by every other module: confidence grids, utility
//! tables, observations, threshold policies, environments and run traces.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a joint distribution table.
pub const JOINT_MASS_TOLERANCE: f64 = 1e-12;

/// A binary decision `a ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Decision {
    Zero,
    One,
}

impl Decision {
    pub fn from_bool(one: bool) -> Self {
        if one {
            Decision::One
        } else {
            Decision::Zero
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Decision::Zero => 0,
            Decision::One => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Decision::Zero => Decision::One,
            Decision::One => Decision::Zero,
        }
    }
}

/// The ordered finite sets of human (`H`) and AI (`B`) confidence values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceGrid {
    human_levels: Vec<f64>,
    ai_levels: Vec<f64>,
}

fn check_levels(name: &str, levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Invariant(format!("{name} levels are empty")));
    }
    if let Some(bad) = levels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Invariant(format!(
            "{name} level {bad} lies outside [0, 1]"
        )));
    }
    if let Some(w) = levels.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Invariant(format!(
            "{name} levels are not strictly increasing at {} >= {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn find(levels: &[f64], value: f64) -> Option<usize> {
    levels.binary_search_by(|v| v.total_cmp(&value)).ok()
}

impl ConfidenceGrid {
    pub fn new(human_levels: Vec<f64>, ai_levels: Vec<f64>) -> Result<Self> {
        check_levels("human", &human_levels)?;
        check_levels("ai", &ai_levels)?;
        Ok(Self {
            human_levels,
            ai_levels,
        })
    }

    /// Evenly spread grid: `h_i = (i+1)/(|H|+1)`, `b_j = (j+1/2)/|B|`.
    pub fn evenly_spaced(n_human: usize, n_ai: usize) -> Result<Self> {
        if n_human == 0 || n_ai == 0 {
            return Err(Error::Config("grid sizes must be at least 1".into()));
        }
        let human = (0..n_human)
            .map(|i| (i + 1) as f64 / (n_human + 1) as f64)
            .collect();
        let ai = (0..n_ai).map(|j| (j as f64 + 0.5) / n_ai as f64).collect();
        Self::new(human, ai)
    }

    /// Grid made of the sorted distinct values found in `observations`.
    pub fn from_observations<'a>(
        observations: impl IntoIterator<Item = &'a Observation>,
    ) -> Result<Self> {
        let mut human = Vec::new();
        let mut ai = Vec::new();
        for o in observations {
            human.push(o.h);
            ai.push(o.b);
        }
        for v in [&mut human, &mut ai] {
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| a.total_cmp(b) == Ordering::Equal);
        }
        Self::new(human, ai)
    }

    pub fn human_levels(&self) -> &[f64] {
        &self.human_levels
    }

    pub fn ai_levels(&self) -> &[f64] {
        &self.ai_levels
    }

    pub fn n_human(&self) -> usize {
        self.human_levels.len()
    }

    pub fn n_ai(&self) -> usize {
        self.ai_levels.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_human() * self.n_ai()
    }

    /// Exact (bitwise-ordered) lookup of a human confidence value.
    pub fn human_index(&self, h: f64) -> Option<usize> {
        find(&self.human_levels, h)
    }

    pub fn ai_index(&self, b: f64) -> Option<usize> {
        find(&self.ai_levels, b)
    }

    /// Row-major cell index of an observation, or a validation error when
    /// its confidences are not grid members.
    pub fn cell_of(&self, obs: &Observation) -> Result<(usize, usize)> {
        match (self.human_index(obs.h), self.ai_index(obs.b)) {
            (Some(i), Some(j)) => Ok((i, j)),
            _ => Err(Error::Validation(format!(
                "observation (h={}, b={}) is not on the grid",
                obs.h, obs.b
            ))),
        }
    }
}

/// Payoffs `u(a, y)` for the four `(decision, label)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct UtilityTable {
    pub u11: f64,
    pub u10: f64,
    pub u00: f64,
    pub u01: f64,
}

impl UtilityTable {
    /// Validates the ordering: matching decision and label pays strictly more.
    pub fn new(u11: f64, u10: f64, u00: f64, u01: f64) -> Result<Self> {
        let all = [u11, u10, u00, u01];
        if all.iter().any(|u| !u.is_finite()) {
            return Err(Error::Invariant("utilities must be finite".into()));
        }
        if !(u11 > u10 && u11 > u01 && u00 > u10 && u00 > u01) {
            return Err(Error::Invariant(format!(
                "utility ({u11}, {u10}, {u00}, {u01}) violates u11>u10, u11>u01, u00>u10, u00>u01"
            )));
        }
        Ok(Self { u11, u10, u00, u01 })
    }

    /// `u(a, y) = I[a = y] - I[a != y]`.
    pub fn agreement() -> Self {
        Self {
            u11: 1.0,
            u10: -1.0,
            u00: 1.0,
            u01: -1.0,
        }
    }

    /// `u(a, y) = I[a = y]`.
    pub fn zero_one() -> Self {
        Self {
            u11: 1.0,
            u10: 0.0,
            u00: 1.0,
            u01: 0.0,
        }
    }

    pub fn get(&self, a: Decision, y: u8) -> f64 {
        match (a, y) {
            (Decision::One, 1) => self.u11,
            (Decision::One, _) => self.u10,
            (Decision::Zero, 1) => self.u01,
            (Decision::Zero, _) => self.u00,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.u11, self.u10, self.u00, self.u01]
    }

    /// Affine copy mapped onto `[0, 1]`: the smallest payoff goes to 0 and
    /// the largest to 1.
    pub fn normalized(&self) -> Self {
        let lo = self.u10.min(self.u01);
        let hi = self.u11.max(self.u00);
        let scale = hi - lo;
        let f = |u: f64| (u - lo) / scale;
        Self {
            u11: f(self.u11),
            u10: f(self.u10),
            u00: f(self.u00),
            u01: f(self.u01),
        }
    }

    /// Multiplier turning a normalized utility difference into one in this
    /// table's scale.
    pub fn scale(&self) -> f64 {
        self.u11.max(self.u00) - self.u10.min(self.u01)
    }
}

impl TryFrom<[f64; 4]> for UtilityTable {
    type Error = Error;

    fn try_from(u: [f64; 4]) -> Result<Self> {
        Self::new(u[0], u[1], u[2], u[3])
    }
}

impl From<UtilityTable> for [f64; 4] {
    fn from(u: UtilityTable) -> Self {
        u.as_array()
    }
}

impl std::str::FromStr for UtilityTable {
    type Err = Error;

    /// Parses `u11,u10,u00,u01`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad utility list {s:?}: {e}")))?;
        let arr: [f64; 4] = parts
            .try_into()
            .map_err(|_| Error::Config(format!("utility needs four values, got {s:?}")))?;
        Self::try_from(arr)
    }
}

/// `μ(a | h, b) = p0·(u(a,0) − u(a,1)) + u(a,1)` where `p0 = P(Y=0 | h, b)`.
pub fn conditional_utility(a: Decision, p0: f64, utility: &UtilityTable) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Domain(format!("P(Y=0) = {p0} outside [0, 1]")));
    }
    Ok(p0 * (utility.get(a, 0) - utility.get(a, 1)) + utility.get(a, 1))
}

/// The cutoff `ρ` on `P(Y=0 | h, b)` above which deciding 0 is optimal:
/// `(u11 − u01) / (u11 − u10 + u00 − u01)`.
pub fn decision_rule_threshold(utility: &UtilityTable) -> Result<f64> {
    let checked = UtilityTable::new(utility.u11, utility.u10, utility.u00, utility.u01)?;
    Ok((checked.u11 - checked.u01) / (checked.u11 - checked.u10 + checked.u00 - checked.u01))
}

/// One step of the interaction: human confidence, AI confidence, label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub h: f64,
    pub b: f64,
    pub y: u8,
}

impl Observation {
    pub fn new(h: f64, b: f64, y: u8) -> Result<Self> {
        if y > 1 {
            return Err(Error::Validation(format!("label {y} not in {{0, 1}}")));
        }
        if !h.is_finite() || !b.is_finite() {
            return Err(Error::Validation("confidence values must be finite".into()));
        }
        Ok(Self { h, b, y })
    }
}

/// A cut position on the AI-confidence axis. The decision is `1` iff
/// `b > cut`.
#[derive(Debug, Clone, Copy)]
pub enum Cut {
    /// Below every confidence value: always decide 1.
    BelowAll,
    At(f64),
    /// Above every confidence value: always decide 0.
    AboveAll,
}

impl Cut {
    pub fn decide(&self, b: f64) -> Decision {
        match self {
            Cut::BelowAll => Decision::One,
            Cut::AboveAll => Decision::Zero,
            Cut::At(c) => Decision::from_bool(b > *c),
        }
    }

    /// True when `b` falls on the decide-0 side.
    pub fn covers(&self, b: f64) -> bool {
        self.decide(b) == Decision::Zero
    }

    fn rank(&self) -> u8 {
        match self {
            Cut::BelowAll => 0,
            Cut::At(_) => 1,
            Cut::AboveAll => 2,
        }
    }

    /// Canonical representative on a finite level set: `AboveAll` when every
    /// level decides 0, `BelowAll` when every level decides 1, and otherwise
    /// the largest level that decides 0.
    pub fn canonical(&self, levels: &[f64]) -> Cut {
        match levels.iter().rev().find(|b| self.covers(**b)) {
            None => Cut::BelowAll,
            Some(_) if levels.iter().all(|b| self.covers(*b)) => Cut::AboveAll,
            Some(b) => Cut::At(*b),
        }
    }
}

impl PartialEq for Cut {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cut {}

impl PartialOrd for Cut {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cut {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cut::At(a), Cut::At(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl std::fmt::Display for Cut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cut::BelowAll => write!(f, "below_all"),
            Cut::At(b) => write!(f, "{b}"),
            Cut::AboveAll => write!(f, "above_all"),
        }
    }
}

/// One cut per human confidence level (indexed like the grid's
/// `human_levels`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdPolicy {
    cuts: Vec<Cut>,
}

impl ThresholdPolicy {
    pub fn new(cuts: Vec<Cut>) -> Self {
        Self { cuts }
    }

    pub fn uniform(n_human: usize, cut: Cut) -> Self {
        Self {
            cuts: vec![cut; n_human],
        }
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn cut(&self, h_index: usize) -> Cut {
        self.cuts[h_index]
    }

    pub fn decide(&self, h_index: usize, b: f64) -> Decision {
        self.cuts[h_index].decide(b)
    }

    /// Per-level canonical form with respect to the grid's AI levels. Two
    /// policies are equal on the grid iff their canonical forms are equal.
    pub fn canonical(&self, grid: &ConfidenceGrid) -> Self {
        Self {
            cuts: self
                .cuts
                .iter()
                .map(|c| c.canonical(grid.ai_levels()))
                .collect(),
        }
    }
}

/// A fully specified environment: `P(H, B)`, `P(Y=1 | H, B)` and payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    grid: ConfidenceGrid,
    joint: Vec<f64>,
    cond: Vec<f64>,
    utility: UtilityTable,
}

impl Instance {
    /// `joint` and `cond` are row-major `|H| × |B|` tables.
    pub fn new(
        grid: ConfidenceGrid,
        joint: Vec<f64>,
        cond: Vec<f64>,
        utility: UtilityTable,
    ) -> Result<Self> {
        let cells = grid.n_cells();
        for (name, table) in [("joint", &joint), ("cond", &cond)] {
            if table.len() != cells {
                return Err(Error::Invariant(format!(
                    "{name} table has {} entries, grid has {cells} cells",
                    table.len()
                )));
            }
        }
        if joint.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Invariant("joint entries must be nonnegative".into()));
        }
        let mass: f64 = joint.iter().sum();
        if (mass - 1.0).abs() > JOINT_MASS_TOLERANCE {
            return Err(Error::Invariant(format!("joint sums to {mass}, not 1")));
        }
        if cond.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Invariant("cond entries must lie in [0, 1]".into()));
        }
        let utility = UtilityTable::new(utility.u11, utility.u10, utility.u00, utility.u01)?;
        Ok(Self {
            grid,
            joint,
            cond,
            utility,
        })
    }

    pub fn grid(&self) -> &ConfidenceGrid {
        &self.grid
    }

    pub fn utility(&self) -> &UtilityTable {
        &self.utility
    }

    pub fn with_utility(&self, utility: UtilityTable) -> Self {
        Self {
            utility,
            ..self.clone()
        }
    }

    pub fn joint_table(&self) -> &[f64] {
        &self.joint
    }

    pub fn cond_table(&self) -> &[f64] {
        &self.cond
    }

    fn idx(&self, h: usize, b: usize) -> usize {
        h * self.grid.n_ai() + b
    }

    /// `P(H = h_i, B = b_j)`.
    pub fn joint(&self, h: usize, b: usize) -> f64 {
        self.joint[self.idx(h, b)]
    }

    /// `P(Y = 1 | H = h_i, B = b_j)`.
    pub fn cond(&self, h: usize, b: usize) -> f64 {
        self.cond[self.idx(h, b)]
    }

    /// `μ(a | h_i, b_j)` in this instance's utility scale.
    pub fn mu(&self, a: Decision, h: usize, b: usize) -> f64 {
        let p0 = 1.0 - self.cond(h, b);
        p0 * (self.utility.get(a, 0) - self.utility.get(a, 1)) + self.utility.get(a, 1)
    }

    /// The pointwise best decision (ties resolve to 0).
    pub fn best_decision(&self, h: usize, b: usize) -> Decision {
        Decision::from_bool(self.mu(Decision::One, h, b) > self.mu(Decision::Zero, h, b))
    }
}

/// One row of a run trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub h: f64,
    pub b: f64,
    pub y: u8,
    pub action: u8,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

/// Per-step history of one learner on one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub learner_id: String,
    pub seed: u64,
    steps: Vec<StepRecord>,
}

impl RunTrace {
    pub fn new(learner_id: impl Into<String>, seed: u64) -> Self {
        Self {
            learner_id: learner_id.into(),
            seed,
            steps: Vec::new(),
        }
    }

    pub fn from_steps(
        learner_id: impl Into<String>,
        seed: u64,
        steps: Vec<StepRecord>,
    ) -> Result<Self> {
        let mut cum = 0.0;
        for (i, s) in steps.iter().enumerate() {
            cum += s.inst_regret;
            if s.t != i + 1 || s.cum_regret != cum {
                return Err(Error::Invariant(format!(
                    "trace row {} is not a prefix-sum record",
                    i + 1
                )));
            }
        }
        Ok(Self {
            learner_id: learner_id.into(),
            seed,
            steps,
        })
    }

    pub fn push(&mut self, obs: &Observation, action: Decision, inst_regret: f64) {
        let cum = self.cumulative_regret() + inst_regret;
        self.steps.push(StepRecord {
            t: self.steps.len() + 1,
            h: obs.h,
            b: obs.b,
            y: obs.y,
            action: action.as_u8(),
            inst_regret,
            cum_regret: cum,
        });
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_regret)
    }
}
