//! Online learning of AI-assisted decision policies when human and AI
//! confidences are aligned.
//!
//! A decision maker observes a human confidence `h` and an AI confidence `b`
//! for a binary outcome, takes a binary action, and later sees the outcome.
//! When the probability of a positive outcome is monotone in both
//! confidences, the best policy is a per-`h` threshold on `b`, which
//! [`learners::AlignedLearner`] learns greedily from full feedback.

pub mod analysis;
pub mod env;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod experiment;
pub mod learners;
pub mod model;

pub use error::{Error, Result};
pub use learners::{AlignedLearner, Formulation, Learner, VanillaLearner};
pub use model::{
    ConfidenceGrid, Cut, Decision, Instance, Observation, RunTrace, StepRecord, ThresholdPolicy,
    UtilityTable,
};
