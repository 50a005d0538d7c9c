//! Occlusion attacks against point-cloud and voxel classifiers: the
//! iterative salience attack in white-box and black-box modes, a random
//! removal baseline, an exhaustive small-instance verifier, and a brute-force
//! minimality oracle.
//!
//! All attacks only ever delete input elements; nothing is moved or added.
//! Deleted elements are identified by stable ids: point indices of the
//! original cloud, or flat voxel indices.

mod brute;
mod exhaustive;
mod goal;
mod iso;
mod log;
mod occlude;
mod oracle;
mod random;

pub use brute::{brute_force_min_occlusion, BruteForceOutcome, BRUTE_FORCE_MAX_ELEMENTS};
pub use exhaustive::{exhaustive_verify, Certificate, EXHAUSTIVE_MAX_CARDINALITY};
pub use goal::{Goal, GoalKind};
pub use iso::{iso, AttackMode};
pub use log::{write_attack_log, AttackAction, AttackEvent};
pub use oracle::{AttackOracle, AttackResult};
pub use random::random_occlusion;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bad goal: {0}")]
    BadGoal(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("input has {got} elements, brute force is capped at {cap}")]
    TooLargeForBruteForce { got: usize, cap: usize },
    #[error("critical set of {got} members exceeds the enumeration cap of {cap}")]
    CardinalityCap { got: usize, cap: usize },
    #[error("exhaustive search visited more than {0} states")]
    StateCap(usize),
    #[error("query budget of {0} ran out before the search completed")]
    QueryBudget(usize),
    #[error(transparent)]
    Nn(#[from] iso3d_nn::Error),
    #[error(transparent)]
    Salience(#[from] iso3d_salience::Error),
}
