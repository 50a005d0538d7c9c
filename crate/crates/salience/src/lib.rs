//! Salience analysis for occlusion attacks: which input elements does the
//! classifier actually depend on, and in what order should an attacker try
//! removing them.
//!
//! The white-box path inspects a forward trace; the black-box path only
//! queries logits. For point-set models with fully nonzero dense head weights
//! the two agree on membership.

mod blackbox;
mod critical;
mod export;
mod rank;

pub use blackbox::{critical_set_blackbox, LogitSource, DEFAULT_BLACKBOX_TAU};
pub use critical::{
    critical_set_whitebox, critical_set_whitebox_with, latent_equal, saliency_scores,
    CriticalElement, CriticalSet, DEFAULT_VOLUMETRIC_FRACTION,
};
pub use export::write_salience_csv;
pub use rank::{rank, RankState};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Nn(#[from] iso3d_nn::Error),
}
