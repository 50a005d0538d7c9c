//! Critical sets from logit queries alone.

use iso3d_nn::{Model, ModelInput};

use crate::critical::{latent_equal, CriticalElement, CriticalSet};
use crate::Error;

/// Default logit-change tolerance: zero, meaning any bitwise movement counts.
/// Removal of a truly irrelevant element reproduces the logits bit for bit in
/// this engine, so a zero threshold invents no members; a positive one only
/// hides vanishing-margin members from the black box and breaks its agreement
/// with the white box. Raise it when querying a noisy or nondeterministic
/// oracle.
pub const DEFAULT_BLACKBOX_TAU: f32 = 0.0;

/// Query access to a classifier: logits out, nothing else. Implemented by
/// `Model` directly and by any query-counting wrapper around one.
pub trait LogitSource {
    fn query_logits(&self, input: &ModelInput) -> Result<Vec<f32>, Error>;
}

impl LogitSource for Model {
    fn query_logits(&self, input: &ModelInput) -> Result<Vec<f32>, Error> {
        Ok(self.logits(input)?)
    }
}

impl<T: LogitSource + ?Sized> LogitSource for &T {
    fn query_logits(&self, input: &ModelInput) -> Result<Vec<f32>, Error> {
        (**self).query_logits(input)
    }
}

/// Black-box critical set: element i is a member iff removing it moves some
/// logit by more than `tau`. Saliency is that largest logit movement. Costs
/// exactly one query per element; `base_logits` must be the oracle's answer
/// on `input` itself (the caller always has it, having just classified).
///
/// A 1-element input reports its sole element critical by definition, with a
/// sentinel saliency of 1, and costs no queries.
pub fn critical_set_blackbox(
    oracle: impl LogitSource,
    input: &ModelInput,
    base_logits: &[f32],
    tau: f32,
) -> Result<CriticalSet, Error> {
    let ids = input.element_ids();
    if ids.is_empty() {
        return Err(Error::BadInput("empty input has no critical set".into()));
    }
    if ids.len() == 1 {
        return CriticalSet::from_elements(vec![CriticalElement {
            index: ids[0],
            saliency: 1.0,
        }]);
    }
    let mut members = Vec::new();
    for id in ids {
        let logits = oracle.query_logits(&input.without_element(id))?;
        if !latent_equal(&logits, base_logits, tau) {
            let change = logits
                .iter()
                .zip(base_logits)
                .map(|(a, b)| (a - b).abs())
                .fold(0f32, f32::max);
            members.push(CriticalElement { index: id, saliency: change });
        }
    }
    CriticalSet::from_elements(members)
}
