//! Random-order occlusion baseline: shuffle the element ids once, remove in
//! that order until the prediction flips or one element remains.

use iso3d_nn::ModelInput;
use iso3d_shapes::mix_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::log::{AttackAction, AttackEvent};
use crate::occlude::Occluded;
use crate::oracle::{AttackOracle, AttackResult, Session};
use crate::Error;

pub fn random_occlusion<O: AttackOracle>(
    oracle: O,
    input: &ModelInput,
    seed: u64,
) -> Result<AttackResult, Error> {
    if input.element_count() == 0 {
        return Err(Error::BadInput("cannot attack an empty input".into()));
    }
    let session = Session::new(oracle, None, None);
    let base = session.judge(input)?;
    let y = base.class;
    let predicted_before = base.prediction();

    let mut occ = Occluded::new(input.clone());
    let mut order: Vec<usize> = (0..occ.universe_len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x7a4d])));

    let mut current = base;
    let mut events = Vec::new();
    let mut goal_met = false;
    for pos in order {
        if occ.alive_count() == 1 {
            break;
        }
        let judged = session.judge(&occ.current_without(pos))?;
        let conf_before = current.confidence_of(y);
        let conf_after = judged.confidence_of(y);
        occ.remove(pos);
        events.push(AttackEvent {
            step: events.len(),
            action: AttackAction::Remove,
            element_index: Some(occ.id_at(pos)),
            confidence_before: conf_before,
            confidence_after: conf_after,
            predicted_class: judged.class,
        });
        current = judged;
        if current.class != y {
            goal_met = true;
            break;
        }
    }

    let removed = occ.removed_ids();
    Ok(AttackResult {
        survivor: occ.current(),
        occlusion_size: removed.len(),
        removed,
        queries: session.queries(),
        elapsed: session.elapsed(),
        goal_met,
        predicted_before,
        predicted_after: current.prediction(),
        log: events,
    })
}
