//! The iterative salience occlusion attack.
//!
//! One pass: compute the critical set of the current (possibly already
//! thinned) input, order it, and walk that order removing elements whose
//! removal does not raise the clean class's confidence; new critical elements
//! surface as old ones vanish, so the critical set is recomputed after every
//! sweep until the goal lands or a sweep stalls. A stalled pass resets to the
//! full input and takes the next permutation of its critical set, so restarts
//! never retry an order already tried. After success, elements whose removal
//! turned out unnecessary are restored in removal order.
//!
//! White-box and black-box modes differ only in how the critical set is
//! obtained; members end up scored identically (by how far their removal
//! moves the logits), so both modes remove in the same order and land on the
//! same occlusion, the black box just pays more queries for it.

use iso3d_nn::ModelInput;
use iso3d_salience::{
    critical_set_blackbox, critical_set_whitebox, rank, CriticalElement, CriticalSet, RankState,
    DEFAULT_BLACKBOX_TAU,
};

use crate::goal::Goal;
use crate::log::{AttackAction, AttackEvent};
use crate::occlude::Occluded;
use crate::oracle::{AttackOracle, AttackResult, Judged, Session};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMode {
    /// Critical sets read off forward traces (cheap, needs internals).
    WhiteBox,
    /// Critical sets probed through logit queries only.
    BlackBox,
}

/// Outcome of one descent sweep.
enum Sweep {
    GoalMet,
    Progress,
    Stalled,
    Expired,
}

pub fn iso<O: AttackOracle>(
    oracle: O,
    input: &ModelInput,
    goal: &Goal,
    mode: AttackMode,
    seed: u64,
) -> Result<AttackResult, Error> {
    goal.validate()?;
    if input.element_count() == 0 {
        return Err(Error::BadInput("cannot attack an empty input".into()));
    }
    let session = Session::new(oracle, goal.time_budget, goal.query_budget);
    let base = session.judge(input)?;
    check_target_class(goal, base.probs.len())?;
    let y = base.class;
    let base_conf = base.confidence_of(y);
    let predicted_before = base.prediction();

    let mut occ = Occluded::new(input.clone());
    let mut current = base.clone();
    let mut removal_order: Vec<usize> = Vec::new();
    let mut events: Vec<AttackEvent> = Vec::new();
    let mut goal_met = goal.satisfied(&base.probs, base.class, y, base_conf);

    // permutations of the full input's critical set drive restarts; the set
    // itself never changes across resets, so it is computed once
    let mut master_state = RankState::new(seed);
    let mut master_cs: Option<CriticalSet> = None;

    while !goal_met {
        if session.expired() {
            break;
        }
        let fresh_pass = occ.alive_count() == occ.universe_len();
        let ordering: Vec<usize> = if fresh_pass {
            if master_cs.is_none() {
                match sweep_critical_set(&session, &occ, &current, mode)? {
                    Some(cs) => master_cs = Some(cs),
                    None => break, // budget died inside the computation
                }
            }
            let cs = master_cs.as_ref().unwrap();
            if cs.is_empty() {
                break; // nothing is individually influential; no move exists
            }
            match rank(cs, &master_state) {
                Some(next) => {
                    let order = next.ordering().to_vec();
                    master_state = next;
                    order
                }
                None => break, // permutation space exhausted
            }
        } else {
            match sweep_critical_set(&session, &occ, &current, mode)? {
                Some(cs) if !cs.is_empty() => cs.ordered_by_saliency(),
                Some(_) => Vec::new(),
                None => break,
            }
        };
        // current-input ids -> stable universe positions, before removals shift rows
        let positions: Vec<usize> =
            ordering.iter().map(|&id| occ.universe_pos_of_current(id)).collect();

        match descent(
            &session,
            goal,
            &mut occ,
            &mut current,
            &mut removal_order,
            &mut events,
            &positions,
            y,
            base_conf,
        )? {
            Sweep::GoalMet => {
                goal_met = true;
            }
            Sweep::Progress => {}
            Sweep::Stalled => {
                // back to the full input; the next pass takes a fresh permutation
                occ.restore_all();
                removal_order.clear();
                events.push(AttackEvent {
                    step: events.len(),
                    action: AttackAction::Restart,
                    element_index: None,
                    confidence_before: current.confidence_of(y),
                    confidence_after: base_conf,
                    predicted_class: y,
                });
                current = base.clone();
            }
            Sweep::Expired => break,
        }
    }

    if goal_met {
        restore_unnecessary(
            &session,
            goal,
            &mut occ,
            &mut current,
            &removal_order,
            &mut events,
            y,
            base_conf,
        )?;
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

fn check_target_class(goal: &Goal, classes: usize) -> Result<(), Error> {
    if let crate::goal::GoalKind::Targeted(t) = goal.kind {
        if t >= classes {
            return Err(Error::BadGoal(format!(
                "target class {t} out of range for {classes} classes"
            )));
        }
    }
    Ok(())
}

/// Critical set of the current input, scored by removal impact so white-box
/// and black-box agree element for element. Returns None on budget expiry.
fn sweep_critical_set<O: AttackOracle>(
    session: &Session<O>,
    occ: &Occluded,
    current: &Judged,
    mode: AttackMode,
) -> Result<Option<CriticalSet>, Error> {
    if session.expired() {
        return Ok(None);
    }
    let current_input = occ.current();
    if current_input.element_count() == 1 {
        // a sole element cannot be probed (nothing would remain) and can
        // never be removed; both modes treat it as trivially critical
        let sole = CriticalElement { index: 0, saliency: 1.0 };
        return Ok(Some(CriticalSet::from_elements(vec![sole])?));
    }
    match mode {
        AttackMode::BlackBox => {
            let cs = critical_set_blackbox(
                session,
                &current_input,
                &current.logits,
                DEFAULT_BLACKBOX_TAU,
            )?;
            Ok(Some(cs))
        }
        AttackMode::WhiteBox => {
            let trace = session.trace(&current_input)?;
            let cs = critical_set_whitebox(&trace, &current_input)?;
            match current_input {
                ModelInput::Voxels(_) => Ok(Some(cs)),
                ModelInput::Points(_) => {
                    // rescore members by the logit movement their removal causes;
                    // any movement implies true membership, so filtering by it
                    // reproduces exactly the set a black-box probe would find
                    let mut scored = Vec::new();
                    for m in cs.members() {
                        if session.expired() {
                            return Ok(None);
                        }
                        let probe =
                            session.judge(&current_input.without_element(m.index))?;
                        let impact = probe
                            .logits
                            .iter()
                            .zip(&current.logits)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0f32, f32::max);
                        if impact > DEFAULT_BLACKBOX_TAU {
                            scored.push(CriticalElement { index: m.index, saliency: impact });
                        }
                    }
                    Ok(Some(CriticalSet::from_elements(scored)?))
                }
            }
        }
    }
}

/// Walk one ordering, removing elements whose removal keeps the clean-class
/// confidence from rising. Stops the moment the goal is satisfied.
#[allow(clippy::too_many_arguments)]
fn descent<O: AttackOracle>(
    session: &Session<O>,
    goal: &Goal,
    occ: &mut Occluded,
    current: &mut Judged,
    removal_order: &mut Vec<usize>,
    events: &mut Vec<AttackEvent>,
    positions: &[usize],
    y: usize,
    base_conf: f32,
) -> Result<Sweep, Error> {
    let mut progress = false;
    for &pos in positions {
        debug_assert!(occ.is_alive(pos), "ordering may not repeat elements");
        if occ.alive_count() == 1 {
            break; // an emptied input is not classifiable; keep the last element
        }
        if session.expired() {
            return Ok(Sweep::Expired);
        }
        let judged = session.judge(&occ.current_without(pos))?;
        let conf_before = current.confidence_of(y);
        let conf_after = judged.confidence_of(y);
        let satisfies = goal.satisfied(&judged.probs, judged.class, y, base_conf);
        if satisfies || conf_after <= conf_before {
            occ.remove(pos);
            removal_order.push(pos);
            events.push(AttackEvent {
                step: events.len(),
                action: AttackAction::Remove,
                element_index: Some(occ.id_at(pos)),
                confidence_before: conf_before,
                confidence_after: conf_after,
                predicted_class: judged.class,
            });
            *current = judged;
            progress = true;
            if satisfies {
                return Ok(Sweep::GoalMet);
            }
        }
    }
    Ok(if progress { Sweep::Progress } else { Sweep::Stalled })
}

/// Add back, in removal order, every removed element whose restoration keeps
/// the goal satisfied. Elements that break it stay removed; the final
/// occlusion is what remains.
#[allow(clippy::too_many_arguments)]
fn restore_unnecessary<O: AttackOracle>(
    session: &Session<O>,
    goal: &Goal,
    occ: &mut Occluded,
    current: &mut Judged,
    removal_order: &[usize],
    events: &mut Vec<AttackEvent>,
    y: usize,
    base_conf: f32,
) -> Result<(), Error> {
    for &pos in removal_order {
        if session.expired() {
            break; // the goal already holds; unrestored elements just stay out
        }
        occ.restore(pos);
        let judged = session.judge(&occ.current())?;
        if goal.satisfied(&judged.probs, judged.class, y, base_conf) {
            events.push(AttackEvent {
                step: events.len(),
                action: AttackAction::Restore,
                element_index: Some(occ.id_at(pos)),
                confidence_before: current.confidence_of(y),
                confidence_after: judged.confidence_of(y),
                predicted_class: judged.class,
            });
            *current = judged;
        } else {
            occ.remove(pos);
        }
    }
    Ok(())
}
