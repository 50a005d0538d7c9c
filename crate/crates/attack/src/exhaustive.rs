//! Exhaustive verification on small instances.
//!
//! Explores every state reachable from the input by repeatedly deleting one
//! critical element, in any order, without the confidence gate the iterative
//! attack uses. Removing a non-critical element leaves the pooled latent
//! untouched, so this search covers everything any removal ordering of
//! critical elements can reach. If no explored state satisfies the goal, the
//! input is certified robust against the attack family; if some do, the
//! smallest is reported.
//!
//! States are memoized by their survivor mask, so each distinct subset is
//! expanded once even though many orderings lead to it. The certificate still
//! counts the orderings covered: every expanded state contributes the
//! factorial of its critical set's size.

use std::collections::HashMap;

use iso3d_nn::ModelInput;
use iso3d_salience::critical_set_whitebox;

use crate::goal::Goal;
use crate::log::{AttackAction, AttackEvent};
use crate::occlude::Occluded;
use crate::oracle::{AttackOracle, AttackResult, Session};
use crate::Error;

/// Widest critical set the verifier will branch on.
pub const EXHAUSTIVE_MAX_CARDINALITY: usize = 8;

/// Hard ceiling on distinct states, to fail fast instead of running for days.
pub const EXHAUSTIVE_STATE_CAP: usize = 200_000;

#[derive(Debug, Clone)]
pub struct Certificate {
    /// True when some reachable removal set satisfies the goal.
    pub goal_reachable: bool,
    /// The attack outcome along a smallest goal-reaching path, when one
    /// exists; its removed set is minimal over everything explored.
    pub witness: Option<AttackResult>,
    /// Orderings covered: the sum of |critical set|! over expanded states.
    pub permutations_checked: u64,
    /// Distinct survivor subsets expanded.
    pub states_explored: usize,
    /// Forward passes spent, search and witness replay together.
    pub queries: usize,
}

pub fn exhaustive_verify<O: AttackOracle>(
    oracle: O,
    input: &ModelInput,
    goal: &Goal,
) -> Result<Certificate, Error> {
    if !goal.exhaustive {
        return Err(Error::BadGoal("exhaustive_verify needs a goal built for it".into()));
    }
    goal.validate()?;
    if input.element_count() == 0 {
        return Err(Error::BadInput("cannot verify an empty input".into()));
    }
    let session = Session::new(oracle, None, goal.query_budget);
    let base = session.judge(input)?;
    if let crate::goal::GoalKind::Targeted(t) = goal.kind {
        if t >= base.probs.len() {
            return Err(Error::BadGoal(format!(
                "target class {t} out of range for {} classes",
                base.probs.len()
            )));
        }
    }
    let y = base.class;
    let base_conf = base.confidence_of(y);

    let mut search = Search {
        session: &session,
        goal,
        y,
        base_conf,
        visited: HashMap::new(),
        permutations: 0,
        best: None,
    };
    let mut occ = Occluded::new(input.clone());
    let root_key = pack_mask(&occ);
    search.visited.insert(root_key, None);
    if goal.satisfied(&base.probs, base.class, y, base_conf) {
        search.best = Some(pack_mask(&occ));
    } else {
        search.expand(&mut occ)?;
    }

    let states_explored = search.visited.len();
    let witness = match search.best.take() {
        Some(best_key) => Some(replay_witness(
            &session,
            goal,
            input,
            y,
            base_conf,
            unwind_path(&search.visited, &best_key),
        )?),
        None => None,
    };
    Ok(Certificate {
        goal_reachable: witness.is_some(),
        witness,
        permutations_checked: search.permutations,
        states_explored,
        queries: session.queries(),
    })
}

struct Search<'a, O: AttackOracle> {
    session: &'a Session<O>,
    goal: &'a Goal,
    y: usize,
    base_conf: f32,
    /// survivor mask -> how it was first reached (parent mask, removed position)
    visited: HashMap<Vec<u64>, Option<(Vec<u64>, usize)>>,
    permutations: u64,
    /// goal-satisfying mask with the most survivors seen so far
    best: Option<Vec<u64>>,
}

impl<O: AttackOracle> Search<'_, O> {
    fn expand(&mut self, occ: &mut Occluded) -> Result<(), Error> {
        if occ.alive_count() == 1 {
            return Ok(()); // the last element always survives
        }
        if self.session.expired() {
            return Err(Error::QueryBudget(self.goal.query_budget.unwrap_or(0)));
        }
        let current = occ.current();
        let trace = self.session.trace(&current)?;
        let cs = critical_set_whitebox(&trace, &current)?;
        if cs.len() > EXHAUSTIVE_MAX_CARDINALITY {
            return Err(Error::CardinalityCap {
                got: cs.len(),
                cap: EXHAUSTIVE_MAX_CARDINALITY,
            });
        }
        self.permutations += factorial(cs.len());
        let parent_key = pack_mask(occ);
        let positions: Vec<usize> =
            cs.indices().iter().map(|&id| occ.universe_pos_of_current(id)).collect();
        for pos in positions {
            occ.remove(pos);
            let key = pack_mask(occ);
            let first_visit = !self.visited.contains_key(&key);
            if first_visit {
                if self.visited.len() >= EXHAUSTIVE_STATE_CAP {
                    return Err(Error::StateCap(EXHAUSTIVE_STATE_CAP));
                }
                self.visited.insert(key.clone(), Some((parent_key.clone(), pos)));
                if self.session.expired() {
                    return Err(Error::QueryBudget(self.goal.query_budget.unwrap_or(0)));
                }
                let judged = self.session.judge(&occ.current())?;
                if self.goal.satisfied(&judged.probs, judged.class, self.y, self.base_conf) {
                    // deeper states only remove more, so there is no need to
                    // descend past a state that already satisfies the goal
                    let better = match &self.best {
                        None => true,
                        Some(b) => alive_bits(&key) > alive_bits(b),
                    };
                    if better {
                        self.best = Some(key);
                    }
                } else {
                    self.expand(occ)?;
                }
            }
            occ.restore(pos);
        }
        Ok(())
    }
}

/// Positions removed along the recorded path to `key`, in removal order.
fn unwind_path(
    visited: &HashMap<Vec<u64>, Option<(Vec<u64>, usize)>>,
    key: &[u64],
) -> Vec<usize> {
    let mut path = Vec::new();
    let mut cursor = key.to_vec();
    while let Some(Some((parent, pos))) = visited.get(&cursor) {
        path.push(*pos);
        cursor = parent.clone();
    }
    path.reverse();
    path
}

/// Re-runs the witness path step by step to produce an ordinary attack
/// result, confidences and log included.
fn replay_witness<O: AttackOracle>(
    session: &Session<O>,
    goal: &Goal,
    input: &ModelInput,
    y: usize,
    base_conf: f32,
    path: Vec<usize>,
) -> Result<AttackResult, Error> {
    let mut occ = Occluded::new(input.clone());
    let mut current = session.judge(input)?;
    let predicted_before = current.prediction();
    let mut events = Vec::new();
    for pos in path {
        let judged = session.judge(&occ.current_without(pos))?;
        events.push(AttackEvent {
            step: events.len(),
            action: AttackAction::Remove,
            element_index: Some(occ.id_at(pos)),
            confidence_before: current.confidence_of(y),
            confidence_after: judged.confidence_of(y),
            predicted_class: judged.class,
        });
        occ.remove(pos);
        current = judged;
    }
    debug_assert!(goal.satisfied(&current.probs, current.class, y, base_conf));
    let removed = occ.removed_ids();
    Ok(AttackResult {
        survivor: occ.current(),
        occlusion_size: removed.len(),
        removed,
        queries: session.queries(),
        elapsed: session.elapsed(),
        goal_met: true,
        predicted_before,
        predicted_after: current.prediction(),
        log: events,
    })
}

fn pack_mask(occ: &Occluded) -> Vec<u64> {
    let n = occ.universe_len();
    let mut words = vec![0u64; n.div_ceil(64)];
    for pos in 0..n {
        if occ.is_alive(pos) {
            words[pos / 64] |= 1 << (pos % 64);
        }
    }
    words
}

fn alive_bits(key: &[u64]) -> u32 {
    key.iter().map(|w| w.count_ones()).sum()
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}
