//! End-to-end behavior of the iterative attack on constructed instances,
//! plus a replay oracle that re-verifies every logged decision against the
//! model itself.

mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use common::*;
use iso3d_attack::{
    iso, AttackAction, AttackMode, AttackResult, Error, Goal, GoalKind,
};
use iso3d_nn::{argmax_lowest, Model, ModelInput};
use iso3d_shapes::mix_seed;

const MODES: [AttackMode; 2] = [AttackMode::WhiteBox, AttackMode::BlackBox];

fn untargeted_queries(budget: usize) -> Goal {
    Goal {
        kind: GoalKind::Untargeted,
        time_budget: None,
        query_budget: Some(budget),
        exhaustive: false,
    }
}

#[test]
fn decisive_point_is_found_and_nothing_else_is_removed() {
    let model = yz_model();
    let input = decisive_cloud();
    let clean = model.predict(&input).unwrap();
    assert_eq!(clean.class, 0);
    let flipped = model.forward(&input.without_element(0)).unwrap();

    for mode in MODES {
        let res = iso(&model, &input, &untargeted_queries(1000), mode, 7).unwrap();
        assert!(res.goal_met, "{mode:?}");
        assert_eq!(res.removed, vec![0], "{mode:?}");
        assert_eq!(res.occlusion_size, 1);
        assert_eq!(res.predicted_before.class, 0);
        assert_eq!(res.predicted_after.class, 1);
        assert_eq!(res.survivor.element_count(), 2);

        assert_eq!(res.log.len(), 1, "{mode:?}: restores should have been rejected");
        let e = &res.log[0];
        assert_eq!(e.action, AttackAction::Remove);
        assert_eq!(e.element_index, Some(0));
        assert_eq!(e.confidence_before, clean.confidence);
        assert_eq!(e.confidence_after, flipped.probs[0]);
        assert_eq!(e.predicted_class, 1);
    }
}

#[test]
fn modes_agree_event_for_event_on_the_decisive_instance() {
    let model = yz_model();
    let input = decisive_cloud();
    let goal = untargeted_queries(1000);
    let white = iso(&model, &input, &goal, AttackMode::WhiteBox, 3).unwrap();
    let black = iso(&model, &input, &goal, AttackMode::BlackBox, 3).unwrap();
    assert_eq!(white.log, black.log);
    assert_eq!(white.removed, black.removed);
}

#[test]
fn pre_satisfied_target_costs_one_query() {
    let model = yz_model();
    let input = decisive_cloud();
    let goal = Goal {
        kind: GoalKind::Targeted(0), // the clean prediction already
        time_budget: None,
        query_budget: Some(100),
        exhaustive: false,
    };
    for mode in MODES {
        let res = iso(&model, &input, &goal, mode, 0).unwrap();
        assert!(res.goal_met);
        assert_eq!(res.occlusion_size, 0);
        assert_eq!(res.queries, 1, "{mode:?}");
        assert!(res.log.is_empty());
        assert_eq!(res.survivor.element_count(), input.element_count());
    }
}

#[test]
fn confidence_drop_goal_is_met_by_the_decisive_removal() {
    let model = yz_model();
    let input = decisive_cloud();
    let goal = Goal {
        kind: GoalKind::ConfidenceDrop(0.3),
        time_budget: None,
        query_budget: Some(1000),
        exhaustive: false,
    };
    let res = iso(&model, &input, &goal, AttackMode::WhiteBox, 0).unwrap();
    assert!(res.goal_met);
    assert_eq!(res.removed, vec![0]);
    let after = model.forward(&res.survivor).unwrap();
    let clean = model.predict(&input).unwrap();
    assert!(clean.confidence - after.probs[0] > 0.3);
}

#[test]
fn unreachable_goal_exhausts_the_permutation_space_and_resets() {
    let model = constant_margin_model();
    let input = ModelInput::Points(iso3d_shapes::PointCloud::new(vec![
        [0.0, 3.0, 0.0],
        [0.0, 0.0, 2.0],
        [0.0, 1.0, 1.0],
    ]));
    for mode in MODES {
        let res = iso(&model, &input, &untargeted_queries(10_000), mode, 11).unwrap();
        assert!(!res.goal_met, "{mode:?}");
        assert!(res.removed.is_empty(), "{mode:?}: a restart must restore everything");
        assert_eq!(res.survivor.element_count(), 3);
        assert_eq!(res.predicted_after.class, res.predicted_before.class);
        let actions: Vec<(AttackAction, Option<usize>)> =
            res.log.iter().map(|e| (e.action, e.element_index)).collect();
        // confidence ties pass the gate, so the sweeps chew down to the last
        // element, stall, reset, and the one-member permutation space ends
        assert_eq!(
            actions,
            vec![
                (AttackAction::Remove, Some(0)),
                (AttackAction::Remove, Some(2)),
                (AttackAction::Restart, None),
            ],
            "{mode:?}"
        );
    }
}

#[test]
fn query_budget_truncates_without_error() {
    let model = yz_model();
    let input = decisive_cloud();
    for mode in MODES {
        let res = iso(&model, &input, &untargeted_queries(2), mode, 0).unwrap();
        assert!(!res.goal_met, "{mode:?}");
        // a critical-set recomputation is atomic, so the budget may be
        // overshot by one recomputation (at most one probe per element)
        // plus one forward pass, never more
        let cap = 2 + input.element_count() + 1;
        assert!(res.queries <= cap, "{mode:?}: {} queries", res.queries);
    }
    // one query answers the clean prediction, then the clock is checked
    let tiny = Goal {
        kind: GoalKind::Untargeted,
        time_budget: Some(Duration::from_nanos(1)),
        query_budget: None,
        exhaustive: false,
    };
    let res = iso(&model, &input, &tiny, AttackMode::BlackBox, 0).unwrap();
    assert!(!res.goal_met);
    assert_eq!(res.queries, 1);
}

#[test]
fn budgetless_goals_are_rejected() {
    let model = yz_model();
    let input = decisive_cloud();
    let bad = Goal {
        kind: GoalKind::Untargeted,
        time_budget: None,
        query_budget: None,
        exhaustive: false,
    };
    assert!(matches!(
        iso(&model, &input, &bad, AttackMode::WhiteBox, 0),
        Err(Error::BadGoal(_))
    ));
    let out_of_range = Goal {
        kind: GoalKind::Targeted(9),
        time_budget: None,
        query_budget: Some(10),
        exhaustive: false,
    };
    assert!(matches!(
        iso(&model, &input, &out_of_range, AttackMode::WhiteBox, 0),
        Err(Error::BadGoal(_))
    ));
}

/// Replays a result's log against the model, re-deriving every confidence and
/// prediction, and checks the descent gate, the restore rule, and the final
/// survivor all hold exactly.
fn replay_and_verify(model: &Model, input: &ModelInput, goal: &Goal, res: &AttackResult) {
    let n = input.element_count();
    let universe: Vec<usize> = input.element_ids();
    let mut alive: BTreeSet<usize> = universe.iter().copied().collect();

    let base = model.forward(input).unwrap();
    let y = argmax_lowest(&base.probs);
    let base_conf = base.probs[y];
    assert_eq!(res.predicted_before.class, y);

    let rebuild = |alive: &BTreeSet<usize>| -> ModelInput {
        match input {
            ModelInput::Points(cloud) => {
                let mask: Vec<bool> = (0..n).map(|i| alive.contains(&i)).collect();
                ModelInput::Points(cloud.filter(&mask))
            }
            ModelInput::Voxels(grid) => {
                let mut g = grid.clone();
                for id in grid.occupied() {
                    if !alive.contains(&id) {
                        g = g.cleared(id);
                    }
                }
                ModelInput::Voxels(g)
            }
        }
    };

    let mut probs_now = base.probs.clone();
    for (i, e) in res.log.iter().enumerate() {
        assert_eq!(e.step, i, "steps must number the log");
        let conf_before = probs_now[y];
        assert_eq!(e.confidence_before, conf_before, "event {i}");
        match e.action {
            AttackAction::Remove => {
                let id = e.element_index.expect("removals name an element");
                assert!(alive.remove(&id), "event {i} removed a dead element");
                assert!(!alive.is_empty(), "the last element may never go");
            }
            AttackAction::Restore => {
                let id = e.element_index.expect("restores name an element");
                assert!(alive.insert(id), "event {i} restored a live element");
            }
            AttackAction::Restart => {
                assert_eq!(e.element_index, None);
                alive = universe.iter().copied().collect();
            }
        }
        let state = model.forward(&rebuild(&alive)).unwrap();
        let class = argmax_lowest(&state.probs);
        assert_eq!(e.confidence_after, state.probs[y], "event {i}");
        assert_eq!(e.predicted_class, class, "event {i}");
        let satisfied = goal.satisfied(&state.probs, class, y, base_conf);
        match e.action {
            // a removal must either keep the clean confidence from rising or
            // finish the attack outright
            AttackAction::Remove => assert!(
                satisfied || e.confidence_after <= conf_before,
                "event {i} violated the descent gate"
            ),
            // a kept restore must leave the goal satisfied
            AttackAction::Restore => assert!(satisfied, "event {i} broke the goal"),
            AttackAction::Restart => assert_eq!(e.confidence_after, base_conf),
        }
        probs_now = state.probs;
    }

    let dead: Vec<usize> = universe.iter().copied().filter(|id| !alive.contains(id)).collect();
    assert_eq!(res.removed, dead, "final mask must match the removed set");
    assert_eq!(res.survivor.element_count(), alive.len());
    let final_state = model.forward(&res.survivor).unwrap();
    let final_class = argmax_lowest(&final_state.probs);
    assert_eq!(res.predicted_after.class, final_class);
    assert_eq!(
        res.goal_met,
        goal.satisfied(&final_state.probs, final_class, y, base_conf),
        "goal_met must describe the survivor"
    );
    // the survivor must really be the original minus the removed elements
    if let (ModelInput::Points(original), ModelInput::Points(survivor)) = (input, &res.survivor) {
        let mask: Vec<bool> = (0..n).map(|i| alive.contains(&i)).collect();
        assert_eq!(survivor.points(), original.filter(&mask).points());
    }
}

#[test]
fn logs_replay_exactly_on_random_instances() {
    let mut rounds = 0;
    let mut flips = 0;
    for seed in 0..12u64 {
        let model = random_point_model(&[8, 8], 3, mix_seed(&[seed, 1]));
        let mut r = rng(mix_seed(&[seed, 2]));
        let input = random_cloud(5 + (seed as usize % 7), &mut r);
        for mode in MODES {
            for goal in [
                untargeted_queries(4000),
                Goal {
                    kind: GoalKind::ConfidenceDrop(0.2),
                    time_budget: None,
                    query_budget: Some(4000),
                    exhaustive: false,
                },
            ] {
                let res = iso(&model, &input, &goal, mode, seed).unwrap();
                replay_and_verify(&model, &input, &goal, &res);
                rounds += 1;
                if res.goal_met && res.occlusion_size > 0 {
                    flips += 1;
                }
            }
        }
    }
    assert_eq!(rounds, 48);
    assert!(flips >= 6, "only {flips} successful attacks; fixture too tame");
}
