//! The random-order removal baseline: deterministic per seed, stops on the
//! first prediction flip, never deletes the last element.

mod common;

use common::*;
use iso3d_attack::{random_occlusion, AttackAction};
use iso3d_nn::ModelInput;
use iso3d_shapes::PointCloud;

#[test]
fn same_seed_reproduces_the_run_exactly() {
    let model = random_point_model(&[8, 8], 3, 5);
    let mut r = rng(900);
    let input = random_cloud(20, &mut r);
    let a = random_occlusion(&model, &input, 17).unwrap();
    let b = random_occlusion(&model, &input, 17).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.removed, b.removed);
    assert_eq!(a.queries, b.queries);
    assert_eq!(a.goal_met, b.goal_met);
}

#[test]
fn different_seeds_walk_different_orders() {
    let model = constant_margin_model(); // never flips, so both walks run long
    let points: Vec<[f32; 3]> = (0..12).map(|i| [0.0, i as f32 * 0.1, 1.0]).collect();
    let input = ModelInput::Points(PointCloud::new(points));
    let a = random_occlusion(&model, &input, 1).unwrap();
    let b = random_occlusion(&model, &input, 2).unwrap();
    let order_a: Vec<_> = a.log.iter().map(|e| e.element_index).collect();
    let order_b: Vec<_> = b.log.iter().map(|e| e.element_index).collect();
    assert_ne!(order_a, order_b);
}

#[test]
fn unflippable_model_strips_to_one_survivor_without_success() {
    let model = constant_margin_model();
    let points: Vec<[f32; 3]> = (0..9).map(|i| [0.0, i as f32 * 0.2, 0.5]).collect();
    let input = ModelInput::Points(PointCloud::new(points));
    let res = random_occlusion(&model, &input, 3).unwrap();
    assert!(!res.goal_met);
    assert_eq!(res.survivor.element_count(), 1);
    assert_eq!(res.occlusion_size, 8);
    assert_eq!(res.log.len(), 8);
    assert!(res.log.iter().all(|e| e.action == AttackAction::Remove));
    assert_eq!(res.predicted_after.class, res.predicted_before.class);
    // 1 clean query + 1 per removal
    assert_eq!(res.queries, 9);
}

#[test]
fn stops_at_the_first_flip() {
    let model = yz_model();
    let input = decisive_cloud();
    // only deleting point 0 flips the class; orders that save it for last
    // (and so never delete it) must end unflipped with a lone survivor
    let mut met = 0;
    for seed in 0..20u64 {
        let res = random_occlusion(&model, &input, seed).unwrap();
        assert_eq!(res.goal_met, res.removed.contains(&0), "seed {seed}");
        if res.goal_met {
            let last = res.log.last().unwrap();
            assert_eq!(last.element_index, Some(0), "seed {seed}: must stop on the flip");
            assert_ne!(res.predicted_after.class, 0);
            met += 1;
        } else {
            assert_eq!(res.survivor.element_count(), 1);
            assert_eq!(res.predicted_after.class, 0);
        }
        // removals before the last step must not have flipped anything
        for e in &res.log[..res.log.len() - 1] {
            assert_eq!(e.predicted_class, 0, "seed {seed}");
        }
    }
    // with 20 seeds, both outcomes should actually occur
    assert!((8..=19).contains(&met), "{met} of 20 flipped");
}
