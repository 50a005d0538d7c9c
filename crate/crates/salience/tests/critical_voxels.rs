//! Volumetric critical sets: exact member count under the fraction rule, and
//! saliency values recomputed by an independent window-max oracle.

use iso3d_nn::{ConvStage, Model, ModelInput, ModelSpec, Weights};
use iso3d_salience::{
    critical_set_whitebox, critical_set_whitebox_with, saliency_scores, CriticalElement,
};
use iso3d_shapes::VoxelGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(resolution: usize, seed: u64) -> Model {
    let spec = ModelSpec::Volumetric {
        resolution,
        stages: vec![
            ConvStage { filters: 4, kernel: 3, pool: 2 },
            ConvStage { filters: 6, kernel: 3, pool: 2 },
        ],
        fcn_hidden: vec![8],
        classes: 3,
    };
    Model::new(
        spec.clone(),
        Weights::init(&spec, seed),
        vec!["a".into(), "b".into(), "c".into()],
    )
    .unwrap()
}

fn random_grid(resolution: usize, fill: usize, rng: &mut ChaCha8Rng) -> VoxelGrid {
    let mut g = VoxelGrid::zeros(resolution).unwrap();
    for _ in 0..fill {
        g.set(
            rng.gen_range(0..resolution),
            rng.gen_range(0..resolution),
            rng.gen_range(0..resolution),
            1.0,
        );
    }
    g
}

#[test]
fn member_count_is_exactly_the_ceiling_of_a_quarter() {
    let model = model(8, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for fill in [1usize, 2, 3, 4, 5, 9, 50, 200] {
        let grid = random_grid(8, fill, &mut rng);
        let n = grid.occupied_count();
        if n == 0 {
            continue;
        }
        let input = ModelInput::Voxels(grid);
        let trace = model.forward(&input).unwrap();
        let cs = critical_set_whitebox(&trace, &input).unwrap();
        let want = (n * 25).div_ceil(100);
        assert_eq!(cs.len(), want, "occupied {n}");
    }
}

#[test]
fn fraction_edge_values() {
    let model = model(8, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = random_grid(8, 40, &mut rng);
    let n = grid.occupied_count();
    let input = ModelInput::Voxels(grid);
    let trace = model.forward(&input).unwrap();
    assert_eq!(critical_set_whitebox_with(&trace, &input, 1.0).unwrap().len(), n);
    assert_eq!(critical_set_whitebox_with(&trace, &input, 1e-9).unwrap().len(), 1);
    assert_eq!(critical_set_whitebox_with(&trace, &input, 0.0).unwrap().len(), 0);
    assert!(critical_set_whitebox_with(&trace, &input, 1.5).is_err());
}

#[test]
fn saliency_matches_independent_window_max() {
    // oracle: map the voxel to its final-stage cell by dividing by the
    // cumulative downsample, then take the max pre-pool activation over the
    // cell's pooling window, across channels
    let model = model(16, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = random_grid(16, 300, &mut rng);
    let input = ModelInput::Voxels(grid.clone());
    let trace = model.forward(&input).unwrap();
    let scores = saliency_scores(&trace, &input).unwrap();

    let conv = trace.conv.as_ref().unwrap();
    let side = conv.pre_pool.shape()[1];
    let channels = conv.pre_pool.shape()[0];
    let w = conv.pool_window;
    let pp = conv.pre_pool.data();
    for CriticalElement { index, saliency } in &scores {
        let (x, y, z) = grid.coords(*index);
        let (cx, cy, cz) = (x / conv.downsample, y / conv.downsample, z / conv.downsample);
        let (bx, by, bz) = (cx / w * w, cy / w * w, cz / w * w);
        let mut want = f32::NEG_INFINITY;
        for c in 0..channels {
            for dx in 0..w {
                for dy in 0..w {
                    for dz in 0..w {
                        let at = ((c * side + bx + dx) * side + by + dy) * side + bz + dz;
                        want = want.max(pp[at]);
                    }
                }
            }
        }
        assert_eq!(saliency.to_bits(), want.to_bits(), "voxel {index}");
    }
}

#[test]
fn members_are_the_top_scored_voxels() {
    let model = model(8, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let grid = random_grid(8, 60, &mut rng);
    let input = ModelInput::Voxels(grid);
    let trace = model.forward(&input).unwrap();
    let scores = saliency_scores(&trace, &input).unwrap();
    let cs = critical_set_whitebox(&trace, &input).unwrap();

    let mut ranked = scores.clone();
    ranked.sort_by(|a, b| {
        b.saliency.partial_cmp(&a.saliency).unwrap().then(a.index.cmp(&b.index))
    });
    let want: Vec<usize> = ranked[..cs.len()].iter().map(|e| e.index).collect();
    let mut want_sorted = want.clone();
    want_sorted.sort_unstable();
    assert_eq!(cs.indices(), want_sorted);
}

#[test]
fn single_voxel_grid_reports_one_member() {
    let model = model(8, 9);
    let mut g = VoxelGrid::zeros(8).unwrap();
    g.set(3, 4, 5, 1.0);
    let input = ModelInput::Voxels(g);
    let trace = model.forward(&input).unwrap();
    let cs = critical_set_whitebox(&trace, &input).unwrap();
    assert_eq!(cs.len(), 1);
}
