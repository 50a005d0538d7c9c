//! Forward pass checked against hand arithmetic and structural properties.

use iso3d_nn::{Model, ModelInput, ModelSpec, Tensor, Weights};
use iso3d_shapes::{voxelize, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tiny point model with parameters chosen for mental arithmetic:
/// one per-point layer 3 -> 2, head 2 -> 2 (no hidden layers).
fn tiny_point_model() -> Model {
    let spec = ModelSpec::PointSet {
        point_widths: vec![2],
        fcn_hidden: vec![],
        classes: 2,
    };
    let mut w = Weights::zeros(&spec);
    // latent row = relu([x + y, y - z] + [0.5, 0])
    *w.get_mut("point0.weight").unwrap() =
        Tensor::from_data(&[2, 3], vec![1.0, 1.0, 0.0, 0.0, 1.0, -1.0]);
    *w.get_mut("point0.bias").unwrap() = Tensor::from_data(&[2], vec![0.5, 0.0]);
    // logits = [l0 - l1, 2*l1] + [0.25, -0.25]
    *w.get_mut("fcn0.weight").unwrap() = Tensor::from_data(&[2, 2], vec![1.0, -1.0, 0.0, 2.0]);
    *w.get_mut("fcn0.bias").unwrap() = Tensor::from_data(&[2], vec![0.25, -0.25]);
    Model::new(spec, w, vec!["a".into(), "b".into()]).unwrap()
}

#[test]
fn logits_match_hand_computation() {
    let model = tiny_point_model();
    // two points:
    //   (1, 2, 3):  relu([1+2+0.5, 2-3]) = [3.5, 0]
    //   (0, 1, 0):  relu([0+1+0.5, 1-0]) = [1.5, 1]
    // pooled = [3.5, 1]
    // logits = [3.5 - 1 + 0.25, 2*1 - 0.25] = [2.75, 1.75]
    let cloud = ModelInput::Points(PointCloud::new(vec![[1.0, 2.0, 3.0], [0.0, 1.0, 0.0]]));
    let trace = model.forward(&cloud).unwrap();
    assert_eq!(trace.pooled_latent, vec![3.5, 1.0]);
    assert_eq!(trace.logits, vec![2.75, 1.75]);

    let rows = trace.per_point_latent.unwrap();
    assert_eq!(rows.row(0), &[3.5, 0.0]);
    assert_eq!(rows.row(1), &[1.5, 1.0]);

    let pred = model.predict(&cloud).unwrap();
    assert_eq!(pred.class, 0);
    // softmax gap of 1.0 in logits
    assert!((f64::from(pred.confidence) - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-6);
}

#[test]
fn probabilities_sum_to_one_within_tolerance() {
    let spec = ModelSpec::desk_point(5);
    let model = Model::new(
        spec.clone(),
        Weights::init(&spec, 8),
        (0..5).map(|i| format!("c{i}")).collect(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for _ in 0..50 {
        let points: Vec<[f32; 3]> = (0..64)
            .map(|_| [rng.gen::<f32>(), rng.gen::<f32>(), rng.gen::<f32>()])
            .collect();
        let trace = model.forward(&ModelInput::Points(PointCloud::new(points))).unwrap();
        let sum: f32 = trace.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-5, "prob sum {sum}");
    }
}

#[test]
fn point_order_leaves_logits_bit_identical() {
    let spec = ModelSpec::desk_point(5);
    let model = Model::new(
        spec.clone(),
        Weights::init(&spec, 21),
        (0..5).map(|i| format!("c{i}")).collect(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for round in 0..100 {
        let n = rng.gen_range(4..128);
        let points: Vec<[f32; 3]> = (0..n)
            .map(|_| {
                [
                    rng.gen_range(-1.0..2.0),
                    rng.gen_range(-1.0..2.0),
                    rng.gen_range(-1.0..2.0),
                ]
            })
            .collect();
        let base = model
            .forward(&ModelInput::Points(PointCloud::new(points.clone())))
            .unwrap();
        let mut shuffled = points;
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        let perm = model
            .forward(&ModelInput::Points(PointCloud::new(shuffled)))
            .unwrap();
        for (a, b) in base.logits.iter().zip(&perm.logits) {
            assert_eq!(a.to_bits(), b.to_bits(), "round {round}");
        }
        for (a, b) in base.pooled_latent.iter().zip(&perm.pooled_latent) {
            assert_eq!(a.to_bits(), b.to_bits(), "round {round}");
        }
    }
}

#[test]
fn volumetric_trace_geometry_is_consistent() {
    let spec = ModelSpec::desk_volumetric(5);
    let model = Model::new(
        spec.clone(),
        Weights::init(&spec, 3),
        (0..5).map(|i| format!("c{i}")).collect(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let points: Vec<[f32; 3]> = (0..200)
        .map(|_| [rng.gen::<f32>(), rng.gen::<f32>(), rng.gen::<f32>()])
        .collect();
    let grid = voxelize(&PointCloud::new(points), 16).unwrap();
    let trace = model.forward(&ModelInput::Voxels(grid)).unwrap();

    // last stage sees the 8-sided grid (16 after one 2x pool), 8 channels
    let conv = trace.conv.unwrap();
    assert_eq!(conv.pre_pool.shape(), &[8, 8, 8, 8]);
    assert_eq!(conv.pool_window, 2);
    assert_eq!(conv.downsample, 2);
    // head input is the flattened 8 x 4^3 post-pool volume
    assert_eq!(trace.pooled_latent.len(), 512);
    assert_eq!(trace.logits.len(), 5);

    // pooled latent really is the windowed max of the pre-pool volume
    let pp = conv.pre_pool.data();
    let side = 8;
    let out_side = 4;
    for c in 0..8 {
        for ox in 0..out_side {
            for oy in 0..out_side {
                for oz in 0..out_side {
                    let mut want = f32::NEG_INFINITY;
                    for dx in 0..2 {
                        for dy in 0..2 {
                            for dz in 0..2 {
                                let at = ((c * side + ox * 2 + dx) * side + oy * 2 + dy) * side
                                    + oz * 2
                                    + dz;
                                want = want.max(pp[at]);
                            }
                        }
                    }
                    let flat = ((c * out_side + ox) * out_side + oy) * out_side + oz;
                    assert_eq!(trace.pooled_latent[flat].to_bits(), want.to_bits());
                }
            }
        }
    }
}

#[test]
fn empty_grid_still_classifies() {
    // all-zero occupancy is a valid input: biases drive the logits
    let spec = ModelSpec::desk_volumetric(5);
    let model = Model::new(
        spec.clone(),
        Weights::init(&spec, 4),
        (0..5).map(|i| format!("c{i}")).collect(),
    )
    .unwrap();
    let grid = iso3d_shapes::VoxelGrid::zeros(16).unwrap();
    let pred = model.predict(&ModelInput::Voxels(grid)).unwrap();
    assert!(pred.class < 5);
    assert!(pred.confidence.is_finite());
}
