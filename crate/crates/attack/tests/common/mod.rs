//! Hand-weighted fixture models shared by the attack tests.

#![allow(dead_code)]

use iso3d_nn::{Model, ModelInput, ModelSpec, Tensor, Weights};
use iso3d_shapes::PointCloud;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Latent is [max y, max z] over the points (coordinates must be >= 0 so the
/// relu is inert), logits equal the latent. Class 0 wins on y, class 1 on z.
pub fn yz_model() -> Model {
    let spec = ModelSpec::PointSet { point_widths: vec![2], fcn_hidden: vec![], classes: 2 };
    let mut w = Weights::zeros(&spec);
    *w.get_mut("point0.weight").unwrap() =
        Tensor::from_data(&[2, 3], vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    *w.get_mut("fcn0.weight").unwrap() = Tensor::from_data(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]);
    Model::new(spec, w, vec!["tall".into(), "deep".into()]).unwrap()
}

/// Same latent as [`yz_model`] but both logits share one weight row, so the
/// logit gap is pinned at the bias gap: the prediction and the probabilities
/// never move, no matter what is removed.
pub fn constant_margin_model() -> Model {
    let spec = ModelSpec::PointSet { point_widths: vec![2], fcn_hidden: vec![], classes: 2 };
    let mut w = Weights::zeros(&spec);
    *w.get_mut("point0.weight").unwrap() =
        Tensor::from_data(&[2, 3], vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    *w.get_mut("fcn0.weight").unwrap() = Tensor::from_data(&[2, 2], vec![1.0, 0.0, 1.0, 0.0]);
    *w.get_mut("fcn0.bias").unwrap() = Tensor::from_data(&[2], vec![1.0, 0.0]);
    Model::new(spec, w, vec!["always".into(), "never".into()]).unwrap()
}

/// Cloud where point 0 single-handedly props up class 0: removing it flips
/// the prediction to class 1, and nothing smaller changes anything.
pub fn decisive_cloud() -> ModelInput {
    ModelInput::Points(PointCloud::new(vec![
        [0.0, 5.0, 0.1],
        [0.1, 0.2, 1.0],
        [0.2, 0.3, 0.9],
    ]))
}

pub fn random_point_model(widths: &[usize], classes: usize, seed: u64) -> Model {
    let spec = ModelSpec::PointSet {
        point_widths: widths.to_vec(),
        fcn_hidden: vec![],
        classes,
    };
    let weights = Weights::init(&spec, seed);
    let names = (0..classes).map(|i| format!("c{i}")).collect();
    Model::new(spec, weights, names).unwrap()
}

pub fn random_cloud(n: usize, rng: &mut ChaCha8Rng) -> ModelInput {
    let points = (0..n)
        .map(|_| [rng.gen::<f32>(), rng.gen::<f32>(), rng.gen::<f32>()])
        .collect();
    ModelInput::Points(PointCloud::new(points))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
