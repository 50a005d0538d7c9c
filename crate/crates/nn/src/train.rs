//! Cross-entropy SGD training, deterministic under a seed.

use iso3d_shapes::{voxelize, Dataset};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iso3d_shapes::mix_seed;

use crate::model::{argmax_lowest, head_forward, softmax, Model, ModelInput};
use crate::point;
use crate::spec::ModelSpec;
use crate::volum;
use crate::weights::Weights;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

/// Mean cross-entropy and parameter gradients over a batch, plus the number
/// of correct argmax predictions. The loss itself is accumulated in f64 so
/// finite-difference probes see a smooth value; gradients are the model's
/// native f32.
pub struct BatchEval {
    pub loss: f64,
    pub correct: usize,
    pub grads: Weights,
}

pub fn loss_and_grads(
    spec: &ModelSpec,
    weights: &Weights,
    batch: &[(&ModelInput, usize)],
) -> Result<BatchEval, Error> {
    if batch.is_empty() {
        return Err(Error::BadInput("empty batch".into()));
    }
    let classes = spec.classes();
    let mut grads = Weights::zeros(spec);
    let mut loss = 0.0f64;
    let mut correct = 0usize;

    for &(input, label) in batch {
        if label >= classes {
            return Err(Error::BadInput(format!("label {label} for {classes} classes")));
        }
        match (spec, input) {
            (ModelSpec::PointSet { point_widths, fcn_hidden, .. }, ModelInput::Points(cloud)) => {
                if cloud.is_empty() {
                    return Err(Error::BadInput("empty point cloud".into()));
                }
                let run = point::run_layers_cached(point_widths, weights, cloud);
                let (logits, acts) = head_forward(weights, fcn_hidden.len(), &run.pooled, true);
                let (l, d_logits, ok) = ce_loss(&logits, label);
                loss += l;
                correct += usize::from(ok);
                let d_pooled = head_backward(
                    weights,
                    fcn_hidden.len(),
                    &run.pooled,
                    &acts.unwrap(),
                    &d_logits,
                    &mut grads,
                );
                point::backward_layers(point_widths, weights, &run, &d_pooled, &mut grads);
            }
            (ModelSpec::Volumetric { stages, fcn_hidden, resolution, .. }, ModelInput::Voxels(grid)) => {
                if grid.resolution() != *resolution {
                    return Err(Error::BadInput("grid resolution mismatch".into()));
                }
                let run = volum::run_stages_cached(stages, weights, grid);
                let (logits, acts) = head_forward(weights, fcn_hidden.len(), &run.flat, true);
                let (l, d_logits, ok) = ce_loss(&logits, label);
                loss += l;
                correct += usize::from(ok);
                let d_flat = head_backward(
                    weights,
                    fcn_hidden.len(),
                    &run.flat,
                    &acts.unwrap(),
                    &d_logits,
                    &mut grads,
                );
                volum::backward_stages(stages, weights, &run, &d_flat, &mut grads);
            }
            _ => return Err(Error::BadInput("input family does not match model".into())),
        }
    }

    let inv = 1.0 / batch.len() as f32;
    for (_, t) in grads.entries_mut() {
        for v in t.data_mut() {
            *v *= inv;
        }
    }
    Ok(BatchEval {
        loss: loss / batch.len() as f64,
        correct,
        grads,
    })
}

/// Cross-entropy from logits: log-sum-exp in f64, gradient `probs - onehot`
/// in f32. Returns (loss, d_logits, prediction_correct).
fn ce_loss(logits: &[f32], label: usize) -> (f64, Vec<f32>, bool) {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let sum: f64 = logits.iter().map(|&l| f64::from(l - max).exp()).sum();
    let loss = sum.ln() - f64::from(logits[label] - max);
    let probs = softmax(logits);
    let mut d = probs;
    d[label] -= 1.0;
    (loss, d, argmax_lowest(logits) == label)
}

/// Dense-head gradients; returns the loss gradient at the head input.
fn head_backward(
    weights: &Weights,
    hidden_layers: usize,
    input: &[f32],
    hidden_acts: &[Vec<f32>],
    d_logits: &[f32],
    grads: &mut Weights,
) -> Vec<f32> {
    let mut d_out = d_logits.to_vec();
    for j in (0..=hidden_layers).rev() {
        let w = weights.get(&format!("fcn{j}.weight")).expect("validated").clone();
        let in_act: &[f32] = if j == 0 { input } else { &hidden_acts[j - 1] };
        let in_dim = w.shape()[1];
        let mut d_in = vec![0.0f32; in_dim];
        {
            let dw = grads.get_mut(&format!("fcn{j}.weight")).expect("validated");
            let dwd = dw.data_mut();
            for (o, &g) in d_out.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let w_row = w.row(o);
                let dw_row = &mut dwd[o * in_dim..(o + 1) * in_dim];
                for i in 0..in_dim {
                    dw_row[i] += g * in_act[i];
                    d_in[i] += g * w_row[i];
                }
            }
            let db = grads.get_mut(&format!("fcn{j}.bias")).expect("validated");
            for (d, g) in db.data_mut().iter_mut().zip(&d_out) {
                *d += g;
            }
        }
        if j > 0 {
            // gate by the hidden layer's post-ReLU activations
            for (d, &a) in d_in.iter_mut().zip(&hidden_acts[j - 1]) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        d_out = d_in;
    }
    d_out
}

/// Converts labeled clouds to model inputs: identity for point models,
/// voxelization at the model resolution for volumetric ones.
pub fn dataset_inputs(spec: &ModelSpec, examples: &[iso3d_shapes::LabeledExample]) -> Result<Vec<(ModelInput, usize)>, Error> {
    examples
        .iter()
        .map(|e| {
            let input = match spec {
                ModelSpec::PointSet { .. } => ModelInput::Points(e.cloud.clone()),
                ModelSpec::Volumetric { resolution, .. } => {
                    ModelInput::Voxels(voxelize(&e.cloud, *resolution)?)
                }
            };
            Ok((input, e.label))
        })
        .collect()
}

pub fn train(spec: &ModelSpec, dataset: &Dataset, cfg: &TrainConfig) -> Result<(Model, TrainLog), Error> {
    spec.validate()?;
    if dataset.classes.len() != spec.classes() {
        return Err(Error::BadSpec(format!(
            "dataset has {} classes, model expects {}",
            dataset.classes.len(),
            spec.classes()
        )));
    }
    if dataset.train.is_empty() {
        return Err(Error::BadInput("empty training set".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::BadInput("batch size must be positive".into()));
    }
    if !cfg.learning_rate.is_finite() {
        return Err(Error::BadInput("learning rate must be finite".into()));
    }

    let train_inputs = dataset_inputs(spec, &dataset.train)?;
    let test_inputs = dataset_inputs(spec, &dataset.test)?;

    let mut weights = Weights::init(spec, mix_seed(&[cfg.seed, 0]));
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..train_inputs.len()).collect();

    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.seed, 1, epoch as u64]));
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0f64;
        let mut epoch_correct = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&ModelInput, usize)> =
                chunk.iter().map(|&i| (&train_inputs[i].0, train_inputs[i].1)).collect();
            let eval = loss_and_grads(spec, &weights, &batch)?;
            if !eval.loss.is_finite() {
                return Err(Error::Diverged { epoch, loss: eval.loss });
            }
            epoch_loss += eval.loss * batch.len() as f64;
            epoch_correct += eval.correct;
            // canonical order is shared, so update by position
            for ((_, w), (_, g)) in weights.entries_mut().iter_mut().zip(eval.grads.entries()) {
                for (wv, gv) in w.data_mut().iter_mut().zip(g.data()) {
                    *wv -= cfg.learning_rate * gv;
                }
            }
        }

        let mut test_correct = 0usize;
        for (input, label) in &test_inputs {
            if predict_class(spec, &weights, input)? == *label {
                test_correct += 1;
            }
        }
        let test_accuracy = if test_inputs.is_empty() {
            0.0
        } else {
            test_correct as f64 / test_inputs.len() as f64
        };
        log.epochs.push(EpochStats {
            epoch,
            train_loss: epoch_loss / train_inputs.len() as f64,
            train_accuracy: epoch_correct as f64 / train_inputs.len() as f64,
            test_accuracy,
        });
    }

    let model = Model::new(spec.clone(), weights, dataset.classes.clone())?;
    Ok((model, log))
}

/// Argmax class from raw parameters; the epoch loop avoids building a Model
/// per epoch just to measure accuracy.
fn predict_class(spec: &ModelSpec, weights: &Weights, input: &ModelInput) -> Result<usize, Error> {
    let logits = match (spec, input) {
        (ModelSpec::PointSet { point_widths, fcn_hidden, .. }, ModelInput::Points(cloud)) => {
            let run = point::run_layers(point_widths, weights, cloud, false);
            head_forward(weights, fcn_hidden.len(), &run.pooled, false).0
        }
        (ModelSpec::Volumetric { stages, fcn_hidden, .. }, ModelInput::Voxels(grid)) => {
            let run = volum::run_stages(stages, weights, grid);
            head_forward(weights, fcn_hidden.len(), &run.flat, false).0
        }
        _ => return Err(Error::BadInput("input family does not match model".into())),
    };
    Ok(argmax_lowest(&logits))
}

/// Fraction of inputs whose argmax prediction matches the label.
pub fn accuracy(model: &Model, inputs: &[(ModelInput, usize)]) -> Result<f64, Error> {
    if inputs.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (input, label) in inputs {
        if model.predict(input)?.class == *label {
            correct += 1;
        }
    }
    Ok(correct as f64 / inputs.len() as f64)
}
