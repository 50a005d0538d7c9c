//! Model bundle and the forward surface used by everything downstream.

use iso3d_shapes::{PointCloud, VoxelGrid};

use crate::point;
use crate::spec::ModelSpec;
use crate::tensor::Tensor;
use crate::volum;
use crate::weights::Weights;
use crate::Error;

/// One classifiable input. The occlusion element universe differs by family:
/// points for clouds, occupied cells for grids.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelInput {
    Points(PointCloud),
    Voxels(VoxelGrid),
}

impl ModelInput {
    /// Identifiers of removable elements: point indices, or flat indices of
    /// occupied voxels. Ascending.
    pub fn element_ids(&self) -> Vec<usize> {
        match self {
            ModelInput::Points(c) => (0..c.len()).collect(),
            ModelInput::Voxels(g) => g.occupied(),
        }
    }

    pub fn element_count(&self) -> usize {
        match self {
            ModelInput::Points(c) => c.len(),
            ModelInput::Voxels(g) => g.occupied_count(),
        }
    }

    /// Copy with one element removed. For clouds `id` is a point index and
    /// indices above it shift down; for grids `id` is a flat cell index and
    /// nothing shifts. Callers tracking sets should prefer masks.
    pub fn without_element(&self, id: usize) -> ModelInput {
        match self {
            ModelInput::Points(c) => ModelInput::Points(c.without(id)),
            ModelInput::Voxels(g) => ModelInput::Voxels(g.cleared(id)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub confidence: f32,
}

/// Final-stage conv activity, enough to locate any input voxel's activation
/// cell and its pooling neighborhood.
#[derive(Debug, Clone)]
pub struct ConvTrace {
    /// Post-ReLU, pre-pool activations of the last stage: [channels, side^3].
    pub pre_pool: Tensor,
    /// Pooling window of the last stage.
    pub pool_window: usize,
    /// Integer factor from input grid coordinates down to `pre_pool` coordinates.
    pub downsample: usize,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub logits: Vec<f32>,
    pub probs: Vec<f32>,
    /// The vector the dense head consumes: elementwise max over per-point
    /// latents, or the flattened post-pool volume.
    pub pooled_latent: Vec<f32>,
    /// [n, latent_dim] post-ReLU rows, point family only.
    pub per_point_latent: Option<Tensor>,
    /// Volumetric family only.
    pub conv: Option<ConvTrace>,
}

#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    weights: Weights,
    classes: Vec<String>,
}

impl Model {
    pub fn new(spec: ModelSpec, weights: Weights, classes: Vec<String>) -> Result<Self, Error> {
        spec.validate()?;
        weights.validate(&spec)?;
        if classes.len() != spec.classes() {
            return Err(Error::BadSpec(format!(
                "{} class names for {} classes",
                classes.len(),
                spec.classes()
            )));
        }
        Ok(Model { spec, weights, classes })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.spec.classes()
    }

    fn check_input(&self, input: &ModelInput) -> Result<(), Error> {
        match (&self.spec, input) {
            (ModelSpec::PointSet { .. }, ModelInput::Points(c)) => {
                if c.is_empty() {
                    return Err(Error::BadInput("empty point cloud".into()));
                }
            }
            (ModelSpec::Volumetric { resolution, .. }, ModelInput::Voxels(g)) => {
                if g.resolution() != *resolution {
                    return Err(Error::BadInput(format!(
                        "grid resolution {} does not match model resolution {}",
                        g.resolution(),
                        resolution
                    )));
                }
            }
            (spec, _) => {
                return Err(Error::BadInput(format!(
                    "input family does not match {} model",
                    spec.family_name()
                )))
            }
        }
        Ok(())
    }

    /// Full forward pass with introspection of the latent stage.
    pub fn forward(&self, input: &ModelInput) -> Result<ForwardTrace, Error> {
        self.check_input(input)?;
        match (&self.spec, input) {
            (ModelSpec::PointSet { point_widths, fcn_hidden, .. }, ModelInput::Points(c)) => {
                let run = point::run_layers(point_widths, &self.weights, c, true);
                let logits = head_logits(&self.weights, fcn_hidden.len(), &run.pooled);
                let probs = softmax(&logits);
                Ok(ForwardTrace {
                    logits,
                    probs,
                    pooled_latent: run.pooled,
                    per_point_latent: run.per_point,
                    conv: None,
                })
            }
            (ModelSpec::Volumetric { stages, fcn_hidden, .. }, ModelInput::Voxels(g)) => {
                let run = volum::run_stages(stages, &self.weights, g);
                let logits = head_logits(&self.weights, fcn_hidden.len(), &run.flat);
                let probs = softmax(&logits);
                Ok(ForwardTrace {
                    logits,
                    probs,
                    pooled_latent: run.flat,
                    per_point_latent: None,
                    conv: Some(run.trace),
                })
            }
            _ => unreachable!("check_input screens family mismatches"),
        }
    }

    /// Logits without latent capture. Same arithmetic as `forward`.
    pub fn logits(&self, input: &ModelInput) -> Result<Vec<f32>, Error> {
        self.check_input(input)?;
        match (&self.spec, input) {
            (ModelSpec::PointSet { point_widths, fcn_hidden, .. }, ModelInput::Points(c)) => {
                let run = point::run_layers(point_widths, &self.weights, c, false);
                Ok(head_logits(&self.weights, fcn_hidden.len(), &run.pooled))
            }
            (ModelSpec::Volumetric { stages, fcn_hidden, .. }, ModelInput::Voxels(g)) => {
                let run = volum::run_stages(stages, &self.weights, g);
                Ok(head_logits(&self.weights, fcn_hidden.len(), &run.flat))
            }
            _ => unreachable!("check_input screens family mismatches"),
        }
    }

    pub fn predict(&self, input: &ModelInput) -> Result<Prediction, Error> {
        let logits = self.logits(input)?;
        let probs = softmax(&logits);
        let class = argmax_lowest(&probs);
        Ok(Prediction { class, confidence: probs[class] })
    }
}

/// Dense head: hidden layers with ReLU, final layer linear.
pub(crate) fn head_logits(weights: &Weights, hidden_layers: usize, input: &[f32]) -> Vec<f32> {
    head_forward(weights, hidden_layers, input, false).0
}

/// Same pass, optionally keeping the post-ReLU hidden activations for backprop.
pub(crate) fn head_forward(
    weights: &Weights,
    hidden_layers: usize,
    input: &[f32],
    keep_acts: bool,
) -> (Vec<f32>, Option<Vec<Vec<f32>>>) {
    let mut h = input.to_vec();
    let mut acts = keep_acts.then(Vec::new);
    for j in 0..=hidden_layers {
        let w = weights.get(&format!("fcn{j}.weight")).expect("validated");
        let b = weights.get(&format!("fcn{j}.bias")).expect("validated");
        let out_dim = w.shape()[0];
        let mut next = vec![0.0f32; out_dim];
        for o in 0..out_dim {
            let row = w.row(o);
            let mut acc = b.data()[o];
            for (wi, hi) in row.iter().zip(&h) {
                acc += wi * hi;
            }
            next[o] = if j < hidden_layers { acc.max(0.0) } else { acc };
        }
        if j < hidden_layers {
            if let Some(acts) = acts.as_mut() {
                acts.push(next.clone());
            }
        }
        h = next;
    }
    (h, acts)
}

/// Numerically shifted softmax.
pub fn softmax(logits: &[f32]) -> Vec<f32> {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f32> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f32 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Argmax with the lowest index winning ties.
pub fn argmax_lowest(xs: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
