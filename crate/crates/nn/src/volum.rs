//! Volumetric latent stage: repeated (3D conv, ReLU, cubic max-pool).
//!
//! Convolutions use stride 1 and zero same-padding, so every stage's spatial
//! side only shrinks at its pool. That keeps the map from an input voxel to
//! its final-stage activation cell a plain integer division.

use iso3d_shapes::VoxelGrid;

use crate::model::ConvTrace;
use crate::spec::ConvStage;
use crate::tensor::Tensor;
use crate::weights::Weights;

/// One stage's working state kept for backprop.
pub(crate) struct StageCache {
    /// Post-ReLU pre-pool activations [filters * side^3], plus the side.
    pub act: Vec<f32>,
    pub side: usize,
    /// Flat argmax (into `act`, per channel block) for every pooled cell.
    pub winners: Vec<usize>,
}

pub(crate) struct VolumRun {
    pub flat: Vec<f32>,
    pub trace: ConvTrace,
}

pub(crate) struct VolumTrainRun {
    pub flat: Vec<f32>,
    pub stages: Vec<StageCache>,
    /// Input to each stage: stage 0 gets the grid itself.
    pub inputs: Vec<(Vec<f32>, usize, usize)>, // (data, channels, side)
}

fn idx(c: usize, x: usize, y: usize, z: usize, side: usize) -> usize {
    ((c * side + x) * side + y) * side + z
}

pub(crate) fn conv3d_relu(
    input: &[f32],
    c_in: usize,
    side: usize,
    kernel: &Tensor,
    bias: &Tensor,
) -> Vec<f32> {
    let f_out = kernel.shape()[0];
    let k = kernel.shape()[2];
    let pad = k / 2;
    let kd = kernel.data();
    let bd = bias.data();
    let mut out = vec![0.0f32; f_out * side * side * side];
    for f in 0..f_out {
        for x in 0..side {
            let i_lo = pad.saturating_sub(x);
            let i_hi = k.min(side + pad - x);
            for y in 0..side {
                let j_lo = pad.saturating_sub(y);
                let j_hi = k.min(side + pad - y);
                for z in 0..side {
                    let l_lo = pad.saturating_sub(z);
                    let l_hi = k.min(side + pad - z);
                    let mut acc = bd[f];
                    for c in 0..c_in {
                        for i in i_lo..i_hi {
                            let xi = x + i - pad;
                            for j in j_lo..j_hi {
                                let yj = y + j - pad;
                                let kbase = (((f * c_in + c) * k + i) * k + j) * k;
                                let ibase = idx(c, xi, yj, 0, side);
                                for l in l_lo..l_hi {
                                    acc += kd[kbase + l] * input[ibase + z + l - pad];
                                }
                            }
                        }
                    }
                    out[idx(f, x, y, z, side)] = acc.max(0.0);
                }
            }
        }
    }
    out
}

/// Non-overlapping cubic max pool. Ties keep the first cell in scan order,
/// i.e. the lowest flat index; backprop routes there.
pub(crate) fn max_pool3d(
    input: &[f32],
    channels: usize,
    side: usize,
    window: usize,
) -> (Vec<f32>, Vec<usize>) {
    let out_side = side / window;
    let mut out = vec![0.0f32; channels * out_side * out_side * out_side];
    let mut winners = vec![0usize; out.len()];
    let mut o = 0;
    for c in 0..channels {
        for ox in 0..out_side {
            for oy in 0..out_side {
                for oz in 0..out_side {
                    let mut best = f32::NEG_INFINITY;
                    let mut best_at = 0usize;
                    for dx in 0..window {
                        for dy in 0..window {
                            for dz in 0..window {
                                let at = idx(c, ox * window + dx, oy * window + dy, oz * window + dz, side);
                                if input[at] > best {
                                    best = input[at];
                                    best_at = at;
                                }
                            }
                        }
                    }
                    out[o] = best;
                    winners[o] = best_at;
                    o += 1;
                }
            }
        }
    }
    (out, winners)
}

fn stage_params(weights: &Weights, i: usize) -> (&Tensor, &Tensor) {
    (
        weights.get(&format!("conv{i}.kernel")).expect("validated"),
        weights.get(&format!("conv{i}.bias")).expect("validated"),
    )
}

/// Inference pass: returns the flattened latent and the last stage's
/// pre-pool activity for salience work.
pub(crate) fn run_stages(stages: &[ConvStage], weights: &Weights, grid: &VoxelGrid) -> VolumRun {
    let mut data = grid.data().to_vec();
    let mut channels = 1usize;
    let mut side = grid.resolution();
    let mut downsample = 1usize;
    let mut last_pre_pool: Vec<f32> = Vec::new();
    let mut last_side = side;
    for (i, stage) in stages.iter().enumerate() {
        let (kernel, bias) = stage_params(weights, i);
        let act = conv3d_relu(&data, channels, side, kernel, bias);
        if i == stages.len() - 1 {
            last_pre_pool = act.clone();
            last_side = side;
        } else {
            downsample *= stage.pool;
        }
        let (pooled, _) = max_pool3d(&act, stage.filters, side, stage.pool);
        data = pooled;
        channels = stage.filters;
        side /= stage.pool;
    }
    let trace = ConvTrace {
        pre_pool: Tensor::from_data(&[channels, last_side, last_side, last_side], last_pre_pool),
        pool_window: stages.last().map_or(1, |s| s.pool),
        downsample,
    };
    VolumRun { flat: data, trace }
}

/// Training pass: keeps every stage's activations and pool routing.
pub(crate) fn run_stages_cached(
    stages: &[ConvStage],
    weights: &Weights,
    grid: &VoxelGrid,
) -> VolumTrainRun {
    let mut data = grid.data().to_vec();
    let mut channels = 1usize;
    let mut side = grid.resolution();
    let mut caches = Vec::with_capacity(stages.len());
    let mut inputs = Vec::with_capacity(stages.len());
    for (i, stage) in stages.iter().enumerate() {
        let (kernel, bias) = stage_params(weights, i);
        inputs.push((data.clone(), channels, side));
        let act = conv3d_relu(&data, channels, side, kernel, bias);
        let (pooled, winners) = max_pool3d(&act, stage.filters, side, stage.pool);
        caches.push(StageCache { act, side, winners });
        data = pooled;
        channels = stage.filters;
        side /= stage.pool;
    }
    VolumTrainRun { flat: data, stages: caches, inputs }
}

/// Gradients for the conv stack. `d_flat` is the loss gradient at the
/// flattened latent; accumulates parameter grads into `grads`.
pub(crate) fn backward_stages(
    stages: &[ConvStage],
    weights: &Weights,
    run: &VolumTrainRun,
    d_flat: &[f32],
    grads: &mut Weights,
) {
    let mut d_out = d_flat.to_vec();
    for (i, stage) in stages.iter().enumerate().rev() {
        let cache = &run.stages[i];
        let (input, c_in, side) = &run.inputs[i];

        // un-pool: scatter each pooled-cell gradient to its argmax
        let mut d_act = vec![0.0f32; stage.filters * cache.side * cache.side * cache.side];
        for (o, &w) in cache.winners.iter().enumerate() {
            d_act[w] += d_out[o];
        }
        // ReLU: post-activation value > 0 iff pre-activation > 0
        for (g, &a) in d_act.iter_mut().zip(&cache.act) {
            if a <= 0.0 {
                *g = 0.0;
            }
        }

        let kernel = weights.get(&format!("conv{i}.kernel")).expect("validated").clone();
        let k = kernel.shape()[2];
        let pad = k / 2;
        let side = *side;
        let c_in = *c_in;

        let need_d_input = i > 0;
        let mut d_input = vec![0.0f32; input.len()];
        {
            let dk = grads.get_mut(&format!("conv{i}.kernel")).expect("validated");
            let dkd = dk.data_mut();
            let kd = kernel.data();
            for f in 0..stage.filters {
                for x in 0..side {
                    let i_lo = pad.saturating_sub(x);
                    let i_hi = k.min(side + pad - x);
                    for y in 0..side {
                        let j_lo = pad.saturating_sub(y);
                        let j_hi = k.min(side + pad - y);
                        for z in 0..side {
                            let g = d_act[idx(f, x, y, z, side)];
                            if g == 0.0 {
                                continue;
                            }
                            let l_lo = pad.saturating_sub(z);
                            let l_hi = k.min(side + pad - z);
                            for c in 0..c_in {
                                for ii in i_lo..i_hi {
                                    let xi = x + ii - pad;
                                    for j in j_lo..j_hi {
                                        let yj = y + j - pad;
                                        let kbase = (((f * c_in + c) * k + ii) * k + j) * k;
                                        let ibase = idx(c, xi, yj, 0, side);
                                        for l in l_lo..l_hi {
                                            let iz = ibase + z + l - pad;
                                            dkd[kbase + l] += g * input[iz];
                                            if need_d_input {
                                                d_input[iz] += g * kd[kbase + l];
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let db = grads.get_mut(&format!("conv{i}.bias")).expect("validated");
            let dbd = db.data_mut();
            for f in 0..stage.filters {
                let base = f * side * side * side;
                dbd[f] += d_act[base..base + side * side * side].iter().sum::<f32>();
            }
        }
        d_out = d_input;
    }
}
