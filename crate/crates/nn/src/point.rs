//! Point-family latent stage: shared per-point MLP, elementwise max pool.

use iso3d_shapes::PointCloud;

use crate::tensor::Tensor;
use crate::weights::Weights;

pub(crate) struct PointRun {
    pub pooled: Vec<f32>,
    /// [n, latent] final post-ReLU rows, when requested.
    pub per_point: Option<Tensor>,
}

/// Runs the shared MLP over every point and max-pools. Each point's row is
/// computed independently with a fixed operation order, so a permutation of
/// the cloud permutes rows and leaves the pooled vector bit-identical.
pub(crate) fn run_layers(
    widths: &[usize],
    weights: &Weights,
    cloud: &PointCloud,
    keep_rows: bool,
) -> PointRun {
    let n = cloud.len();
    let latent = *widths.last().unwrap();
    let layers: Vec<(&Tensor, &Tensor)> = (0..widths.len())
        .map(|l| {
            (
                weights.get(&format!("point{l}.weight")).expect("validated"),
                weights.get(&format!("point{l}.bias")).expect("validated"),
            )
        })
        .collect();

    let mut pooled = vec![f32::NEG_INFINITY; latent];
    let mut rows = keep_rows.then(|| Vec::with_capacity(n * latent));
    let max_width = widths.iter().copied().max().unwrap();
    let mut a = vec![0.0f32; max_width.max(3)];
    let mut b = vec![0.0f32; max_width];

    for p in cloud.points() {
        a[..3].copy_from_slice(p);
        let mut in_dim = 3;
        for (w, bias) in &layers {
            let out_dim = w.shape()[0];
            for o in 0..out_dim {
                let row = w.row(o);
                let mut acc = bias.data()[o];
                for i in 0..in_dim {
                    acc += row[i] * a[i];
                }
                b[o] = acc.max(0.0);
            }
            a[..out_dim].copy_from_slice(&b[..out_dim]);
            in_dim = out_dim;
        }
        for k in 0..latent {
            if a[k] > pooled[k] {
                pooled[k] = a[k];
            }
        }
        if let Some(rows) = rows.as_mut() {
            rows.extend_from_slice(&a[..latent]);
        }
    }
    if n == 0 {
        pooled.iter_mut().for_each(|v| *v = 0.0);
    }
    PointRun {
        pooled,
        per_point: rows.map(|r| Tensor::from_data(&[n, latent], r)),
    }
}

pub(crate) struct PointTrainRun {
    /// acts[0] is the [n, 3] input; acts[l+1] the post-ReLU output of layer l.
    pub acts: Vec<Tensor>,
    pub pooled: Vec<f32>,
    pub winners: Vec<usize>,
}

/// Forward pass keeping every layer's activations for backprop.
pub(crate) fn run_layers_cached(
    widths: &[usize],
    weights: &Weights,
    cloud: &PointCloud,
) -> PointTrainRun {
    let n = cloud.len();
    let mut acts = Vec::with_capacity(widths.len() + 1);
    let mut input = Vec::with_capacity(n * 3);
    for p in cloud.points() {
        input.extend_from_slice(p);
    }
    acts.push(Tensor::from_data(&[n, 3], input));

    for (l, &out_dim) in widths.iter().enumerate() {
        let w = weights.get(&format!("point{l}.weight")).expect("validated");
        let b = weights.get(&format!("point{l}.bias")).expect("validated");
        let prev = acts.last().unwrap();
        let in_dim = prev.shape()[1];
        let mut next = vec![0.0f32; n * out_dim];
        for r in 0..n {
            let h = prev.row(r);
            let dst = &mut next[r * out_dim..(r + 1) * out_dim];
            for o in 0..out_dim {
                let row = w.row(o);
                let mut acc = b.data()[o];
                for i in 0..in_dim {
                    acc += row[i] * h[i];
                }
                dst[o] = acc.max(0.0);
            }
        }
        acts.push(Tensor::from_data(&[n, out_dim], next));
    }

    let last = acts.last().unwrap();
    let latent = *widths.last().unwrap();
    let mut pooled = last.row(0).to_vec();
    for r in 1..n {
        let row = last.row(r);
        for k in 0..latent {
            if row[k] > pooled[k] {
                pooled[k] = row[k];
            }
        }
    }
    let winners = pool_winners(last);
    PointTrainRun { acts, pooled, winners }
}

/// Gradients through pool and the shared MLP. `d_pooled` is the loss
/// gradient at the pooled latent; parameter grads accumulate into `grads`.
pub(crate) fn backward_layers(
    widths: &[usize],
    weights: &Weights,
    run: &PointTrainRun,
    d_pooled: &[f32],
    grads: &mut Weights,
) {
    let n = run.acts[0].shape()[0];
    let latent = *widths.last().unwrap();

    // max pool routes each dimension's gradient to its winning row
    let mut d_act = vec![0.0f32; n * latent];
    for k in 0..latent {
        d_act[run.winners[k] * latent + k] += d_pooled[k];
    }

    for l in (0..widths.len()).rev() {
        let out_dim = widths[l];
        let post = &run.acts[l + 1];
        let pre = &run.acts[l];
        let in_dim = pre.shape()[1];
        let w = weights.get(&format!("point{l}.weight")).expect("validated").clone();
        let dw = grads.get_mut(&format!("point{l}.weight")).expect("validated");
        let dwd = dw.data_mut();
        let mut d_prev = vec![0.0f32; n * in_dim];
        let mut d_bias = vec![0.0f32; out_dim];
        for r in 0..n {
            let post_row = post.row(r);
            let pre_row = pre.row(r);
            let dz_row = &d_act[r * out_dim..(r + 1) * out_dim];
            let d_prev_row = &mut d_prev[r * in_dim..(r + 1) * in_dim];
            for o in 0..out_dim {
                // ReLU gate: post-activation > 0 iff pre-activation > 0
                let g = if post_row[o] > 0.0 { dz_row[o] } else { 0.0 };
                if g == 0.0 {
                    continue;
                }
                d_bias[o] += g;
                let w_row = w.row(o);
                let dw_row = &mut dwd[o * in_dim..(o + 1) * in_dim];
                for i in 0..in_dim {
                    dw_row[i] += g * pre_row[i];
                    d_prev_row[i] += g * w_row[i];
                }
            }
        }
        let db = grads.get_mut(&format!("point{l}.bias")).expect("validated");
        for (d, g) in db.data_mut().iter_mut().zip(&d_bias) {
            *d += g;
        }
        d_act = d_prev;
    }
}

/// Winning row per latent dimension, lowest index on ties. This is also the
/// gradient routing rule for the pooling layer.
pub(crate) fn pool_winners(per_point: &Tensor) -> Vec<usize> {
    let n = per_point.shape()[0];
    let latent = per_point.shape()[1];
    let mut winners = vec![0usize; latent];
    let mut best = per_point.row(0).to_vec();
    for r in 1..n {
        let row = per_point.row(r);
        for k in 0..latent {
            if row[k] > best[k] {
                best[k] = row[k];
                winners[k] = r;
            }
        }
    }
    winners
}
