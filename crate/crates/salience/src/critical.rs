//! Critical-set computation from a forward trace.

use iso3d_nn::{ForwardTrace, ModelInput};

use crate::Error;

/// Fraction of occupied voxels reported as critical by default.
pub const DEFAULT_VOLUMETRIC_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalElement {
    /// Point index, or flat index of an occupied voxel.
    pub index: usize,
    /// Higher = more salient. Finite.
    pub saliency: f32,
}

/// Input elements whose removal perturbs the latent the classifier pools
/// over. Members are stored in ascending index order.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSet {
    members: Vec<CriticalElement>,
}

impl CriticalSet {
    /// Build a set from explicit members. Saliencies must be finite and
    /// indices distinct; members are stored sorted by index.
    pub fn from_elements(mut members: Vec<CriticalElement>) -> Result<Self, Error> {
        if let Some(bad) = members.iter().find(|m| !m.saliency.is_finite()) {
            return Err(Error::BadInput(format!(
                "non-finite saliency {} for element {}",
                bad.saliency, bad.index
            )));
        }
        members.sort_by_key(|m| m.index);
        if members.windows(2).any(|w| w[0].index == w[1].index) {
            return Err(Error::BadInput("duplicate element index".into()));
        }
        Ok(CriticalSet { members })
    }

    pub fn members(&self) -> &[CriticalElement] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search_by_key(&index, |m| m.index).is_ok()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.index).collect()
    }

    /// Member indices sorted by descending saliency, ties by ascending index.
    pub fn ordered_by_saliency(&self) -> Vec<usize> {
        let mut order: Vec<&CriticalElement> = self.members.iter().collect();
        order.sort_by(|a, b| {
            b.saliency
                .partial_cmp(&a.saliency)
                .expect("finite saliency")
                .then(a.index.cmp(&b.index))
        });
        order.into_iter().map(|m| m.index).collect()
    }
}

/// True when the vectors agree elementwise within absolute tolerance `tau`.
/// Vectors of different lengths are never equal.
pub fn latent_equal(a: &[f32], b: &[f32], tau: f32) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tau)
}

/// Continuous saliency for every element of the input, ascending by element
/// id. Point family: the number of latent dimensions whose pooled max the
/// point alone achieves, plus a margin-derived fraction below 1 (so the
/// dimension count always dominates); zero for points owning no dimension.
/// Volumetric family: the strongest post-pool activation, across channels,
/// of the cell the voxel feeds.
pub fn saliency_scores(
    trace: &ForwardTrace,
    input: &ModelInput,
) -> Result<Vec<CriticalElement>, Error> {
    match input {
        ModelInput::Points(cloud) => {
            let rows = trace
                .per_point_latent
                .as_ref()
                .ok_or_else(|| Error::BadInput("trace has no per-point rows".into()))?;
            let n = cloud.len();
            if rows.shape()[0] != n {
                return Err(Error::BadInput(format!(
                    "trace covers {} points, input has {}",
                    rows.shape()[0],
                    n
                )));
            }
            let dims = rows.shape()[1];
            let mut owned = vec![0u32; n];
            let mut margin = vec![0f32; n];
            for k in 0..dims {
                // single scan: best value, its row, achiever count, runner-up
                let mut best = f32::NEG_INFINITY;
                let mut best_i = 0usize;
                let mut second = f32::NEG_INFINITY;
                let mut achievers = 0u32;
                for i in 0..n {
                    let v = rows.row(i)[k];
                    if v > best {
                        second = best;
                        best = v;
                        best_i = i;
                        achievers = 1;
                    } else if v == best {
                        achievers += 1;
                        second = best;
                    } else if v > second {
                        second = v;
                    }
                }
                if achievers == 1 {
                    owned[best_i] += 1;
                    if second.is_finite() {
                        margin[best_i] += best - second;
                    }
                }
            }
            Ok((0..n)
                .map(|i| CriticalElement {
                    index: i,
                    saliency: if owned[i] == 0 {
                        0.0
                    } else {
                        owned[i] as f32 + margin[i] / (margin[i] + 1.0)
                    },
                })
                .collect())
        }
        ModelInput::Voxels(grid) => {
            let conv = trace
                .conv
                .as_ref()
                .ok_or_else(|| Error::BadInput("trace has no conv activations".into()))?;
            let side = conv.pre_pool.shape()[1];
            let out_side = side / conv.pool_window;
            let channels = conv.pre_pool.shape()[0];
            // input voxel -> post-pool cell, one integer division per axis
            let cell = conv.downsample * conv.pool_window;
            if grid.resolution() != side * conv.downsample {
                return Err(Error::BadInput(format!(
                    "trace geometry ({}-sided, x{}) does not cover a {}-sided grid",
                    side,
                    conv.downsample,
                    grid.resolution()
                )));
            }
            let pooled = &trace.pooled_latent;
            Ok(grid
                .occupied()
                .into_iter()
                .map(|flat| {
                    let (x, y, z) = grid.coords(flat);
                    let (ox, oy, oz) = (x / cell, y / cell, z / cell);
                    let mut s = f32::NEG_INFINITY;
                    for c in 0..channels {
                        let at = ((c * out_side + ox) * out_side + oy) * out_side + oz;
                        s = s.max(pooled[at]);
                    }
                    CriticalElement { index: flat, saliency: s }
                })
                .collect())
        }
    }
}

/// Critical set under the default volumetric fraction.
pub fn critical_set_whitebox(
    trace: &ForwardTrace,
    input: &ModelInput,
) -> Result<CriticalSet, Error> {
    critical_set_whitebox_with(trace, input, DEFAULT_VOLUMETRIC_FRACTION)
}

/// Critical set from a forward trace of the same input.
///
/// Point family: a point is a member iff it is the unique achiever of the
/// pooled max in at least one latent dimension; removing any non-member
/// provably leaves the pooled latent bit-identical. `fraction` is ignored.
///
/// Volumetric family: members are the `ceil(fraction * occupied)` most
/// salient occupied voxels (ties broken toward lower index).
pub fn critical_set_whitebox_with(
    trace: &ForwardTrace,
    input: &ModelInput,
    fraction: f64,
) -> Result<CriticalSet, Error> {
    let scores = saliency_scores(trace, input)?;
    match input {
        ModelInput::Points(_) => CriticalSet::from_elements(
            scores.into_iter().filter(|e| e.saliency > 0.0).collect(),
        ),
        ModelInput::Voxels(_) => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::BadInput(format!("fraction {fraction} outside [0, 1]")));
            }
            let n = scores.len();
            let take = ((fraction * n as f64).ceil() as usize).min(n);
            let mut ranked = scores;
            ranked.sort_by(|a, b| {
                b.saliency
                    .partial_cmp(&a.saliency)
                    .expect("finite saliency")
                    .then(a.index.cmp(&b.index))
            });
            ranked.truncate(take);
            CriticalSet::from_elements(ranked)
        }
    }
}
