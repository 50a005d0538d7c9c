//! Architecture descriptions.
//!
//! Both families decompose the same way: a latent translation (shared
//! per-point MLP, or 3D conv stages), a pooling step that collapses to a
//! fixed-size latent vector, and a fully connected classifier head.

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvStage {
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSpec {
    /// Shared per-point MLP with ReLU, elementwise max over points, dense head.
    PointSet {
        /// Output widths of the per-point layers; input width is 3.
        point_widths: Vec<usize>,
        /// Hidden widths of the head; a final linear layer to `classes` is implied.
        fcn_hidden: Vec<usize>,
        classes: usize,
    },
    /// Stages of (3D conv, ReLU, cubic max-pool) on an occupancy grid,
    /// flattened into the dense head.
    Volumetric {
        resolution: usize,
        stages: Vec<ConvStage>,
        fcn_hidden: Vec<usize>,
        classes: usize,
    },
}

impl ModelSpec {
    /// Desk-scale point classifier: 3 -> 32 -> 64 latent, 64 -> 32 -> classes head.
    pub fn desk_point(classes: usize) -> Self {
        ModelSpec::PointSet {
            point_widths: vec![32, 64],
            fcn_hidden: vec![32],
            classes,
        }
    }

    /// Desk-scale voxel classifier on a 16^3 grid: two stages of
    /// (8 filters, 3^3 kernel, 2^3 pool), then 512 -> 32 -> classes.
    pub fn desk_volumetric(classes: usize) -> Self {
        ModelSpec::Volumetric {
            resolution: 16,
            stages: vec![
                ConvStage { filters: 8, kernel: 3, pool: 2 },
                ConvStage { filters: 8, kernel: 3, pool: 2 },
            ],
            fcn_hidden: vec![32],
            classes,
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            ModelSpec::PointSet { classes, .. } | ModelSpec::Volumetric { classes, .. } => *classes,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            ModelSpec::PointSet { .. } => "point-set",
            ModelSpec::Volumetric { .. } => "volumetric",
        }
    }

    /// Width of the pooled latent vector feeding the head.
    pub fn latent_dim(&self) -> usize {
        match self {
            ModelSpec::PointSet { point_widths, .. } => *point_widths.last().unwrap_or(&0),
            ModelSpec::Volumetric { resolution, stages, .. } => {
                let mut side = *resolution;
                for s in stages {
                    side /= s.pool;
                }
                let channels = stages.last().map_or(0, |s| s.filters);
                channels * side * side * side
            }
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::BadSpec(msg));
        match self {
            ModelSpec::PointSet { point_widths, fcn_hidden, classes } => {
                if *classes < 2 {
                    return bad(format!("need at least 2 classes, got {classes}"));
                }
                if point_widths.is_empty() {
                    return bad("point MLP needs at least one layer".into());
                }
                if point_widths.iter().chain(fcn_hidden).any(|&w| w == 0) {
                    return bad("zero-width layer".into());
                }
            }
            ModelSpec::Volumetric { resolution, stages, fcn_hidden, classes } => {
                if *classes < 2 {
                    return bad(format!("need at least 2 classes, got {classes}"));
                }
                if stages.is_empty() {
                    return bad("need at least one conv stage".into());
                }
                if fcn_hidden.contains(&0) {
                    return bad("zero-width layer".into());
                }
                let mut side = *resolution;
                for (i, s) in stages.iter().enumerate() {
                    if s.filters == 0 {
                        return bad(format!("stage {i}: zero filters"));
                    }
                    if s.kernel == 0 || s.kernel % 2 == 0 {
                        return bad(format!("stage {i}: kernel {} must be odd", s.kernel));
                    }
                    if s.kernel > side {
                        return bad(format!("stage {i}: kernel {} exceeds side {side}", s.kernel));
                    }
                    if s.pool == 0 || side % s.pool != 0 {
                        // exact divisibility keeps the voxel -> activation-cell
                        // coordinate map an integer division end to end
                        return bad(format!("stage {i}: pool {} does not divide side {side}", s.pool));
                    }
                    side /= s.pool;
                }
                if side == 0 {
                    return bad("pooling consumed the whole grid".into());
                }
            }
        }
        Ok(())
    }

    /// Canonical parameter list: (name, shape), in forward order.
    pub fn tensor_layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        match self {
            ModelSpec::PointSet { point_widths, fcn_hidden, classes } => {
                let mut prev = 3;
                for (i, &w) in point_widths.iter().enumerate() {
                    out.push((format!("point{i}.weight"), vec![w, prev]));
                    out.push((format!("point{i}.bias"), vec![w]));
                    prev = w;
                }
                push_head(&mut out, prev, fcn_hidden, *classes);
            }
            ModelSpec::Volumetric { stages, fcn_hidden, classes, .. } => {
                let mut prev = 1;
                for (i, s) in stages.iter().enumerate() {
                    out.push((
                        format!("conv{i}.kernel"),
                        vec![s.filters, prev, s.kernel, s.kernel, s.kernel],
                    ));
                    out.push((format!("conv{i}.bias"), vec![s.filters]));
                    prev = s.filters;
                }
                push_head(&mut out, self.latent_dim(), fcn_hidden, *classes);
            }
        }
        out
    }

    /// Names of the dense-head weight matrices (not biases).
    pub fn head_weight_names(&self) -> Vec<String> {
        let hidden = match self {
            ModelSpec::PointSet { fcn_hidden, .. } | ModelSpec::Volumetric { fcn_hidden, .. } => {
                fcn_hidden.len()
            }
        };
        (0..=hidden).map(|i| format!("fcn{i}.weight")).collect()
    }
}

fn push_head(out: &mut Vec<(String, Vec<usize>)>, input: usize, hidden: &[usize], classes: usize) {
    let mut prev = input;
    for (i, &w) in hidden.iter().enumerate() {
        out.push((format!("fcn{i}.weight"), vec![w, prev]));
        out.push((format!("fcn{i}.bias"), vec![w]));
        prev = w;
    }
    let last = hidden.len();
    out.push((format!("fcn{last}.weight"), vec![classes, prev]));
    out.push((format!("fcn{last}.bias"), vec![classes]));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_point_layout() {
        let spec = ModelSpec::desk_point(5);
        spec.validate().unwrap();
        assert_eq!(spec.latent_dim(), 64);
        let layout = spec.tensor_layout();
        let names: Vec<&str> = layout.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            [
                "point0.weight", "point0.bias", "point1.weight", "point1.bias",
                "fcn0.weight", "fcn0.bias", "fcn1.weight", "fcn1.bias"
            ]
        );
        assert_eq!(layout[0].1, vec![32, 3]);
        assert_eq!(layout[6].1, vec![5, 32]);
    }

    #[test]
    fn desk_volumetric_flattens_to_512() {
        let spec = ModelSpec::desk_volumetric(5);
        spec.validate().unwrap();
        // 8 filters on a 16/(2*2) = 4 sided grid
        assert_eq!(spec.latent_dim(), 8 * 4 * 4 * 4);
        let layout = spec.tensor_layout();
        assert_eq!(layout[0].1, vec![8, 1, 3, 3, 3]);
        assert_eq!(layout[2].1, vec![8, 8, 3, 3, 3]);
    }

    #[test]
    fn validation_rejects_broken_geometry() {
        let mut spec = ModelSpec::desk_volumetric(5);
        if let ModelSpec::Volumetric { ref mut stages, .. } = spec {
            stages[0].pool = 3; // 16 % 3 != 0
        }
        assert!(spec.validate().is_err());

        let even_kernel = ModelSpec::Volumetric {
            resolution: 16,
            stages: vec![ConvStage { filters: 4, kernel: 2, pool: 2 }],
            fcn_hidden: vec![8],
            classes: 3,
        };
        assert!(even_kernel.validate().is_err());

        let one_class = ModelSpec::desk_point(1);
        assert!(one_class.validate().is_err());
    }

    #[test]
    fn head_weight_names_cover_all_dense_layers() {
        assert_eq!(ModelSpec::desk_point(5).head_weight_names(), ["fcn0.weight", "fcn1.weight"]);
    }
}
