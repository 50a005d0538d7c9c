//! Shape data for 3D classifier robustness work.
//!
//! Two input families are supported end to end: point clouds (ordered lists
//! of distinct points, where order is an artifact of storage rather than
//! meaning) and dense voxel occupancy grids. Meshes exist only as a source
//! to sample clouds from.

pub mod cloud;
pub mod dataset;
pub mod mesh;
pub mod off;
pub mod sample;
pub mod synth;
pub mod voxel;

pub use cloud::{load_cloud, normalize_unit_cube, save_cloud, Point, PointCloud};
pub use dataset::{load_dataset, save_dataset, synth_dataset, Dataset, LabeledExample};
pub use mesh::Mesh;
pub use off::parse_off;
pub use sample::sample_points;
pub use synth::{synth_shape, ShapeKind};
pub use voxel::{voxelize, VoxelGrid};

use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O on {path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("line {line}: {msg}")]
    OffParse { line: usize, msg: String },

    #[error("bad {what}: {msg}")]
    Format { what: &'static str, msg: String },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Splitmix64 step. Used to derive independent stream seeds from a run seed
/// so that changing one consumer cannot shift another's random sequence.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        state = state.wrapping_add(p).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        state ^= state >> 30;
        state = state.wrapping_mul(0x94d0_49bb_1331_11eb);
        state ^= state >> 31;
    }
    state
}
