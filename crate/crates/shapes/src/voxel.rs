//! Dense voxel occupancy grids.

use crate::cloud::PointCloud;
use crate::Error;

/// A d^3 occupancy grid. Values live in [0, 1]; a cell is occupied when its
/// value is strictly positive. Flat indexing is x-major: (x*d + y)*d + z.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    resolution: usize,
    data: Vec<f32>,
}

impl VoxelGrid {
    pub fn zeros(resolution: usize) -> Result<Self, Error> {
        if resolution == 0 {
            return Err(Error::Invalid("voxel resolution must be at least 1".into()));
        }
        Ok(VoxelGrid {
            resolution,
            data: vec![0.0; resolution * resolution * resolution],
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn flat(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.resolution && y < self.resolution && z < self.resolution);
        (x * self.resolution + y) * self.resolution + z
    }

    pub fn coords(&self, flat: usize) -> (usize, usize, usize) {
        let d = self.resolution;
        (flat / (d * d), (flat / d) % d, flat % d)
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.flat(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: f32) {
        assert!((0.0..=1.0).contains(&value), "occupancy out of [0,1]: {value}");
        let i = self.flat(x, y, z);
        self.data[i] = value;
    }

    /// Flat indices of occupied cells, ascending.
    pub fn occupied(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v > 0.0).then_some(i))
            .collect()
    }

    pub fn occupied_count(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0.0).count()
    }

    /// Copy with one cell cleared to zero.
    pub fn cleared(&self, flat: usize) -> Self {
        let mut g = self.clone();
        g.data[flat] = 0.0;
        g
    }
}

/// Binary-occupancy voxelization: a cell is 1.0 when at least one point maps
/// into it. Cell index per axis is floor(coordinate * d) clamped into range,
/// so points outside [0,1] land in boundary cells instead of being lost.
pub fn voxelize(cloud: &PointCloud, resolution: usize) -> Result<VoxelGrid, Error> {
    let mut grid = VoxelGrid::zeros(resolution)?;
    let d = resolution as f32;
    for p in cloud.points() {
        let mut cell = [0usize; 3];
        for a in 0..3 {
            let i = (p[a] * d).floor();
            cell[a] = (i.max(0.0) as usize).min(resolution - 1);
        }
        grid.set(cell[0], cell[1], cell[2], 1.0);
    }
    Ok(grid)
}
