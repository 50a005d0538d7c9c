//! Point clouds with set semantics and their binary file format.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::Error;

pub type Point = [f32; 3];

const MAGIC: &[u8; 4] = b"PC3D";

fn bit_key(p: &Point) -> [u32; 3] {
    [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()]
}

/// An ordered list of distinct points. Indices are stable, so occlusion
/// bookkeeping can refer to points by position, but classification treats
/// the cloud as a set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
}

impl PointCloud {
    /// Builds a cloud, dropping bit-exact duplicates. First occurrence wins.
    pub fn new(points: Vec<Point>) -> Self {
        let mut seen = HashSet::with_capacity(points.len());
        let mut unique = Vec::with_capacity(points.len());
        for p in points {
            if seen.insert(bit_key(&p)) {
                unique.push(p);
            }
        }
        PointCloud { points: unique }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cloud with the point at `index` dropped.
    pub fn without(&self, index: usize) -> Self {
        let mut points = self.points.clone();
        points.remove(index);
        // distinctness is preserved by removal
        PointCloud { points }
    }

    /// Keeps exactly the points whose flag is true. `keep` must match `len`.
    pub fn filter(&self, keep: &[bool]) -> Self {
        assert_eq!(keep.len(), self.points.len(), "mask length mismatch");
        let points = self
            .points
            .iter()
            .zip(keep)
            .filter_map(|(p, &k)| k.then_some(*p))
            .collect();
        PointCloud { points }
    }

    /// Axis-aligned bounds, or None for an empty cloud.
    pub fn bounds(&self) -> Option<(Point, Point)> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points[1..] {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Some((lo, hi))
    }
}

/// Rescales into the unit cube: one isotropic scale so the longest axis
/// spans exactly [0, 1], shorter axes centered. A cloud whose points all
/// coincide collapses to the single cube center point.
pub fn normalize_unit_cube(cloud: &PointCloud) -> PointCloud {
    let Some((lo, hi)) = cloud.bounds() else {
        return PointCloud::new(Vec::new());
    };
    let extent = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let span = extent.iter().fold(0.0f32, |m, &e| m.max(e));
    if span == 0.0 {
        return PointCloud::new(vec![[0.5, 0.5, 0.5]]);
    }
    let offset = [
        (1.0 - extent[0] / span) / 2.0,
        (1.0 - extent[1] / span) / 2.0,
        (1.0 - extent[2] / span) / 2.0,
    ];
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let mut q = [0.0f32; 3];
            for a in 0..3 {
                q[a] = ((p[a] - lo[a]) / span + offset[a]).clamp(0.0, 1.0);
            }
            q
        })
        .collect();
    PointCloud::new(points)
}

pub fn write_cloud(w: &mut impl Write, cloud: &PointCloud, path: &Path) -> Result<(), Error> {
    let err = |e| Error::io(path, e);
    w.write_all(MAGIC).map_err(err)?;
    let count = u32::try_from(cloud.len())
        .map_err(|_| Error::Invalid(format!("cloud too large to store: {}", cloud.len())))?;
    w.write_all(&count.to_le_bytes()).map_err(err)?;
    for p in cloud.points() {
        for c in p {
            w.write_all(&c.to_le_bytes()).map_err(err)?;
        }
    }
    Ok(())
}

pub fn read_cloud(r: &mut impl Read, path: &Path) -> Result<PointCloud, Error> {
    let err = |e| Error::io(path, e);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(err)?;
    if &magic != MAGIC {
        return Err(Error::Format {
            what: "point cloud file",
            msg: format!("magic {:02x?} is not {:?}", magic, "PC3D"),
        });
    }
    let mut count_buf = [0u8; 4];
    r.read_exact(&mut count_buf).map_err(err)?;
    let count = u32::from_le_bytes(count_buf) as usize;
    let mut points = Vec::with_capacity(count.min(1 << 20));
    let mut coord = [0u8; 4];
    for _ in 0..count {
        let mut p = [0.0f32; 3];
        for c in &mut p {
            r.read_exact(&mut coord).map_err(err)?;
            *c = f32::from_le_bytes(coord);
        }
        points.push(p);
    }
    Ok(PointCloud::new(points))
}

pub fn save_cloud(cloud: &PointCloud, path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_cloud(&mut w, cloud, path)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_cloud(path: &Path) -> Result<PointCloud, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_cloud(&mut BufReader::new(file), path)
}
