//! Area-uniform surface sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use crate::cloud::PointCloud;
use crate::mesh::Mesh;
use crate::Error;

/// Draws `n` distinct points uniformly (by area) from the mesh surface.
/// Deterministic for a given (mesh, n, seed). Duplicate draws are redrawn;
/// a surface that cannot yield enough distinct points errors out rather
/// than looping forever.
pub fn sample_points(mesh: &Mesh, n: usize, seed: u64) -> Result<PointCloud, Error> {
    if mesh.triangles.is_empty() {
        return Err(Error::Invalid("mesh has no triangles to sample".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0f64;
    for &t in &mesh.triangles {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::Invalid("mesh has zero total area".into()));
    }
    if n == 0 {
        return Ok(PointCloud::new(Vec::new()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let budget = 1000 + 100 * n;
    let mut draws = 0usize;
    while points.len() < n {
        if draws >= budget {
            return Err(Error::Invalid(format!(
                "could not draw {n} distinct surface points in {budget} attempts"
            )));
        }
        draws += 1;
        let p = draw_one(mesh, &cumulative, total, &mut rng);
        if seen.insert([p[0].to_bits(), p[1].to_bits(), p[2].to_bits()]) {
            points.push(p);
        }
    }
    Ok(PointCloud::new(points))
}

fn draw_one(mesh: &Mesh, cumulative: &[f64], total: f64, rng: &mut ChaCha8Rng) -> [f32; 3] {
    let target = rng.gen_range(0.0..total);
    let ti = cumulative.partition_point(|&c| c <= target);
    let tri = mesh.triangles[ti.min(mesh.triangles.len() - 1)];
    let [a, b, c] = tri.map(|i| mesh.vertices[i].map(f64::from));

    // square-root warp makes the barycentric draw area-uniform
    let r1: f64 = rng.gen();
    let r2: f64 = rng.gen();
    let s = r1.sqrt();
    let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
    let mut p = [0.0f32; 3];
    for k in 0..3 {
        p[k] = (wa * a[k] + wb * b[k] + wc * c[k]) as f32;
    }
    p
}
