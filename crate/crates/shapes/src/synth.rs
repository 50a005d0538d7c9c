//! Synthetic shape classes: analytic surfaces, jitter, normalization.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashSet;
use std::f64::consts::PI;

use crate::cloud::{normalize_unit_cube, PointCloud};
use crate::dataset::LabeledExample;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Sphere,
    Cube,
    Cylinder,
    Cone,
    Torus,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Sphere,
        ShapeKind::Cube,
        ShapeKind::Cylinder,
        ShapeKind::Cone,
        ShapeKind::Torus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::Cube => "cube",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Cone => "cone",
            ShapeKind::Torus => "torus",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Class label: position in `ALL`.
    pub fn label(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).unwrap()
    }
}

/// Samples `n` distinct points on the surface of the given shape, jitters
/// each coordinate with N(0, noise_sd), then normalizes into the unit cube.
/// Deterministic in (kind, n, noise_sd, seed).
pub fn synth_shape(
    kind: ShapeKind,
    n: usize,
    noise_sd: f32,
    seed: u64,
) -> Result<LabeledExample, Error> {
    if n < 8 {
        return Err(Error::Invalid(format!("need at least 8 points, asked for {n}")));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::Invalid(format!("noise sd must be >= 0, got {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f64, f64::from(noise_sd))
        .map_err(|e| Error::Invalid(format!("bad noise sd: {e}")))?;

    let mut seen = HashSet::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let budget = 1000 + 100 * n;
    let mut draws = 0usize;
    while points.len() < n {
        if draws >= budget {
            return Err(Error::Invalid(format!(
                "could not draw {n} distinct shape points in {budget} attempts"
            )));
        }
        draws += 1;
        let mut p = surface_point(kind, &mut rng);
        if noise_sd > 0.0 {
            for c in &mut p {
                *c += noise.sample(&mut rng);
            }
        }
        let q = p.map(|c| c as f32);
        if seen.insert([q[0].to_bits(), q[1].to_bits(), q[2].to_bits()]) {
            points.push(q);
        }
    }

    let cloud = normalize_unit_cube(&PointCloud::new(points));
    if cloud.len() < n {
        // normalization can collide points in f32; treat like duplicate saturation
        return Err(Error::Invalid(format!(
            "normalization collapsed {} points to {}",
            n,
            cloud.len()
        )));
    }
    Ok(LabeledExample {
        cloud,
        label: kind.label(),
        source: format!("synth:{}:{}", kind.name(), seed),
    })
}

fn surface_point(kind: ShapeKind, rng: &mut ChaCha8Rng) -> [f64; 3] {
    match kind {
        ShapeKind::Sphere => sphere(rng),
        ShapeKind::Cube => cube(rng),
        ShapeKind::Cylinder => cylinder(rng),
        ShapeKind::Cone => cone(rng),
        ShapeKind::Torus => torus(rng),
    }
}

fn sphere(rng: &mut ChaCha8Rng) -> [f64; 3] {
    // isotropic direction from Gaussian deviates
    let norm = Normal::new(0.0f64, 1.0).unwrap();
    loop {
        let v = [norm.sample(rng), norm.sample(rng), norm.sample(rng)];
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if len > 1e-9 {
            return [0.5 * v[0] / len, 0.5 * v[1] / len, 0.5 * v[2] / len];
        }
    }
}

fn cube(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let face = rng.gen_range(0..6usize);
    let u = rng.gen_range(-0.5..=0.5);
    let v = rng.gen_range(-0.5..=0.5);
    let s = if face % 2 == 0 { -0.5 } else { 0.5 };
    match face / 2 {
        0 => [s, u, v],
        1 => [u, s, v],
        _ => [u, v, s],
    }
}

fn disk(rng: &mut ChaCha8Rng, radius: f64) -> (f64, f64) {
    let r = radius * rng.gen_range(0.0..=1.0f64).sqrt();
    let t = rng.gen_range(0.0..2.0 * PI);
    (r * t.cos(), r * t.sin())
}

fn cylinder(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let (r, h) = (0.5f64, 1.0f64);
    let lateral = 2.0 * PI * r * h;
    let caps = 2.0 * PI * r * r;
    if rng.gen_range(0.0..lateral + caps) < lateral {
        let t = rng.gen_range(0.0..2.0 * PI);
        [r * t.cos(), r * t.sin(), rng.gen_range(-0.5..=0.5)]
    } else {
        let (x, y) = disk(rng, r);
        let z = if rng.gen::<bool>() { 0.5 } else { -0.5 };
        [x, y, z]
    }
}

fn cone(rng: &mut ChaCha8Rng) -> [f64; 3] {
    // apex up at z=0.5, base disk at z=-0.5
    let (r, h) = (0.5f64, 1.0f64);
    let slant = (r * r + h * h).sqrt();
    let lateral = PI * r * slant;
    let base = PI * r * r;
    if rng.gen_range(0.0..lateral + base) < lateral {
        // area grows linearly with distance from apex
        let s = rng.gen_range(0.0..=1.0f64).sqrt();
        let t = rng.gen_range(0.0..2.0 * PI);
        [s * r * t.cos(), s * r * t.sin(), 0.5 - s * h]
    } else {
        let (x, y) = disk(rng, r);
        [x, y, -0.5]
    }
}

fn torus(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let (major, minor) = (0.35f64, 0.15f64);
    let u = rng.gen_range(0.0..2.0 * PI);
    // rejection keeps the sample area-uniform despite the varying tube radius
    let v = loop {
        let v = rng.gen_range(0.0..2.0 * PI);
        let accept = (major + minor * v.cos()) / (major + minor);
        if rng.gen_range(0.0..1.0) < accept {
            break v;
        }
    };
    let ring = major + minor * v.cos();
    [ring * u.cos(), ring * u.sin(), minor * v.sin()]
}
