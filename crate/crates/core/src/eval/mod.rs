//! Metro-style surface distances and scheme comparisons.
//!
//! Each direction samples the source surface (area-proportional,
//! stratified per face, plus every vertex) and measures exact distances to
//! the other surface. Sampling depends only on the sampled mesh and the
//! seed, so swapping the arguments swaps the directions exactly.

mod bvh;
mod closest;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use bvh::FaceBvh;
pub use closest::{closest_point_on_triangle, point_to_mesh_distance, Aabb};

use crate::classic::{subdivide, Scheme};
use crate::mesh::{Mesh, Vec3};
use crate::neural::{neural_subdivide, NetworkBundle, NeuralError};

pub const DEFAULT_SAMPLES: usize = 100_000;

/// Distances below this fraction of the target's diagonal are roundoff from
/// re-evaluating a sample through barycentric weights and count as zero.
pub const ZERO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Directional {
    /// Maximum over surface samples and vertices.
    pub hausdorff: f64,
    /// Mean over surface samples.
    pub mean: f64,
    pub samples: usize,
    pub vertices: usize,
}

/// Distances in model units; `scaled` converts to thousandths of the
/// reference diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceReport {
    pub hausdorff: f64,
    pub mean_distance: f64,
    pub a_to_b: Directional,
    pub b_to_a: Directional,
    /// Bounding-box diagonal of `b`.
    pub reference_diagonal: f64,
}

impl DistanceReport {
    /// `(hausdorff, mean)` in thousandths of the reference diagonal.
    pub fn scaled(&self) -> (f64, f64) {
        let k = 1000.0 / self.reference_diagonal;
        (self.hausdorff * k, self.mean_distance * k)
    }
}

/// Area-proportional sample points on `mesh`. Face `f` receives
/// `round(n·A₀..f / A) − round(n·A₀..f−1 / A)` uniform points.
pub fn sample_surface(mesh: &Mesh, n: usize, seed: u64) -> Vec<Vec3> {
    let areas: Vec<f64> = (0..mesh.num_faces()).map(|f| mesh.face_area(f)).collect();
    let total: f64 = areas.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    if !(total > 0.0) {
        return out;
    }
    let mut cum = 0.0;
    let mut taken = 0usize;
    for (f, a) in areas.iter().enumerate() {
        cum += a;
        let upto = ((n as f64) * cum / total).round().min(n as f64) as usize;
        let [i, j, k] = mesh.faces()[f];
        let (pa, pb, pc) = (mesh.position(i), mesh.position(j), mesh.position(k));
        for _ in taken..upto {
            let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
            let s = r1.sqrt();
            out.push(pa * (1.0 - s) + pb * (s * (1.0 - r2)) + pc * (s * r2));
        }
        taken = taken.max(upto);
    }
    out
}

fn directional(from: &Mesh, to: &FaceBvh, samples: usize, seed: u64) -> Directional {
    let pts = sample_surface(from, samples, seed);
    let floor = ZERO_FLOOR * to.mesh().bounding_box_diagonal();
    let dist = |p: &Vec3| {
        let d = to.closest(p).0;
        if d <= floor {
            0.0
        } else {
            d
        }
    };
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for p in &pts {
        let d = dist(p);
        sum += d;
        max = max.max(d);
    }
    for p in from.vertices() {
        max = max.max(dist(p));
    }
    let mean = if pts.is_empty() { 0.0 } else { sum / pts.len() as f64 };
    Directional { hausdorff: max, mean, samples: pts.len(), vertices: from.num_vertices() }
}

/// Symmetric Hausdorff (max of the directions) and mean distance (mean of
/// the directional means) between `a` and the reference `b`.
pub fn surface_distance(a: &Mesh, b: &Mesh, samples: usize, seed: u64) -> DistanceReport {
    let (ba, bb) = (FaceBvh::new(a), FaceBvh::new(b));
    let a_to_b = directional(a, &bb, samples, seed);
    let b_to_a = directional(b, &ba, samples, seed);
    DistanceReport {
        hausdorff: a_to_b.hausdorff.max(b_to_a.hausdorff),
        mean_distance: 0.5 * (a_to_b.mean + b_to_a.mean),
        a_to_b,
        b_to_a,
        reference_diagonal: b.bounding_box_diagonal(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeRow {
    pub scheme: String,
    pub report: DistanceReport,
}

/// Subdivides `coarse` with Loop, butterfly and (when given) the bundle, and
/// measures each result against `reference`.
pub fn compare_schemes(
    coarse: &Mesh,
    reference: &Mesh,
    bundle: Option<&NetworkBundle>,
    levels: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<SchemeRow>, NeuralError> {
    let mut rows = Vec::new();
    for scheme in [Scheme::Loop, Scheme::Butterfly] {
        let m = subdivide(coarse, scheme, levels);
        rows.push(SchemeRow { scheme: scheme.to_string(), report: surface_distance(&m, reference, samples, seed) });
    }
    if let Some(b) = bundle {
        let m = match neural_subdivide(coarse, b, levels)?.pop() {
            Some(m) => m,
            None => coarse.clone(),
        };
        rows.push(SchemeRow { scheme: "neural".into(), report: surface_distance(&m, reference, samples, seed) });
    }
    Ok(rows)
}

/// Aligned table of Hausdorff and mean distance per scheme, in thousandths
/// of the reference diagonal.
pub fn format_table(rows: &[SchemeRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:>12} {:>12}", "scheme", "hausdorff", "mean");
    for r in rows {
        let (h, m) = r.report.scaled();
        let _ = writeln!(s, "{:<10} {:>12.4} {:>12.4}", r.scheme, h, m);
    }
    s.push_str("(units: 1e-3 of reference bounding-box diagonal)\n");
    s
}

/// Pointwise distance between two vertex lists of equal length.
pub fn mean_vertex_error(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).sum::<f64>() / a.len().max(1) as f64
}
