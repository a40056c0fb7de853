//! Exact point-to-triangle and point-to-mesh queries.

use crate::mesh::{BarycentricPoint, Mesh, Vec3};

/// Barycentric weights of the point of triangle `abc` closest to `p`.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let sum = va + vb + vc;
    if !(sum.abs() > 0.0) || !sum.is_finite() {
        return degenerate(p, a, b, c);
    }
    let v = vb / sum;
    let w = vc / sum;
    [1.0 - v - w, v, w]
}

// Zero-area triangle: best of the three edges.
fn degenerate(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let seg = |x: &Vec3, y: &Vec3| {
        let d = y - x;
        let len2 = d.norm_squared();
        let t = if len2 > 0.0 { ((p - x).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (t, (x + d * t - p).norm_squared())
    };
    let (t0, e0) = seg(a, b);
    let (t1, e1) = seg(b, c);
    let (t2, e2) = seg(c, a);
    if e0 <= e1 && e0 <= e2 {
        [1.0 - t0, t0, 0.0]
    } else if e1 <= e2 {
        [0.0, 1.0 - t1, t1]
    } else {
        [t2, 0.0, 1.0 - t2]
    }
}

/// Squared distance from `p` to face `f` and the closest point on it.
pub fn point_face(p: &Vec3, mesh: &Mesh, f: usize) -> (f64, BarycentricPoint) {
    let [a, b, c] = mesh.faces()[f];
    let v = mesh.vertices();
    let w = closest_point_on_triangle(p, &v[a], &v[b], &v[c]);
    let q = BarycentricPoint { face: f, coords: w };
    ((q.position(mesh) - p).norm_squared(), q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self { min: Vec3::repeat(f64::INFINITY), max: Vec3::repeat(f64::NEG_INFINITY) }
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&mut self, o: &Aabb) {
        self.min = self.min.inf(&o.min);
        self.max = self.max.sup(&o.max);
    }

    /// Squared distance from `p` to the box; never exceeds the squared
    /// distance to anything inside it.
    pub fn dist2(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for i in 0..3 {
            let e = (self.min[i] - p[i]).max(p[i] - self.max[i]).max(0.0);
            d += e * e;
        }
        d
    }
}

pub fn face_boxes(mesh: &Mesh) -> Vec<Aabb> {
    mesh.faces()
        .iter()
        .map(|f| {
            let mut b = Aabb::empty();
            for &v in f {
                b.grow(&mesh.vertices()[v]);
            }
            b
        })
        .collect()
}

/// Brute-force closest point with box pruning. Ties go to the lowest face.
pub fn point_to_mesh_distance(p: &Vec3, mesh: &Mesh) -> (f64, BarycentricPoint) {
    let boxes = face_boxes(mesh);
    closest_brute(p, mesh, &boxes)
}

pub(crate) fn closest_brute(p: &Vec3, mesh: &Mesh, boxes: &[Aabb]) -> (f64, BarycentricPoint) {
    let mut best = (f64::INFINITY, BarycentricPoint::corner(0, 0));
    for (f, b) in boxes.iter().enumerate() {
        if b.dist2(p) >= best.0 {
            continue;
        }
        let (d2, q) = point_face(p, mesh, f);
        if d2 < best.0 {
            best = (d2, q);
        }
    }
    (best.0.sqrt(), best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::{icosphere, octahedron};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // dense lattice over the triangle as an independent oracle
    fn sampled_min(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, n: usize) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n - i {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                let q = a * (1.0 - u - v) + b * u + c * v;
                best = best.min((q - p).norm());
            }
        }
        best
    }

    #[test]
    fn matches_lattice_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut r = || Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for _ in 0..200 {
            let (a, b, c, p) = (r(), r(), r(), r() * 2.0);
            let w = closest_point_on_triangle(&p, &a, &b, &c);
            assert!(w.iter().all(|&x| x >= -1e-12) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let d = (a * w[0] + b * w[1] + c * w[2] - p).norm();
            let oracle = sampled_min(&p, &a, &b, &c, 300);
            assert!(d <= oracle + 1e-12, "{d} > {oracle}");
            assert!(oracle - d < 1e-2, "{d} vs {oracle}");
        }
    }

    #[test]
    fn degenerate_triangle_falls_back_to_edges() {
        let (a, b, c) = (Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0));
        let p = Vec3::new(0.5, 1.0, 0.0);
        let w = closest_point_on_triangle(&p, &a, &b, &c);
        let q = a * w[0] + b * w[1] + c * w[2];
        assert!((q - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn vertex_has_zero_distance() {
        let m = icosphere(1);
        for v in 0..m.num_vertices() {
            let (d, q) = point_to_mesh_distance(&m.position(v), &m);
            assert_eq!(d, 0.0);
            assert_eq!(q.position(&m), m.position(v));
        }
    }

    #[test]
    fn octahedron_apex_above() {
        // Every face's plane is 1/√3 from (0,0,2), but the projections fall
        // outside the faces; the closest point is the apex (0,0,1).
        let m = octahedron();
        let p = Vec3::new(0.0, 0.0, 2.0);
        let (d, q) = point_to_mesh_distance(&p, &m);
        assert!((d - 1.0).abs() < 1e-12);
        assert!((q.position(&m) - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        let oracle = (0..m.num_faces())
            .map(|f| {
                let [a, b, c] = m.faces()[f];
                sampled_min(&p, &m.position(a), &m.position(b), &m.position(c), 200)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((d - oracle).abs() < 1e-12);
        // directly above the centroid of the top face: plane distance
        let t = Vec3::new(1.0, 1.0, 1.0) / 3.0;
        let p = t + Vec3::new(1.0, 1.0, 1.0).normalize() * 0.25;
        assert!((point_to_mesh_distance(&p, &m).0 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rigid_invariant() {
        let m = icosphere(2);
        let r = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let t = Vec3::new(0.5, -2.0, 7.0);
        let moved = m.map_positions(|p| r * p + t);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (d0, _) = point_to_mesh_distance(&p, &m);
            let (d1, _) = point_to_mesh_distance(&(r * p + t), &moved);
            assert!((d0 - d1).abs() < 1e-12);
        }
    }
}
