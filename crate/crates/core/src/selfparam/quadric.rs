use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector4};

use crate::mesh::{Mesh, Vec3};

/// Squared point-to-plane distance accumulator (Garland–Heckbert quadric).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadric(pub Matrix4<f64>);

/// Smallest-to-largest eigenvalue ratio below which the placement system is
/// treated as singular.
const SINGULAR_RATIO: f64 = 1e-8;

impl Default for Quadric {
    fn default() -> Self {
        Self(Matrix4::zeros())
    }
}

impl std::ops::Add for Quadric {
    type Output = Quadric;
    fn add(self, rhs: Quadric) -> Quadric {
        Quadric(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Quadric {
    fn add_assign(&mut self, rhs: Quadric) {
        self.0 += rhs.0;
    }
}

impl Quadric {
    /// `weight · (n·x + d)²` for the plane through `point` with unit normal `normal`.
    pub fn from_plane(normal: &Vec3, point: &Vec3, weight: f64) -> Self {
        let d = -normal.dot(point);
        let p = Vector4::new(normal.x, normal.y, normal.z, d);
        Self(p * p.transpose() * weight)
    }

    pub fn evaluate(&self, x: &Vec3) -> f64 {
        let h = Vector4::new(x.x, x.y, x.z, 1.0);
        (h.transpose() * self.0 * h)[0]
    }

    /// Minimizer of the quadric, or `None` when the 3×3 system is singular.
    pub fn optimal_position(&self) -> Option<Vec3> {
        let a: Matrix3<f64> = self.0.fixed_view::<3, 3>(0, 0).into_owned();
        let b = Vec3::new(self.0[(0, 3)], self.0[(1, 3)], self.0[(2, 3)]);
        let eig = SymmetricEigen::new(a);
        let max = eig.eigenvalues.amax();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min <= SINGULAR_RATIO * max {
            return None;
        }
        let inv = eig.eigenvectors * Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l)) * eig.eigenvectors.transpose();
        let x = -(inv * b);
        x.iter().all(|c| c.is_finite()).then_some(x)
    }

    /// Optimal placement for collapsing an edge `a`–`b`, falling back to the
    /// midpoint when the system is singular. Returns the position and its error.
    pub fn placement(&self, a: &Vec3, b: &Vec3) -> (Vec3, f64) {
        let p = self.optimal_position().unwrap_or_else(|| (a + b) * 0.5);
        (p, self.evaluate(&p).max(0.0))
    }
}

/// Per-vertex quadrics: the area-weighted sum of the planes of incident faces.
pub fn init_quadrics(mesh: &Mesh) -> Vec<Quadric> {
    let mut q = vec![Quadric::default(); mesh.num_vertices()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let n = mesh.face_normal(f);
        let area = mesh.face_area(f);
        let plane = Quadric::from_plane(&n, &mesh.position(face[0]), area);
        for &v in face {
            q[v] += plane;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::{cube, icosphere, torus};

    #[test]
    fn symmetric_and_psd() {
        for q in init_quadrics(&icosphere(2)) {
            assert!((q.0 - q.0.transpose()).amax() < 1e-15);
            let eig = SymmetricEigen::new(q.0);
            assert!(eig.eigenvalues.min() > -1e-9);
        }
    }

    #[test]
    fn planar_vertex_has_zero_in_plane_error() {
        // every incident plane of a flat patch vertex is the same plane
        let q = Quadric::from_plane(&Vec3::z(), &Vec3::zeros(), 2.0);
        assert_eq!(q.evaluate(&Vec3::new(3.0, -1.0, 0.0)), 0.0);
        assert!((q.evaluate(&Vec3::new(0.0, 0.0, 0.5)) - 0.5).abs() < 1e-15);
        assert!(q.optimal_position().is_none());
    }

    #[test]
    fn cube_corner_quadric() {
        // corner 0 = origin touches faces on x=0, y=0, z=0; each cube triangle
        // has area 1/2. Faces incident to vertex 0: two on z=0, two on y=0,
        // two on x=0 → the x=0 plane contributes weight 2 · 1/2 = 1.
        let m = cube();
        let q = init_quadrics(&m)[0];
        assert!(q.evaluate(&Vec3::zeros()).abs() < 1e-15);
        let incident_x: f64 = (0..m.num_faces())
            .filter(|&f| m.faces()[f].contains(&0) && m.face_normal(f).x.abs() > 0.5)
            .map(|f| m.face_area(f))
            .sum();
        assert!((incident_x - 1.0).abs() < 1e-15);
        let delta = 0.25;
        assert!((q.evaluate(&Vec3::new(delta, 0.0, 0.0)) - incident_x * delta * delta).abs() < 1e-15);
        // the three planes meet only at the corner
        assert!(q.optimal_position().unwrap().norm() < 1e-12);
    }

    #[test]
    fn placement_falls_back_to_midpoint() {
        let q = Quadric::from_plane(&Vec3::z(), &Vec3::zeros(), 1.0);
        let (p, err) = q.placement(&Vec3::new(0.0, 0.0, 0.0), &Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(p, Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(err, 0.0);
    }

    #[test]
    fn torus_quadrics_have_zero_error_at_vertices() {
        let m = torus(10, 6, 2.0, 0.5);
        for (v, q) in init_quadrics(&m).iter().enumerate() {
            assert!(q.evaluate(&m.position(v)).abs() < 1e-12);
        }
    }
}
