use nalgebra::Vector2;

use super::{Mesh, Vec3};

/// Unit normal of triangle `abc`, or zero for a degenerate triangle.
pub fn triangle_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    if len > 0.0 {
        n / len
    } else {
        Vec3::zeros()
    }
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Shape quality `4√3·A / (l_ab² + l_bc² + l_ca²)`: 1 for equilateral, 0 for
/// degenerate triangles.
pub fn triangle_quality(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let denom = (b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared();
    quality_from(triangle_area(a, b, c), denom)
}

/// [`triangle_quality`] for a 2D triangle, using its signed area (inverted
/// triangles score 0).
pub fn triangle_quality_2d(a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>) -> f64 {
    let denom = (b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared();
    quality_from(signed_area_2d(a, b, c), denom)
}

fn quality_from(area: f64, denom: f64) -> f64 {
    if !(denom > 0.0) || !(area > 0.0) {
        return 0.0;
    }
    (4.0 * 3f64.sqrt() * area / denom).clamp(0.0, 1.0)
}

pub fn signed_area_2d(a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
}

pub fn face_normal(mesh: &Mesh, f: usize) -> Vec3 {
    mesh.face_normal(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;

    #[test]
    fn quality_reference_values() {
        let eq = triangle_quality(
            &Vec3::new(0.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
        );
        assert!((eq - 1.0).abs() < 1e-15);
        let collinear = triangle_quality(&Vec3::zeros(), &Vec3::x(), &(Vec3::x() * 2.0));
        assert_eq!(collinear, 0.0);
        // right isosceles, legs 1: 4√3·0.5 / (1 + 1 + 2)
        let right = triangle_quality(&Vec3::zeros(), &Vec3::x(), &Vec3::y());
        assert!((right - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((right - 0.8660254037844386).abs() < 1e-15);
    }

    #[test]
    fn quality_2d_rejects_inverted() {
        let a = Vector2::new(0.0, 0.0);
        let b = Vector2::new(1.0, 0.0);
        let c = Vector2::new(0.0, 1.0);
        assert!((triangle_quality_2d(&a, &b, &c) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(triangle_quality_2d(&a, &c, &b), 0.0);
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn quality_is_similarity_invariant(a in vec3(), b in vec3(), c in vec3(),
                                           axis in vec3(), angle in -3.0..3.0f64,
                                           s in 0.1..10.0f64, t in vec3()) {
            prop_assume!(axis.norm() > 1e-3);
            let r = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
            let f = |p: &Vec3| r * p * s + t;
            let q0 = triangle_quality(&a, &b, &c);
            let q1 = triangle_quality(&f(&a), &f(&b), &f(&c));
            prop_assert!((q0 - q1).abs() < 1e-12, "{q0} vs {q1}");
        }
    }
}
