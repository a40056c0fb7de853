use nalgebra::Matrix3;

use super::NeuralError;
use crate::mesh::{triangle_normal, Mesh, Vec3};

/// Below this length the averaged edge normal is treated as a fold.
const FOLD_EPS: f64 = 1e-8;

/// A directed edge with its two incident triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfFlap {
    pub halfedge: usize,
    /// Source, destination, left opposite, right opposite.
    pub vertices: [usize; 4],
    /// Rows are the local x, y, z axes; `frame * v` maps a global vector
    /// into flap coordinates.
    pub frame: Matrix3<f64>,
}

/// Local frame from the flap's source, destination and the two opposite
/// vertices (left triangle `s d l`, right triangle `d s r`).
pub fn frame_from_points(s: &Vec3, d: &Vec3, l: &Vec3, r: &Vec3, halfedge: usize) -> Result<Matrix3<f64>, NeuralError> {
    let e = d - s;
    let len = e.norm();
    if !(len > 0.0) || !len.is_finite() {
        return Err(NeuralError::DegenerateEdge(halfedge));
    }
    let x = e / len;
    let left = triangle_normal(s, d, l);
    let avg = left + triangle_normal(d, s, r);
    let z = if avg.norm() > FOLD_EPS { avg } else { left };
    let y = z.cross(&x);
    let ylen = y.norm();
    if !(ylen > 0.0) {
        return Err(NeuralError::DegenerateEdge(halfedge));
    }
    let y = y / ylen;
    let z = x.cross(&y);
    Ok(Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]))
}

pub fn half_flap_frame(mesh: &Mesh, h: usize) -> Result<HalfFlap, NeuralError> {
    let vertices = [mesh.source(h), mesh.dest(h), mesh.opposite(h), mesh.opposite(mesh.twin(h))];
    let p = vertices.map(|v| mesh.position(v));
    let frame = frame_from_points(&p[0], &p[1], &p[2], &p[3], h)?;
    Ok(HalfFlap { halfedge: h, vertices, frame })
}
