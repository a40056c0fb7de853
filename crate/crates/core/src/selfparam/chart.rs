//! Local UV charts for single edge collapses.
//!
//! The pre-collapse chart flattens the triangle fan around an edge `(j, k)`
//! with least-squares conformal maps, pinning `j` to the origin and `k` to
//! `(|x_j - x_k|, 0)`. The post-collapse chart keeps the boundary exactly
//! where the pre-collapse chart put it and only solves for the one interior
//! vertex, so both charts cover the same planar polygon.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use thiserror::Error;

use crate::mesh::{signed_area_2d, triangle_quality_2d, Mesh, Vec3};

pub type Uv = Vector2<f64>;

/// Tolerance on the interior angle sum (radians).
pub const ANGLE_SUM_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartStage {
    PreCollapse,
    PostCollapse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartTriangle {
    /// Face id of the triangle in the mesh it came from.
    pub face: usize,
    /// Chart-local vertex indices, in the face's corner order.
    pub corners: [usize; 3],
}

/// A flattened triangle fan. Local vertices `0..interior` are interior
/// (`j, k` before a collapse, `i` after); the rest form the boundary ring.
#[derive(Debug, Clone, PartialEq)]
pub struct UVChart {
    pub stage: ChartStage,
    pub vertices: Vec<usize>,
    pub uv: Vec<Uv>,
    pub triangles: Vec<ChartTriangle>,
    pub interior: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("edge neighborhood is not a topological disk")]
    NotADisk,
    #[error("conformal flattening system is singular")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ChartDefect {
    #[error("chart triangle {triangle} has non-positive signed area {area}")]
    NonPositiveArea { triangle: usize, area: f64 },
    #[error("interior vertex {vertex} has angle sum {sum}, expected 2π")]
    AngleSum { vertex: usize, sum: f64 },
}

/// A fan triangle as `(face id, global corner vertices)`.
pub type FanFace = (usize, [usize; 3]);

impl UVChart {
    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.vertices.iter().position(|&v| v == global)
    }

    pub fn triangle_uv(&self, t: usize) -> [Uv; 3] {
        self.triangles[t].corners.map(|c| self.uv[c])
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_uv(t);
        signed_area_2d(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn quality(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_uv(t);
        triangle_quality_2d(&a, &b, &c)
    }

    pub fn triangle_of_face(&self, face: usize) -> Option<usize> {
        self.triangles.iter().position(|t| t.face == face)
    }

    /// Sum of the signed corner angles at local vertex `v`.
    pub fn angle_sum(&self, v: usize) -> f64 {
        let mut sum = 0.0;
        for t in &self.triangles {
            if let Some(c) = t.corners.iter().position(|&x| x == v) {
                let p = self.uv[v];
                let a = self.uv[t.corners[(c + 1) % 3]] - p;
                let b = self.uv[t.corners[(c + 2) % 3]] - p;
                sum += (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
            }
        }
        sum
    }

    /// Checks injectivity: positive orientation everywhere and a full turn
    /// around each interior vertex.
    pub fn check(&self) -> Result<(), ChartDefect> {
        for t in 0..self.triangles.len() {
            let area = self.signed_area(t);
            if !(area > 0.0) {
                return Err(ChartDefect::NonPositiveArea { triangle: t, area });
            }
        }
        for v in 0..self.interior {
            let sum = self.angle_sum(v);
            if !((sum - TAU).abs() <= ANGLE_SUM_TOL) {
                return Err(ChartDefect::AngleSum { vertex: self.vertices[v], sum });
            }
        }
        Ok(())
    }

    pub fn point(&self, t: usize, bary: &[f64; 3]) -> Uv {
        let [a, b, c] = self.triangle_uv(t);
        a * bary[0] + b * bary[1] + c * bary[2]
    }

    /// Barycentric coordinates of `p` in chart triangle `t` (possibly negative).
    pub fn barycentric(&self, t: usize, p: &Uv) -> [f64; 3] {
        let [a, b, c] = self.triangle_uv(t);
        let area = signed_area_2d(&a, &b, &c);
        [
            signed_area_2d(p, &b, &c) / area,
            signed_area_2d(&a, p, &c) / area,
            signed_area_2d(&a, &b, p) / area,
        ]
    }

    /// The triangle whose smallest barycentric coordinate for `p` is largest,
    /// with those coordinates.
    pub fn locate(&self, p: &Uv) -> (usize, [f64; 3]) {
        let mut best = (0, [f64::NAN; 3]);
        let mut best_min = f64::NEG_INFINITY;
        for t in 0..self.triangles.len() {
            let bary = self.barycentric(t, p);
            let m = bary[0].min(bary[1]).min(bary[2]);
            if m > best_min {
                best_min = m;
                best = (t, bary);
            }
        }
        best
    }
}

/// Two least-squares conformal residual rows for one triangle over
/// `(u_a, v_a, u_b, v_b, u_c, v_c)`, scaled by `1/sqrt(2A)`. A similarity
/// of the triangle's own planar layout has zero residual.
pub(crate) fn lscm_rows(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<[[f64; 6]; 2]> {
    let ab = b - a;
    let ac = c - a;
    let normal = ab.cross(&ac);
    let double_area = normal.norm();
    let len = ab.norm();
    if !(double_area > 0.0) || !(len > 0.0) {
        return None;
    }
    let e1 = ab / len;
    let e2 = (normal / double_area).cross(&e1);
    let z = [Uv::zeros(), Uv::new(len, 0.0), Uv::new(ac.dot(&e1), ac.dot(&e2))];
    let w = [z[2] - z[1], z[0] - z[2], z[1] - z[0]];
    let s = 1.0 / double_area.sqrt();
    let mut rows = [[0.0; 6]; 2];
    for i in 0..3 {
        rows[0][2 * i] = w[i].x * s;
        rows[0][2 * i + 1] = -w[i].y * s;
        rows[1][2 * i] = w[i].y * s;
        rows[1][2 * i + 1] = w[i].x * s;
    }
    Some(rows)
}

/// Least-squares conformal energy of a chart against 3D positions.
pub fn conformal_energy(chart: &UVChart, positions: impl Fn(usize) -> Vec3) -> f64 {
    let mut energy = 0.0;
    for t in &chart.triangles {
        let p = t.corners.map(|c| positions(chart.vertices[c]));
        let Some(rows) = lscm_rows(&p[0], &p[1], &p[2]) else { continue };
        for row in rows {
            let mut r = 0.0;
            for (i, &c) in t.corners.iter().enumerate() {
                r += row[2 * i] * chart.uv[c].x + row[2 * i + 1] * chart.uv[c].y;
            }
            energy += r * r;
        }
    }
    energy
}

/// Minimizes the conformal energy over the vertices whose `fixed` entry is
/// `None`.
fn solve_conformal(
    triangles: &[[usize; 3]],
    rows: &[[[f64; 6]; 2]],
    fixed: &[Option<Uv>],
) -> Result<Vec<Uv>, ChartError> {
    let mut free_index = vec![usize::MAX; fixed.len()];
    let mut n_free = 0;
    for (v, f) in fixed.iter().enumerate() {
        if f.is_none() {
            free_index[v] = n_free;
            n_free += 1;
        }
    }
    let dim = 2 * n_free;
    let mut normal = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for (tri, tri_rows) in triangles.iter().zip(rows) {
        for row in tri_rows {
            // split the row into free columns and a constant from fixed vertices
            let mut cols: [(usize, f64); 6] = [(usize::MAX, 0.0); 6];
            let mut constant = 0.0;
            for (i, &v) in tri.iter().enumerate() {
                for d in 0..2 {
                    let coeff = row[2 * i + d];
                    match fixed[v] {
                        Some(uv) => constant += coeff * uv[d],
                        None => cols[2 * i + d] = (2 * free_index[v] + d, coeff),
                    }
                }
            }
            for &(ci, cv) in &cols {
                if ci == usize::MAX {
                    continue;
                }
                rhs[ci] -= cv * constant;
                for &(cj, cw) in &cols {
                    if cj != usize::MAX {
                        normal[(ci, cj)] += cv * cw;
                    }
                }
            }
        }
    }
    let solution = if dim == 2 {
        let m = Matrix2::new(normal[(0, 0)], normal[(0, 1)], normal[(1, 0)], normal[(1, 1)]);
        let det = m.determinant();
        let scale = m.abs().max();
        if !(det.abs() > 1e-14 * scale * scale) {
            return Err(ChartError::Singular);
        }
        let x = m.try_inverse().ok_or(ChartError::Singular)? * Vector2::new(rhs[0], rhs[1]);
        DVector::from_column_slice(x.as_slice())
    } else {
        normal.cholesky().ok_or(ChartError::Singular)?.solve(&rhs)
    };
    if solution.iter().any(|x| !x.is_finite()) {
        return Err(ChartError::Singular);
    }
    Ok(fixed
        .iter()
        .enumerate()
        .map(|(v, f)| f.unwrap_or_else(|| Uv::new(solution[2 * free_index[v]], solution[2 * free_index[v] + 1])))
        .collect())
}

/// Verifies that the fan triangles form a disk whose boundary passes through
/// every vertex except the `interior` leading ones.
fn check_disk(local: &[[usize; 3]], n_vertices: usize, interior: usize) -> Result<(), ChartError> {
    let mut directed = std::collections::HashSet::new();
    for t in local {
        for c in 0..3 {
            if !directed.insert((t[c], t[(c + 1) % 3])) {
                return Err(ChartError::NotADisk);
            }
        }
    }
    let mut next = vec![usize::MAX; n_vertices];
    let mut boundary_edges = 0;
    for &(a, b) in &directed {
        if !directed.contains(&(b, a)) {
            if a < interior || b < interior || next[a] != usize::MAX {
                return Err(ChartError::NotADisk);
            }
            next[a] = b;
            boundary_edges += 1;
        }
    }
    if boundary_edges != n_vertices - interior {
        return Err(ChartError::NotADisk);
    }
    // one boundary loop through every ring vertex
    let mut v = interior;
    for step in 1..=boundary_edges {
        v = next[v];
        if v == usize::MAX || (v == interior && step != boundary_edges) {
            return Err(ChartError::NotADisk);
        }
    }
    if v != interior {
        return Err(ChartError::NotADisk);
    }
    Ok(())
}

/// Flattens the fan around edge `(j, k)` (every fan face touches `j` or `k`).
pub fn flatten_fan(
    fan: &[FanFace],
    positions: impl Fn(usize) -> Vec3,
    j: usize,
    k: usize,
) -> Result<UVChart, ChartError> {
    let mut vertices = vec![j, k];
    let mut ring: Vec<usize> = fan.iter().flat_map(|(_, f)| f.iter().copied()).filter(|&v| v != j && v != k).collect();
    ring.sort_unstable();
    ring.dedup();
    vertices.extend(ring);
    let local_of = |g: usize| vertices.iter().position(|&v| v == g).expect("fan vertex");
    let local: Vec<[usize; 3]> = fan.iter().map(|(_, f)| f.map(local_of)).collect();
    check_disk(&local, vertices.len(), 2)?;

    let rows = fan
        .iter()
        .map(|(_, f)| {
            let p = f.map(&positions);
            lscm_rows(&p[0], &p[1], &p[2]).ok_or(ChartError::Singular)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut fixed = vec![None; vertices.len()];
    fixed[0] = Some(Uv::zeros());
    fixed[1] = Some(Uv::new((positions(j) - positions(k)).norm(), 0.0));
    let uv = solve_conformal(&local, &rows, &fixed)?;
    Ok(UVChart {
        stage: ChartStage::PreCollapse,
        vertices,
        uv,
        triangles: fan.iter().zip(&local).map(|(&(face, _), &corners)| ChartTriangle { face, corners }).collect(),
        interior: 2,
    })
}

/// Pre-collapse chart of edge `(j, k)` on a static mesh.
pub fn flatten_one_ring(mesh: &Mesh, j: usize, k: usize) -> Result<UVChart, crate::selfparam::SelfParamError> {
    let hood = mesh.edge_neighborhood(j, k)?;
    let fan: Vec<FanFace> = hood.faces.iter().map(|&f| (f, mesh.faces()[f])).collect();
    Ok(flatten_fan(&fan, |v| mesh.position(v), j, k)?)
}

/// Post-collapse chart: boundary copied verbatim from `pre`, interior vertex
/// `i` placed at the minimizer of the conformal energy of `post_fan`.
pub fn reflatten_interior(
    pre: &UVChart,
    post_fan: &[FanFace],
    positions: impl Fn(usize) -> Vec3,
    i: usize,
) -> Result<UVChart, ChartError> {
    let mut vertices = Vec::with_capacity(pre.vertices.len() - 1);
    vertices.push(i);
    vertices.extend_from_slice(&pre.vertices[pre.interior..]);
    let mut fixed: Vec<Option<Uv>> = vec![None];
    fixed.extend(pre.uv[pre.interior..].iter().map(|&uv| Some(uv)));

    let mut local = Vec::with_capacity(post_fan.len());
    for (_, f) in post_fan {
        let mut corners = [0; 3];
        for (c, &g) in f.iter().enumerate() {
            corners[c] = vertices.iter().position(|&v| v == g).ok_or(ChartError::NotADisk)?;
        }
        local.push(corners);
    }
    check_disk(&local, vertices.len(), 1)?;
    let rows = post_fan
        .iter()
        .map(|(_, f)| {
            let p = f.map(&positions);
            lscm_rows(&p[0], &p[1], &p[2]).ok_or(ChartError::Singular)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let uv = solve_conformal(&local, &rows, &fixed)?;
    Ok(UVChart {
        stage: ChartStage::PostCollapse,
        vertices,
        uv,
        triangles: post_fan.iter().zip(&local).map(|(&(face, _), &corners)| ChartTriangle { face, corners }).collect(),
        interior: 1,
    })
}
