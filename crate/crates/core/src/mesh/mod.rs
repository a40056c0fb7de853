//! Indexed triangle meshes with half-edge adjacency.
//!
//! A [`Mesh`] is immutable once built. Half-edges are implicit: half-edge
//! `3 * f + c` runs from corner `c` of face `f` to corner `(c + 1) % 3`, so
//! `next`/`prev` are arithmetic and only the twin and per-vertex outgoing
//! tables are stored. Construction rejects anything that is not a closed,
//! orientable 2-manifold.

mod geometry;
mod normalize;
mod obj;
pub mod shapes;
mod subdivide;

use std::collections::HashMap;

use nalgebra::Vector3;

pub use crate::error::{MeshError, Result};
pub use geometry::{
    face_normal, signed_area_2d, triangle_area, triangle_normal, triangle_quality,
    triangle_quality_2d,
};
pub use normalize::{normalize_unit_box, Similarity};
pub use obj::{load_obj, parse_obj, save_obj, write_obj};
pub use subdivide::{midpoint_topology_subdivide, midpoint_topology_subdivide_levels};

pub type Vec3 = Vector3<f64>;

/// Tolerance used when clamping barycentric weights.
pub const EPS_BARY: f64 = 1e-10;

/// A point on a mesh surface: a face plus convex weights over its corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricPoint {
    pub face: usize,
    pub coords: [f64; 3],
}

impl BarycentricPoint {
    /// Clamps negative weights to zero and renormalizes so the weights sum to one.
    pub fn new(face: usize, coords: [f64; 3]) -> Self {
        let mut c = coords.map(|w| if w > 0.0 { w } else { 0.0 });
        let sum = c[0] + c[1] + c[2];
        if sum > 0.0 {
            c = c.map(|w| w / sum);
        } else {
            c = [1.0 / 3.0; 3];
        }
        Self { face, coords: c }
    }

    /// A point sitting exactly on corner `corner` of `face`.
    pub fn corner(face: usize, corner: usize) -> Self {
        let mut coords = [0.0; 3];
        coords[corner] = 1.0;
        Self { face, coords }
    }

    pub fn is_valid(&self) -> bool {
        let sum: f64 = self.coords.iter().sum();
        self.coords.iter().all(|w| w.is_finite() && *w >= -EPS_BARY) && (sum - 1.0).abs() <= EPS_BARY
    }

    /// The 3D position of this point on `mesh`.
    pub fn position(&self, mesh: &Mesh) -> Vec3 {
        let [a, b, c] = mesh.faces[self.face];
        mesh.vertices[a] * self.coords[0]
            + mesh.vertices[b] * self.coords[1]
            + mesh.vertices[c] * self.coords[2]
    }
}

/// The vertices and faces around an edge `(j, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeNeighborhood {
    /// Union of the two 1-rings without `j` and `k`, sorted ascending.
    pub vertices: Vec<usize>,
    /// All faces incident to `j` or `k`, sorted ascending.
    pub faces: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    twin: Vec<usize>,
    vertex_out: Vec<usize>,
    edges: Vec<[usize; 2]>,
    halfedge_edge: Vec<usize>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.faces == other.faces
    }
}

impl Mesh {
    /// Builds a mesh and its adjacency, validating that it is a closed,
    /// orientable manifold with no unreferenced vertices.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = vertices.len();
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange { face: f, vertex: v, count: nv });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[2] == face[0] {
                return Err(MeshError::DegenerateFace { face: f });
            }
        }

        let nh = faces.len() * 3;
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(nh);
        for (f, face) in faces.iter().enumerate() {
            for c in 0..3 {
                let (a, b) = (face[c], face[(c + 1) % 3]);
                if directed.insert((a, b), 3 * f + c).is_some() {
                    return Err(MeshError::NonManifoldEdge { a: a.min(b), b: a.max(b) });
                }
            }
        }

        let mut twin = vec![usize::MAX; nh];
        let mut vertex_out = vec![usize::MAX; nv];
        let mut out_count = vec![0usize; nv];
        for (f, face) in faces.iter().enumerate() {
            for c in 0..3 {
                let (a, b) = (face[c], face[(c + 1) % 3]);
                let h = 3 * f + c;
                match directed.get(&(b, a)) {
                    Some(&t) => twin[h] = t,
                    None => return Err(MeshError::BoundaryEdge { a: a.min(b), b: a.max(b) }),
                }
                if vertex_out[a] == usize::MAX {
                    vertex_out[a] = h;
                }
                out_count[a] += 1;
            }
        }
        if let Some(v) = vertex_out.iter().position(|&h| h == usize::MAX) {
            return Err(MeshError::UnreferencedVertex(v));
        }

        let mut edges: Vec<[usize; 2]> = directed
            .keys()
            .filter(|(a, b)| a < b)
            .map(|&(a, b)| [a, b])
            .collect();
        edges.sort_unstable();
        let mut halfedge_edge = vec![0usize; nh];
        for (e, &[a, b]) in edges.iter().enumerate() {
            halfedge_edge[directed[&(a, b)]] = e;
            halfedge_edge[directed[&(b, a)]] = e;
        }

        let mesh = Self { vertices, faces, twin, vertex_out, edges, halfedge_edge };
        for v in 0..nv {
            let start = mesh.vertex_out[v];
            let mut h = start;
            let mut count = 0;
            loop {
                count += 1;
                h = mesh.rotate_ccw(h);
                if h == start || count > out_count[v] {
                    break;
                }
            }
            if count != out_count[v] {
                return Err(MeshError::NonManifoldVertex(v));
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_halfedges(&self) -> usize {
        self.twin.len()
    }

    /// Undirected edges `[a, b]` with `a < b`, sorted lexicographically.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Same connectivity, new positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Self {
        assert_eq!(vertices.len(), self.vertices.len(), "vertex count must not change");
        Self {
            vertices,
            faces: self.faces.clone(),
            twin: self.twin.clone(),
            vertex_out: self.vertex_out.clone(),
            edges: self.edges.clone(),
            halfedge_edge: self.halfedge_edge.clone(),
        }
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    // --- half-edge navigation -------------------------------------------

    #[inline]
    pub fn source(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }

    #[inline]
    pub fn dest(&self, h: usize) -> usize {
        self.faces[h / 3][(h + 1) % 3]
    }

    /// The corner of `h`'s face that is not on `h`.
    #[inline]
    pub fn opposite(&self, h: usize) -> usize {
        self.faces[h / 3][(h + 2) % 3]
    }

    #[inline]
    pub fn twin(&self, h: usize) -> usize {
        self.twin[h]
    }

    #[inline]
    pub fn next(&self, h: usize) -> usize {
        3 * (h / 3) + (h + 1) % 3
    }

    #[inline]
    pub fn prev(&self, h: usize) -> usize {
        3 * (h / 3) + (h + 2) % 3
    }

    #[inline]
    pub fn face_of(&self, h: usize) -> usize {
        h / 3
    }

    #[inline]
    pub fn edge_of(&self, h: usize) -> usize {
        self.halfedge_edge[h]
    }

    /// Next outgoing half-edge counter-clockwise around the source of `h`.
    #[inline]
    pub fn rotate_ccw(&self, h: usize) -> usize {
        self.twin[self.prev(h)]
    }

    /// Outgoing half-edges of `v` in counter-clockwise order, starting with
    /// the one pointing at the lowest-index neighbor.
    pub fn outgoing(&self, v: usize) -> Vec<usize> {
        let start = self.vertex_out[v];
        let mut out = Vec::with_capacity(8);
        let mut h = start;
        loop {
            out.push(h);
            h = self.rotate_ccw(h);
            if h == start {
                break;
            }
        }
        let first = (0..out.len()).min_by_key(|&i| self.dest(out[i])).unwrap_or(0);
        out.rotate_left(first);
        out
    }

    pub fn valence(&self, v: usize) -> usize {
        let start = self.vertex_out[v];
        let mut h = self.rotate_ccw(start);
        let mut n = 1;
        while h != start {
            n += 1;
            h = self.rotate_ccw(h);
        }
        n
    }

    /// 1-ring neighbors of `v` in counter-clockwise order starting from the
    /// lowest-index neighbor.
    pub fn one_ring(&self, v: usize) -> Vec<usize> {
        self.outgoing(v).into_iter().map(|h| self.dest(h)).collect()
    }

    /// Faces incident to `v`, in the same rotational order as [`Mesh::outgoing`].
    pub fn vertex_faces(&self, v: usize) -> Vec<usize> {
        self.outgoing(v).into_iter().map(|h| h / 3).collect()
    }

    pub fn find_halfedge(&self, a: usize, b: usize) -> Option<usize> {
        if a >= self.vertices.len() {
            return None;
        }
        let start = self.vertex_out[a];
        let mut h = start;
        loop {
            if self.dest(h) == b {
                return Some(h);
            }
            h = self.rotate_ccw(h);
            if h == start {
                return None;
            }
        }
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.find_halfedge(a, b).is_some()
    }

    /// Index of undirected edge `(a, b)` in [`Mesh::edges`].
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.find_halfedge(a, b).map(|h| self.halfedge_edge[h])
    }

    pub fn edge_neighborhood(&self, j: usize, k: usize) -> Result<EdgeNeighborhood> {
        if !self.is_edge(j, k) {
            return Err(MeshError::NotAnEdge(j, k));
        }
        let mut vertices: Vec<usize> = self
            .one_ring(j)
            .into_iter()
            .chain(self.one_ring(k))
            .filter(|&v| v != j && v != k)
            .collect();
        vertices.sort_unstable();
        vertices.dedup();
        let mut faces: Vec<usize> = self.vertex_faces(j).into_iter().chain(self.vertex_faces(k)).collect();
        faces.sort_unstable();
        faces.dedup();
        Ok(EdgeNeighborhood { vertices, faces })
    }

    /// Link condition for collapsing `(j, k)`: the 1-rings share exactly two
    /// vertices and those two are not themselves joined by an edge.
    pub fn check_link_condition(&self, j: usize, k: usize) -> Result<bool> {
        if !self.is_edge(j, k) {
            return Err(MeshError::NotAnEdge(j, k));
        }
        let ring_k = self.one_ring(k);
        let common: Vec<usize> = self.one_ring(j).into_iter().filter(|v| ring_k.contains(v)).collect();
        Ok(common.len() == 2 && !self.is_edge(common[0], common[1]))
    }

    /// Uniform-weight differential coordinates: each position minus the mean
    /// of its 1-ring.
    pub fn differential_coordinates(&self) -> Vec<Vec3> {
        (0..self.num_vertices())
            .map(|v| {
                let ring = self.one_ring(v);
                let mut mean = Vec3::zeros();
                for &u in &ring {
                    mean += self.vertices[u];
                }
                self.vertices[v] - mean / ring.len() as f64
            })
            .collect()
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        triangle_normal(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.num_faces()).map(|f| self.face_area(f)).sum()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Applies `f` to every vertex position.
    pub fn map_positions(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        self.with_vertices(self.vertices.iter().map(f).collect())
    }
}
