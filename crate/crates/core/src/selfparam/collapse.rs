use thiserror::Error;

use super::chart::{flatten_fan, reflatten_interior, ChartDefect, ChartError, FanFace, UVChart};
use super::quadric::{init_quadrics, Quadric};
use crate::mesh::{triangle_normal, triangle_quality, Mesh, Vec3};

/// Minimum dot product between a face normal before and after a collapse.
pub const NORMAL_DOT_MIN: f64 = 0.2;
/// Minimum triangle quality, in 3D and in UV, after a collapse.
pub const QUALITY_MIN: f64 = 0.2;

/// Why a collapse was refused, in the order the checks run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollapseRejection {
    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(usize, usize),
    #[error("mesh is already a tetrahedron")]
    TooFewVertices,
    #[error("link condition violated")]
    LinkCondition,
    #[error("face {face} normal flips (dot {dot})")]
    NormalFlip { face: usize, dot: f64 },
    #[error("face {face} quality {quality} in 3D")]
    Quality3d { face: usize, quality: f64 },
    #[error("flattening failed: {0}")]
    Flatten(ChartError),
    #[error("UV face flipped: {0}")]
    UvFlip(ChartDefect),
    #[error("UV faces overlap: {0}")]
    UvOverlap(ChartDefect),
    #[error("face {face} quality {quality} in UV")]
    QualityUv { face: usize, quality: f64 },
}

/// Everything needed to apply one validated collapse.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsePlan {
    pub j: usize,
    pub k: usize,
    pub position: Vec3,
    pub pre: UVChart,
    pub post: UVChart,
    pub removed_faces: [usize; 2],
}

/// One collapse `(j, k) → i` with its pair of charts. Faces keep their ids
/// across levels; `relabeled_faces` had `k` replaced by `i` in place.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRecord {
    pub edge: (usize, usize),
    pub survivor: usize,
    pub position: Vec3,
    pub pre: UVChart,
    pub post: UVChart,
    pub removed_faces: [usize; 2],
    pub relabeled_faces: Vec<usize>,
}

/// Mutable mesh for edge collapses. Vertex and face ids stay those of the
/// input mesh throughout.
#[derive(Debug, Clone)]
pub struct DecimationState {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vertex_alive: Vec<bool>,
    vertex_faces: Vec<Vec<usize>>,
    quadrics: Vec<Quadric>,
    alive_vertices: usize,
}

impl DecimationState {
    pub fn new(mesh: &Mesh) -> Self {
        let mut vertex_faces = vec![Vec::new(); mesh.num_vertices()];
        for (f, face) in mesh.faces().iter().enumerate() {
            for &v in face {
                vertex_faces[v].push(f);
            }
        }
        Self {
            positions: mesh.vertices().to_vec(),
            faces: mesh.faces().to_vec(),
            face_alive: vec![true; mesh.num_faces()],
            vertex_alive: vec![true; mesh.num_vertices()],
            vertex_faces,
            quadrics: init_quadrics(mesh),
            alive_vertices: mesh.num_vertices(),
        }
    }

    pub fn alive_vertices(&self) -> usize {
        self.alive_vertices
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.vertex_alive[v]
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.vertex_alive[a] && self.vertex_faces[a].iter().any(|&f| self.faces[f].contains(&b))
    }

    /// 1-ring of `v` in counter-clockwise order from the lowest-index neighbor.
    pub fn ring(&self, v: usize) -> Vec<usize> {
        let mut succ: Vec<(usize, usize)> = self.vertex_faces[v]
            .iter()
            .map(|&f| {
                let face = self.faces[f];
                let c = face.iter().position(|&x| x == v).expect("incident face");
                (face[(c + 1) % 3], face[(c + 2) % 3])
            })
            .collect();
        succ.sort_unstable();
        let mut ring = Vec::with_capacity(succ.len());
        let Some(&(start, _)) = succ.first() else { return ring };
        let mut cur = start;
        for _ in 0..succ.len() {
            ring.push(cur);
            cur = match succ.binary_search_by_key(&cur, |&(a, _)| a) {
                Ok(i) => succ[i].1,
                Err(_) => break,
            };
        }
        ring
    }

    pub fn link_condition(&self, j: usize, k: usize) -> bool {
        let rk = self.ring(k);
        let common: Vec<usize> = self.ring(j).into_iter().filter(|v| rk.contains(v)).collect();
        common.len() == 2 && !self.is_edge(common[0], common[1])
    }

    /// Faces incident to `j` or `k`, ascending by id.
    pub fn fan(&self, j: usize, k: usize) -> Vec<FanFace> {
        let mut ids: Vec<usize> = self.vertex_faces[j].iter().chain(&self.vertex_faces[k]).copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter().map(|f| (f, self.faces[f])).collect()
    }

    pub fn quadric(&self, v: usize) -> Quadric {
        self.quadrics[v]
    }

    /// Quadric-optimal placement for collapsing `(j, k)` and its error.
    pub fn placement(&self, j: usize, k: usize) -> (Vec3, f64) {
        (self.quadrics[j] + self.quadrics[k]).placement(&self.positions[j], &self.positions[k])
    }

    /// Runs every validity check for collapsing `(j, k)` into a vertex at
    /// `position`, returning the charts on success.
    pub fn validate_collapse(&self, j: usize, k: usize, position: Vec3) -> Result<CollapsePlan, CollapseRejection> {
        if !self.is_edge(j, k) {
            return Err(CollapseRejection::NotAnEdge(j, k));
        }
        if self.alive_vertices <= 4 {
            return Err(CollapseRejection::TooFewVertices);
        }
        if !self.link_condition(j, k) {
            return Err(CollapseRejection::LinkCondition);
        }

        let fan = self.fan(j, k);
        let mut removed = Vec::with_capacity(2);
        let mut post_fan = Vec::with_capacity(fan.len());
        for &(f, face) in &fan {
            if face.contains(&j) && face.contains(&k) {
                removed.push(f);
            } else {
                post_fan.push((f, face.map(|v| if v == k { j } else { v })));
            }
        }
        if removed.len() != 2 {
            return Err(CollapseRejection::LinkCondition);
        }
        let before = |v: usize| self.positions[v];
        let after = |v: usize| if v == j { position } else { self.positions[v] };

        for (&(f, old), &(_, new)) in fan.iter().filter(|(f, _)| !removed.contains(f)).zip(&post_fan) {
            let n0 = triangle_normal(&before(old[0]), &before(old[1]), &before(old[2]));
            let n1 = triangle_normal(&after(new[0]), &after(new[1]), &after(new[2]));
            let dot = n0.dot(&n1);
            if !(dot > NORMAL_DOT_MIN) {
                return Err(CollapseRejection::NormalFlip { face: f, dot });
            }
        }
        for &(f, new) in &post_fan {
            let quality = triangle_quality(&after(new[0]), &after(new[1]), &after(new[2]));
            if !(quality > QUALITY_MIN) {
                return Err(CollapseRejection::Quality3d { face: f, quality });
            }
        }

        let pre = flatten_fan(&fan, before, j, k).map_err(CollapseRejection::Flatten)?;
        classify_defect(pre.check())?;
        let post = reflatten_interior(&pre, &post_fan, after, j).map_err(CollapseRejection::Flatten)?;
        classify_defect(post.check())?;
        for (t, tri) in post.triangles.iter().enumerate() {
            let quality = post.quality(t);
            if !(quality > QUALITY_MIN) {
                return Err(CollapseRejection::QualityUv { face: tri.face, quality });
            }
        }
        Ok(CollapsePlan { j, k, position, pre, post, removed_faces: [removed[0], removed[1]] })
    }

    /// Applies a plan produced by [`Self::validate_collapse`] on this state.
    pub fn apply(&mut self, plan: CollapsePlan) -> CollapseRecord {
        let CollapsePlan { j, k, position, pre, post, removed_faces } = plan;
        for &f in &removed_faces {
            self.face_alive[f] = false;
            for v in self.faces[f] {
                self.vertex_faces[v].retain(|&x| x != f);
            }
        }
        let mut relabeled = std::mem::take(&mut self.vertex_faces[k]);
        relabeled.sort_unstable();
        for &f in &relabeled {
            for v in self.faces[f].iter_mut() {
                if *v == k {
                    *v = j;
                }
            }
        }
        self.vertex_faces[j].extend_from_slice(&relabeled);
        self.vertex_faces[j].sort_unstable();
        self.vertex_alive[k] = false;
        self.alive_vertices -= 1;
        self.positions[j] = position;
        let qk = self.quadrics[k];
        self.quadrics[j] += qk;
        CollapseRecord {
            edge: (j, k),
            survivor: j,
            position,
            pre,
            post,
            removed_faces,
            relabeled_faces: relabeled,
        }
    }

    /// Validates and applies in one step.
    pub fn collapse_edge_with_param(&mut self, j: usize, k: usize) -> Result<CollapseRecord, CollapseRejection> {
        let (position, _) = self.placement(j, k);
        let plan = self.validate_collapse(j, k, position)?;
        Ok(self.apply(plan))
    }

    /// Compacts the live part into a [`Mesh`], returning it with the ids of
    /// its vertices and faces in the input mesh.
    pub fn to_mesh(&self) -> (Mesh, Vec<usize>, Vec<usize>) {
        let vertex_ids: Vec<usize> = (0..self.positions.len()).filter(|&v| self.vertex_alive[v]).collect();
        let face_ids: Vec<usize> = (0..self.faces.len()).filter(|&f| self.face_alive[f]).collect();
        let mut compact = vec![usize::MAX; self.positions.len()];
        for (i, &v) in vertex_ids.iter().enumerate() {
            compact[v] = i;
        }
        let vertices = vertex_ids.iter().map(|&v| self.positions[v]).collect();
        let faces = face_ids.iter().map(|&f| self.faces[f].map(|v| compact[v])).collect();
        let mesh = Mesh::new(vertices, faces).expect("valid collapses keep the mesh a closed manifold");
        (mesh, vertex_ids, face_ids)
    }
}

fn classify_defect(r: Result<(), ChartDefect>) -> Result<(), CollapseRejection> {
    match r {
        Ok(()) => Ok(()),
        Err(d @ ChartDefect::NonPositiveArea { .. }) => Err(CollapseRejection::UvFlip(d)),
        Err(d @ ChartDefect::AngleSum { .. }) => Err(CollapseRejection::UvOverlap(d)),
    }
}

/// Checks whether collapsing `(j, k)` of a static mesh into `position` is valid.
pub fn validate_collapse(mesh: &Mesh, j: usize, k: usize, position: Vec3) -> Result<(), CollapseRejection> {
    DecimationState::new(mesh).validate_collapse(j, k, position).map(|_| ())
}
