use super::closest::{face_boxes, point_face, Aabb};
use crate::mesh::{BarycentricPoint, Mesh, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    // leaf: faces[start..start + count]; inner: children at `start` and `start + 1`
    start: usize,
    count: usize,
}

/// Bounding-volume hierarchy over the faces of one mesh. Queries return
/// exactly what the brute-force scan returns, including the lowest-face
/// tie-break.
#[derive(Debug, Clone)]
pub struct FaceBvh<'a> {
    mesh: &'a Mesh,
    nodes: Vec<Node>,
    faces: Vec<usize>,
}

impl<'a> FaceBvh<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let boxes = face_boxes(mesh);
        let centroids: Vec<Vec3> = boxes.iter().map(|b| (b.min + b.max) * 0.5).collect();
        let mut faces: Vec<usize> = (0..mesh.num_faces()).collect();
        let mut nodes = vec![Node { bounds: Aabb::empty(), start: 0, count: 0 }];
        let mut stack = vec![(0usize, 0usize, faces.len())];
        while let Some((n, lo, hi)) = stack.pop() {
            let mut bounds = Aabb::empty();
            let mut cbox = Aabb::empty();
            for &f in &faces[lo..hi] {
                bounds.merge(&boxes[f]);
                cbox.grow(&centroids[f]);
            }
            nodes[n].bounds = bounds;
            if hi - lo <= LEAF_SIZE {
                nodes[n].start = lo;
                nodes[n].count = hi - lo;
                continue;
            }
            let ext = cbox.max - cbox.min;
            let axis = if ext.x >= ext.y && ext.x >= ext.z { 0 } else if ext.y >= ext.z { 1 } else { 2 };
            let mid = (lo + hi) / 2;
            faces[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
            });
            let child = nodes.len();
            nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
            nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
            nodes[n].start = child;
            stack.push((child, lo, mid));
            stack.push((child + 1, mid, hi));
        }
        Self { mesh, nodes, faces }
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    /// Distance from `p` to the mesh and the closest point.
    pub fn closest(&self, p: &Vec3) -> (f64, BarycentricPoint) {
        let mut best_d2 = f64::INFINITY;
        let mut best = BarycentricPoint::corner(usize::MAX, 0);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            // ties must still be visited so the lowest face can win
            if node.bounds.dist2(p) > best_d2 {
                continue;
            }
            if node.count > 0 {
                for &f in &self.faces[node.start..node.start + node.count] {
                    let (d2, q) = point_face(p, self.mesh, f);
                    if d2 < best_d2 || (d2 == best_d2 && f < best.face) {
                        best_d2 = d2;
                        best = q;
                    }
                }
            } else {
                let (a, b) = (node.start, node.start + 1);
                let (da, db) = (self.nodes[a].bounds.dist2(p), self.nodes[b].bounds.dist2(p));
                // nearer child popped first
                if da <= db {
                    stack.push(b);
                    stack.push(a);
                } else {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        (best_d2.sqrt(), best)
    }
}

#[cfg(test)]
mod tests {
    use super::super::closest::point_to_mesh_distance;
    use super::*;
    use crate::mesh::shapes::{bumpy_sphere, cube, torus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bit_identical_to_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for m in [bumpy_sphere(3, 0.2), torus(20, 12, 1.0, 0.3), cube()] {
            let bvh = FaceBvh::new(&m);
            for _ in 0..400 {
                let p = Vec3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
                let (d0, q0) = point_to_mesh_distance(&p, &m);
                let (d1, q1) = bvh.closest(&p);
                assert_eq!(d0.to_bits(), d1.to_bits());
                assert_eq!(q0, q1);
            }
            // vertices are shared by several faces: the lowest one wins
            for v in 0..m.num_vertices() {
                let p = m.position(v);
                assert_eq!(bvh.closest(&p), point_to_mesh_distance(&p, &m));
            }
        }
    }
}
