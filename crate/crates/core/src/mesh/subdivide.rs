use super::{BarycentricPoint, Mesh};

/// One level of 1-to-4 midpoint refinement.
///
/// Even vertices keep indices `0..V`; the odd vertex of edge `e` (in the
/// sorted order of [`Mesh::edges`]) gets index `V + e` and sits at the edge
/// midpoint. Face `f` becomes faces `4f..4f+4`: three corner triangles then
/// the center triangle. The returned parent record places every output
/// vertex on the input surface.
pub fn midpoint_topology_subdivide(mesh: &Mesh) -> (Mesh, Vec<BarycentricPoint>) {
    let nv = mesh.num_vertices();
    let mut vertices = Vec::with_capacity(nv + mesh.num_edges());
    vertices.extend_from_slice(mesh.vertices());
    for &[a, b] in mesh.edges() {
        vertices.push((mesh.position(a) + mesh.position(b)) * 0.5);
    }

    let mut faces = Vec::with_capacity(4 * mesh.num_faces());
    for (f, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let odd = |corner: usize| nv + mesh.edge_of(3 * f + corner);
        let (ab, bc, ca) = (odd(0), odd(1), odd(2));
        faces.push([a, ab, ca]);
        faces.push([ab, b, bc]);
        faces.push([ca, bc, c]);
        faces.push([ab, bc, ca]);
    }

    let mut parents = vec![BarycentricPoint::corner(usize::MAX, 0); nv + mesh.num_edges()];
    for (f, face) in mesh.faces().iter().enumerate() {
        for c in 0..3 {
            let v = face[c];
            if parents[v].face > f {
                parents[v] = BarycentricPoint::corner(f, c);
            }
            let e = nv + mesh.edge_of(3 * f + c);
            if parents[e].face > f {
                let mut coords = [0.0; 3];
                coords[c] = 0.5;
                coords[(c + 1) % 3] = 0.5;
                parents[e] = BarycentricPoint { face: f, coords };
            }
        }
    }

    let fine = Mesh::new(vertices, faces).expect("midpoint refinement of a closed manifold is a closed manifold");
    (fine, parents)
}

/// Applies [`midpoint_topology_subdivide`] `levels` times and returns every
/// intermediate level (index 0 is the first refinement).
pub fn midpoint_topology_subdivide_levels(mesh: &Mesh, levels: usize) -> Vec<Mesh> {
    let mut out: Vec<Mesh> = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (fine, _) = midpoint_topology_subdivide(out.last().unwrap_or(mesh));
        out.push(fine);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::{icosahedron, tetrahedron, torus};

    #[test]
    fn counts() {
        let (m, _) = midpoint_topology_subdivide(&icosahedron());
        assert_eq!((m.num_vertices(), m.num_faces()), (42, 80));
        let (t1, _) = midpoint_topology_subdivide(&tetrahedron());
        assert_eq!((t1.num_vertices(), t1.num_faces()), (10, 16));
        let (t2, _) = midpoint_topology_subdivide(&t1);
        assert_eq!((t2.num_vertices(), t2.num_faces()), (34, 64));
    }

    #[test]
    fn euler_preserved() {
        for m in [tetrahedron(), icosahedron(), torus(6, 5, 2.0, 0.5)] {
            let (s, _) = midpoint_topology_subdivide(&m);
            assert_eq!(s.euler_characteristic(), m.euler_characteristic());
        }
    }

    #[test]
    fn even_vertices_keep_indices_and_odd_follow_sorted_edges() {
        let m = icosahedron();
        let (s, parents) = midpoint_topology_subdivide(&m);
        assert_eq!(&s.vertices()[..12], m.vertices());
        for (e, &[a, b]) in m.edges().iter().enumerate() {
            let mid = (m.position(a) + m.position(b)) * 0.5;
            assert_eq!(s.position(12 + e), mid);
            let p = parents[12 + e];
            // lowest-index face containing the edge
            let lowest = (0..m.num_faces())
                .find(|&f| m.faces()[f].contains(&a) && m.faces()[f].contains(&b))
                .unwrap();
            assert_eq!(p.face, lowest);
            assert_eq!((p.position(&m) - mid).norm(), 0.0);
        }
        for v in 0..12 {
            assert_eq!(parents[v].position(&m), m.position(v));
        }
    }

    #[test]
    fn faces_keep_orientation() {
        let m = icosahedron();
        let (s, _) = midpoint_topology_subdivide(&m);
        for f in 0..m.num_faces() {
            let n = m.face_normal(f);
            for child in 4 * f..4 * f + 4 {
                assert!(s.face_normal(child).dot(&n) > 0.99);
            }
        }
    }
}
