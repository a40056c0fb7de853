//! Procedural closed meshes used by tests, examples and the CLI.

use std::f64::consts::PI;

use super::{midpoint_topology_subdivide, Mesh, Vec3};

fn build(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Mesh {
    Mesh::new(vertices, faces).expect("procedural mesh is a closed manifold")
}

pub fn tetrahedron() -> Mesh {
    build(
        vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ],
        vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]],
    )
}

/// Unit cube `[0, 1]³`, two triangles per side.
pub fn cube() -> Mesh {
    let vertices = (0..8)
        .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let faces = vec![
        [0, 2, 3], [0, 3, 1], // z = 0
        [4, 5, 7], [4, 7, 6], // z = 1
        [0, 1, 5], [0, 5, 4], // y = 0
        [2, 6, 7], [2, 7, 3], // y = 1
        [0, 4, 6], [0, 6, 2], // x = 0
        [1, 3, 7], [1, 7, 5], // x = 1
    ];
    build(vertices, faces)
}

/// Octahedron with unit circumradius: vertices `+x, -x, +y, -y, +z, -z`.
pub fn octahedron() -> Mesh {
    build(
        vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        ],
        vec![
            [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
            [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
        ],
    )
}

/// Icosahedron with unit circumradius.
pub fn icosahedron() -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ];
    let vertices = raw.iter().map(|&(x, y, z)| Vec3::new(x, y, z).normalize()).collect();
    let faces = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    build(vertices, faces)
}

/// Unit sphere from `levels` midpoint refinements of the icosahedron:
/// `10 · 4^levels + 2` vertices.
pub fn icosphere(levels: usize) -> Mesh {
    let mut m = icosahedron();
    for _ in 0..levels {
        let (fine, _) = midpoint_topology_subdivide(&m);
        m = fine.map_positions(|p| p.normalize());
    }
    m
}

/// Torus around the z axis with `nu × nv` vertices.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64) -> Mesh {
    assert!(nu >= 3 && nv >= 3);
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            vertices.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    build(vertices, faces)
}

/// Icosphere with smooth radial bumps: a curved test shape with features
/// that approximating subdivision visibly shrinks.
pub fn bumpy_sphere(levels: usize, amplitude: f64) -> Mesh {
    icosphere(levels).map_positions(|p| {
        let bump = (3.0 * p.x + 0.5).sin() * (2.0 * p.y).cos() + 0.5 * (4.0 * p.z - 0.3).sin();
        p * (1.0 + amplitude * bump)
    })
}

/// Ellipsoid with semi-axes `(a, b, c)` from an icosphere.
pub fn ellipsoid(levels: usize, a: f64, b: f64, c: f64) -> Mesh {
    icosphere(levels).map_positions(|p| Vec3::new(a * p.x, b * p.y, c * p.z))
}
