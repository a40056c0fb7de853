use std::f64::consts::TAU;

use super::refine;
use crate::mesh::{Mesh, Vec3};

/// Loop's even-vertex neighbor weight for valence `n`.
pub fn loop_beta(n: usize) -> f64 {
    let n = n as f64;
    let c = 3.0 / 8.0 + 0.25 * (TAU / n).cos();
    (5.0 / 8.0 - c * c) / n
}

pub fn loop_subdivide(mesh: &Mesh, levels: usize) -> Mesh {
    let mut m = mesh.clone();
    for _ in 0..levels {
        m = loop_step(&m);
    }
    m
}

fn loop_step(m: &Mesh) -> Mesh {
    let even = |v: usize| {
        let ring = m.one_ring(v);
        let beta = loop_beta(ring.len());
        let sum: Vec3 = ring.iter().map(|&r| m.position(r)).sum();
        m.position(v) * (1.0 - ring.len() as f64 * beta) + sum * beta
    };
    let odd = |h: usize| {
        let (a, b) = (m.position(m.source(h)), m.position(m.dest(h)));
        let (c, d) = (m.position(m.opposite(h)), m.position(m.opposite(m.twin(h))));
        (a + b) * (3.0 / 8.0) + (c + d) * (1.0 / 8.0)
    };
    refine(m, even, odd)
}
