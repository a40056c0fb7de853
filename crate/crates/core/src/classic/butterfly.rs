use std::f64::consts::TAU;

use super::refine;
use crate::mesh::{Mesh, Vec3};

/// Modified-butterfly ring weights around an extraordinary vertex of
/// valence `n`, starting at the edge being split. The center gets ¾.
pub fn butterfly_weights(n: usize) -> Vec<f64> {
    match n {
        3 => vec![5.0 / 12.0, -1.0 / 12.0, -1.0 / 12.0],
        4 => vec![3.0 / 8.0, 0.0, -1.0 / 8.0, 0.0],
        _ => (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                (0.25 + t.cos() + 0.5 * (2.0 * t).cos()) / n as f64
            })
            .collect(),
    }
}

pub fn butterfly_subdivide(mesh: &Mesh, levels: usize) -> Mesh {
    let mut m = mesh.clone();
    for _ in 0..levels {
        m = butterfly_step(&m);
    }
    m
}

/// Extraordinary rule seen from the source of `h`.
fn extraordinary(m: &Mesh, h: usize) -> Vec3 {
    let mut ring = Vec::new();
    let mut g = h;
    loop {
        ring.push(m.dest(g));
        g = m.rotate_ccw(g);
        if g == h {
            break;
        }
    }
    let w = butterfly_weights(ring.len());
    ring.iter().zip(&w).fold(m.position(m.source(h)) * 0.75, |acc, (&v, &s)| acc + m.position(v) * s)
}

fn butterfly_odd(m: &Mesh, h: usize) -> Vec3 {
    let t = m.twin(h);
    let (a, b) = (m.source(h), m.dest(h));
    match (m.valence(a) == 6, m.valence(b) == 6) {
        (true, true) => {
            let p = |v: usize| m.position(v);
            let wings = p(m.opposite(m.twin(m.next(h))))
                + p(m.opposite(m.twin(m.prev(h))))
                + p(m.opposite(m.twin(m.next(t))))
                + p(m.opposite(m.twin(m.prev(t))));
            (p(a) + p(b)) * 0.5 + (p(m.opposite(h)) + p(m.opposite(t))) * 0.125 - wings * 0.0625
        }
        (false, true) => extraordinary(m, h),
        (true, false) => extraordinary(m, t),
        (false, false) => (extraordinary(m, h) + extraordinary(m, t)) * 0.5,
    }
}

fn butterfly_step(m: &Mesh) -> Mesh {
    refine(m, |v| m.position(v), |h| butterfly_odd(m, h))
}
