//! Classic subdivision baselines on the midpoint connectivity.

mod butterfly;
mod loop_scheme;

use std::str::FromStr;

pub use butterfly::{butterfly_subdivide, butterfly_weights};
pub use loop_scheme::{loop_beta, loop_subdivide};

use crate::mesh::{midpoint_topology_subdivide, Mesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Loop,
    Butterfly,
    Midpoint,
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loop" => Ok(Self::Loop),
            "butterfly" => Ok(Self::Butterfly),
            "midpoint" => Ok(Self::Midpoint),
            other => Err(format!("unknown scheme '{other}' (expected loop, butterfly or midpoint)")),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Loop => "loop",
            Self::Butterfly => "butterfly",
            Self::Midpoint => "midpoint",
        })
    }
}

pub fn subdivide(mesh: &Mesh, scheme: Scheme, levels: usize) -> Mesh {
    match scheme {
        Scheme::Loop => loop_subdivide(mesh, levels),
        Scheme::Butterfly => butterfly_subdivide(mesh, levels),
        Scheme::Midpoint => {
            (0..levels).fold(mesh.clone(), |m, _| midpoint_topology_subdivide(&m).0)
        }
    }
}

/// One refinement step: midpoint connectivity with positions from `even`
/// (per coarse vertex) and `odd` (per sorted edge, given a half-edge on it).
fn refine(mesh: &Mesh, even: impl Fn(usize) -> Vec3, odd: impl Fn(usize) -> Vec3) -> Mesh {
    let (fine, _) = midpoint_topology_subdivide(mesh);
    let mut pos = Vec::with_capacity(fine.num_vertices());
    pos.extend((0..mesh.num_vertices()).map(even));
    pos.extend(mesh.edges().iter().map(|&[a, b]| odd(mesh.find_halfedge(a, b).expect("edge has a half-edge"))));
    fine.with_vertices(pos)
}
