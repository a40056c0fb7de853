//! Edge-collapse decimation with successive self-parameterization.
//!
//! Every collapse stores a pair of local UV charts sharing one boundary
//! polygon; composing them in reverse maps any point of the coarse mesh to
//! a point of the input mesh.

pub mod chart;
pub mod collapse;
pub mod decimate;
pub mod map;
pub mod nsm;
pub mod quadric;

use thiserror::Error;

use crate::error::MeshError;

pub use chart::{
    conformal_energy, flatten_fan, flatten_one_ring, reflatten_interior, ChartDefect, ChartError, ChartStage,
    ChartTriangle, UVChart, Uv,
};
pub use collapse::{
    validate_collapse, CollapsePlan, CollapseRecord, CollapseRejection, DecimationState, NORMAL_DOT_MIN, QUALITY_MIN,
};
pub use decimate::{decimate, Decimation, DecimationPolicy};
pub use map::{record_round_trip_error, BijectiveMap, LOCATE_TOL};
pub use nsm::{load_map, mesh_hash, read_map, save_map, write_map};
pub use quadric::{init_quadrics, Quadric};

#[derive(Debug, Error)]
pub enum SelfParamError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("target vertex count {0} is below the minimum of 4")]
    InvalidTarget(usize),
    #[error("point location failed in record {record} (min barycentric {min_bary}); the map is corrupt")]
    LocationFailed { record: usize, min_bary: f64 },
    #[error("record {record}: {message}")]
    Corrupt { record: usize, message: String },
    #[error("map file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("map file was written for a different {0} mesh")]
    HashMismatch(&'static str),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
