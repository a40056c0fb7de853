//! Half-flap neural subdivision: three small MLPs shared across all
//! half-flaps and all levels.
//!
//! Every vertex carries a 32-vector feature. The first three components are
//! a geometric vector stored in global coordinates; before entering a
//! network they are rotated into the flap's local frame, and network outputs
//! are rotated back before pooling. The remaining 29 are a free latent code.

pub mod bundle;
pub mod frame;
pub mod mlp;
pub mod pipeline;

use thiserror::Error;

pub use bundle::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, NetworkBundle};
pub use frame::{frame_from_points, half_flap_frame, HalfFlap};
pub use mlp::{MlpParams, MlpTape};
pub use pipeline::{neural_subdivide, neural_subdivide_scaled, Forward, LevelTopology, Topology};

/// Per-vertex feature length: 3 geometric + 29 latent components.
pub const FEATURE_DIM: usize = 32;
pub const LATENT_DIM: usize = FEATURE_DIM - 3;
pub const HIDDEN_DIM: usize = 32;
/// Input length of the initialization module: 3 edge vectors and 4
/// differential coordinates.
pub const INIT_INPUT_DIM: usize = 3 * 3 + 4 * 3;
/// Input length of the vertex and edge modules: 3 edge vectors and 4 features.
pub const STEP_INPUT_DIM: usize = 3 * 3 + 4 * FEATURE_DIM;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("half-edge {0} has zero length; no local frame exists")]
    DegenerateEdge(usize),
    #[error("expected input of length {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("checkpoint line {line}: {message}")]
    Checkpoint { line: usize, message: String },
    #[error("network produced non-finite values")]
    NonFinite,
    #[error(transparent)]
    Mesh(#[from] crate::error::MeshError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
