//! Self-supervised training: random decimations of a source mesh, targets
//! through the bijective map, cross-level ℓ² loss and ADAM.

pub mod adam;
pub mod dataset;
pub mod gradcheck;
pub mod loss;
pub mod trainer;

use thiserror::Error;

pub use adam::AdamState;
pub use dataset::{generate_dataset, read_dataset, write_dataset, Dataset, DatasetConfig, TargetKind, TrainingPair};
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::loss_l2_levels;
pub use trainer::{train, TrainConfig, TrainOutcome};

use crate::mesh::MeshError;
use crate::neural::{NetworkBundle, NeuralError};
use crate::selfparam::SelfParamError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    SelfParam(#[from] SelfParamError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dataset {path}: {message}")]
    Dataset { path: String, message: String },
    #[error("could not build a valid pair after {attempts} attempts")]
    PairRetries { attempts: usize },
    #[error("non-finite gradient; step rejected")]
    NonFiniteGradient,
    #[error("non-finite loss at epoch {epoch}; training aborted")]
    NonFiniteLoss { epoch: usize, last_good: Box<NetworkBundle> },
}
