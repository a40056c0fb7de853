//! Neural subdivision toolkit: decimation with a bijective coarse-to-fine
//! surface map, self-supervised training data, half-flap neural subdivision
//! and classic subdivision baselines.

pub mod error;
pub mod mesh;
pub mod neural;
pub mod classic;
pub mod selfparam;
pub mod train;
pub mod eval;
pub mod cli;
