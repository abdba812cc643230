//! Data tooling for inpainting-driven 4D video creation: dynamic point-cloud
//! warping, double-reprojected training pairs, composite mask datasets,
//! angle-progressive stage manifests and temporal-packing sequences.

pub mod camera;
pub mod error;
pub mod geometry;
pub mod io;
pub mod maskgen;
pub mod packing;
pub mod pipeline;
pub mod reprojection;
pub mod schedule;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
