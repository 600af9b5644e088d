//! Sensor-network data gathering that combines random temporal sampling and
//! sparse-binary compressive sensing at each node with ℓ1 recovery and
//! nuclear-norm matrix completion at the sink.
//!
//! The node side lives in [`model`] and [`encoder`]; the sink side in
//! [`cs_solver`], [`mc_solver`] and [`pipeline`]. [`dataset`] builds ground
//! truth matrices and [`experiment`] runs seeded Monte-Carlo sweeps.

pub mod cs_solver;
pub mod dataset;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mc_solver;
pub mod model;
pub mod pipeline;
pub mod transform;

pub use error::{Error, Result};
