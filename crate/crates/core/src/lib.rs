//! Concentrated-capacity diffusion-advection around a moving curve.

pub mod error;
pub mod approx;
pub mod coefficients;
pub mod config;
pub mod geometry;
pub mod harness;
pub mod limit;
pub mod linsolve;
pub mod mesh;
pub mod output;

pub use error::{Error, Result};
