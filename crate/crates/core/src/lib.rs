//! Cavity reconstruction in 2D conductors from a single Cauchy data pair by
//! the no-response test.

pub mod cli;
pub mod config;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod indicator;
pub mod probes;
pub mod reconstruction;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};
