//! Numerical laboratory for the parallel-beam Radon transform under angular
//! undersampling: forward projection, two discrete filtered-backprojection
//! methods, an exact Fourier-multiplier form of the direct method, geometric
//! aliasing-artifact prediction, refocusing, and quantitative fitting of
//! edge-artifact singularity profiles.

pub mod aliasing;
pub mod conormal;
pub mod error;
pub mod experiments;
pub mod filtering;
pub mod grid;
pub mod io;
pub mod phantom;
pub mod radon;
pub mod recon;

pub use error::{Error, Result};
