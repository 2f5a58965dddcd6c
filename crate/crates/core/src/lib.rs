//! Computational objects of the two-dimensional discrete Gaussian free field.

pub mod brw;
pub mod chaos;
pub mod error;
pub mod extremes;
pub mod green;
pub mod harness;
pub mod lattice;
pub mod network;
pub mod rwre;
pub mod linalg;
pub mod sampler;
pub mod spectral;

pub use error::{Error, Result};
