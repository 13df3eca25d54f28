//! Drift, entropy and CLT variance of random walks on hyperbolic groups.

pub mod error;
pub mod boundary;
pub mod config;
pub mod estimators;
pub mod green;
pub mod group;
pub mod martin;
pub mod measure;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
