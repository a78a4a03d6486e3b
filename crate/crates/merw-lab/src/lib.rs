//! Maximum-entropy random walks on finite graphs and the origin-perturbed
//! half-line: exact kernels and spectral quantities, a reproducible Monte
//! Carlo engine, reference laws for the diffusive scaling limits, discretized
//! entropy-rate minimizers, and a two-particle exclusion model.

pub mod conditioned;
pub mod defaults;
pub mod diffusion;
pub mod error;
pub mod exclusion;

pub mod graph;
pub mod halfline;
pub mod kernel;
pub mod rng;
pub mod series;
pub mod simulate;
pub mod spectral;
pub mod stats;
pub mod variational;

pub use error::{Error, Result};
