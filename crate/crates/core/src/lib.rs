//! Numerical laboratory for hierarchical (ultrametric) random matrices, their
//! truncations and the Rosenzweig-Porter model.
//!
//! * [`ensemble`]: index space, variance profiles and model sampling.
//! * [`spectral`]: eigendecomposition, Green functions, Stieltjes transforms.
//! * [`stats`]: local spectral and eigenfunction statistics.
//! * [`flow`]: Dyson Brownian motion on matrices and resolvent-flow identities.
//! * [`harness`]: experiment configs, deterministic parallel runs, file formats.
//! * [`oracle`]: slow, literal reference computations used to check the above.
//!
//! Sites are 1-based throughout (`1..=N`); raw matrix storage is 0-based.

pub mod ensemble;
pub mod error;
pub mod flow;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use rng::RngStream;
