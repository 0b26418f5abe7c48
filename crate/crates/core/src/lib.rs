//! Exact linear-region counting, region-count bounds and knot densities for
//! continuous piecewise-linear networks.

pub mod bounds;
pub mod cli;
pub mod constructions;
pub mod cpwl;
pub mod error;
pub mod geometry;
pub(crate) mod lp;
pub mod network;
pub mod oracle;
pub mod paths;
pub mod rng;
pub mod scalar;
pub mod stochastic;

pub use cpwl::ScalarCpwl;
pub use error::{CpwlError, Result};
pub use network::{AffineMap, CompiledNetwork, LayerSpec, LocalPiece, NetworkSpec};
