//! Smoothed-aggregation AMG whose strength-of-connection stage is split into
//! four pluggable steps: SOC matrix, entry scaling, strong/weak
//! classification and lumping of the dropped entries.
//!
//! The crate also carries everything needed to exercise it on stretched
//! meshes: structured FE Poisson assembly, CG/GMRES drivers, a geometric
//! semi-coarsening reference solver and a sweep runner.

pub mod aggregation;
pub mod bench;
pub mod error;
pub mod fem;
pub mod geometric;
pub mod hierarchy;
pub mod krylov;
pub mod lumping;
pub mod mesh;
pub mod sparse;
pub mod strength;

pub use error::{Error, Result};
pub use sparse::CsrMatrix;
