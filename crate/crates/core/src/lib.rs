//! Meshless solver for two-dimensional space-time fractional diffusion.
//!
//! Space is discretized with Kansa (unsymmetric multiquadric RBF)
//! collocation, fractional directional derivatives of the basis are
//! integrated with Gauss-Jacobi rules, and the resulting fractional ODE
//! system is propagated exactly in time through the Mittag-Leffler function
//! of the reduced system matrix.

pub mod bench;
pub mod error;
pub mod geometry;
pub mod operator;
pub mod par;
pub mod mlf;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
