//! Forward and adjoint solvers for the single-term time-fractional diffusion
//! equation `∂_t^α u - Δu + u = f(x) μ(t)` on the unit interval or square with
//! Neumann boundary conditions, and reconstruction of the spatial source `f`
//! from noisy interior observations by iterative thresholding.

pub mod adjoint;
pub mod cli;
pub mod discretization;
pub mod error;
pub mod fraccalc;
pub mod forward;
pub mod inversion;
pub mod oracle;

pub use error::{Error, Result};
