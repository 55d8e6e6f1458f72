//! Numerical laboratory for the competitive absorption system
//!
//! ```text
//! u_t - Δu + v^p = 0,
//! v_t - Δv + u^q = 0,
//! ```
//!
//! on a 1D interval or a radial ball in dimension N. The crate is split along
//! the lines of the workflow:
//!
//! - [`closed_forms`]: scaling exponents, exact particular solutions and
//!   regime classification.
//! - [`discretization`]: uniform meshes, discrete Laplacian, quadrature.
//! - [`evolution`]: positivity-preserving IMEX time stepping with step-doubling
//!   error control.
//! - [`diagnostics`]: blow-up rate fits, trace functionals, cylinder integrals
//!   and the interior estimate monitors.
//! - [`experiments`]: declarative recipes, sweeps and CSV/JSON output.

pub mod closed_forms;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod evolution;
pub mod experiments;

pub use error::{Error, Result};
