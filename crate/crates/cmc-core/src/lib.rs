//! Exact computer algebra for the constant-mean-curvature integrable
//! hierarchy.
//!
//! The crate builds, over an exact differential-polynomial ring, the formal
//! Killing fields of a CMC surface's moving frame, the twisted `sl(2, C)`
//! loop-algebra objects they assemble into, the AKS commuting flows of the
//! associated hierarchy, an `so(4, C)` realisation used as an independent
//! cross-check, and floating-point integrators for the truncated isospectral
//! flows and the sinh-Gordon equation.
//!
//! Modules:
//! - [`scalar`]: Gaussian rationals extended by the mean-curvature parameter `γ`.
//! - [`diffring`]: the differential polynomial ring in the frame derivatives
//!   `h_j`, `h̄_j` with covariant derivations `∂_ξ`, `∂_ξ̄` and torsion.
//! - [`loopalg`]: Laurent loops with matrix coefficients, degree windows,
//!   projections, and invariant pairings.
//! - [`killing`]: the recursive formal Killing field tower and its
//!   verification suites.
//! - [`hierarchy`]: AKS flows, conservation laws, commutation lemmas, the
//!   Maurer-Cartan form of the hierarchy, and finite-type tests.
//! - [`so4`]: the `so(4, C)` repackaging of the Killing field and its flows.
//! - [`numerics`]: RK4 integration of truncated flows and sinh-Gordon
//!   residual checks.
//! - [`report`]: structured pass/fail reports for verification runs.

pub mod diffring;
pub mod error;
pub mod hierarchy;
pub mod killing;
pub mod loopalg;
pub mod numerics;
pub mod report;
pub mod scalar;
pub mod so4;

pub use error::{CoreError, Result};
