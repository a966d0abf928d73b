//! affgeo: a desk-scale verification laboratory for the differential
//! geometry of convex graphs and centroaffine immersions.
//!
//! The crate turns closed-form surface definitions (including iterated
//! definite integrals) into numeric certificates: metric tensors, cubic
//! forms, Tchebychev fields, curvatures, fourth-order PDE residuals,
//! second variations and structure-equation residuals, each checked
//! against stated tolerances on sample grids.
//!
//! Layering, bottom to top:
//!
//! * [`expr`] - expression programs and their textual grammar;
//! * [`jet`] - truncated multivariate Taylor arithmetic plus the
//!   finite-difference oracle;
//! * [`quad`] - adaptive Gauss-Kronrod and composite Gauss-Legendre rules;
//! * [`riemann`] - pointwise Riemannian computations for any metric
//!   delivered as jets;
//! * [`calabi`] - geometry of graphs under the constant transversal
//!   normalization;
//! * [`centroaffine`] - geometry of immersions with the position vector
//!   as transversal;
//! * [`catalog`] - the surface atlas with expected invariants;
//! * [`verify`] - the check engine producing machine-readable reports.

// Index loops mirror the tensor formulas they implement; collapsing them
// into iterator chains would hide the index symmetry the math is about.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::type_complexity)]

pub mod calabi;
pub mod catalog;
pub mod centroaffine;
pub mod error;
pub mod expr;
pub mod jet;
pub mod quad;
pub mod riemann;
pub mod verify;

pub use error::{Error, Result};
