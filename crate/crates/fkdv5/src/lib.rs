//! Symmetry analysis toolkit for generalized fifth-order KdV equations
//! with time-dependent coefficients,
//!
//! ```text
//! u_t + u^n u_x + α(t) u + β(t) u_xxxxx = 0,   n ∉ {0, 1}.
//! ```
//!
//! The crate classifies members of this class by their Lie point symmetries,
//! applies equivalence transformations (including the gauge removing α and
//! the constructive reduction to constant coefficients), computes the Lie
//! algebra structure of the symmetries, performs the similarity reductions
//! to fifth-order ODEs, lifts integrated trajectories back to PDE solutions,
//! and verifies every candidate solution by residual evaluation.
//!
//! See the guide in `book/` for a narrative walkthrough; the `fkdv5` binary
//! exposes the pipeline on the command line.

pub mod algebra;
pub mod classify;
pub mod expr;
pub mod gauge;
pub mod quad;
pub mod reduce;
pub mod report;
pub mod series;
pub mod timefn;
pub mod verify;

#[cfg(doctest)]
mod book;

pub use expr::Expr;
pub use gauge::{EquationSpec, EquivTransform, TimeMap};
pub use timefn::TimeFn;
