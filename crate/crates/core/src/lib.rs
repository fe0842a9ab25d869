//! Cauchy-Fantappiè forms, Bochner-Martinelli and Cauchy-Leray kernels,
//! convexity diagnostics and discretized boundary operators in `C^n`.
//!
//! The layers build on each other: [`geometry`] (defining functions, Levi
//! form, convexity margins), [`forms`] (pointwise exterior algebra),
//! [`kernels`] (generating forms and kernel densities), [`quadrature`]
//! (sphere, radial-graph and volume rules) and [`operators`] (kernel
//! application, matrices, Kerzman-Stein projections). [`experiments`] runs the
//! batch studies behind the `cfkit` binary.

pub mod error;
pub mod experiments;
pub mod forms;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod operators;
pub mod quadrature;

pub use error::{Error, Result};
pub use linalg::{CxMatrix, CxVector};
