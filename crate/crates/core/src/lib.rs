//! Strong-form meshless solver for 2D linear elasticity and small-strain
//! von Mises elasto-plasticity using polyharmonic-spline RBF-FD stencils.

pub mod approx;
pub mod assembly;
pub mod benchmarks;
pub mod constitutive;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linsolve;
pub mod point;
pub mod solver;
pub mod spatial;

pub use error::{Error, Result};
