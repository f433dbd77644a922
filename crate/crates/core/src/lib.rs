//! Rational quartic fractal interpolation.
//!
//! Curves are α-fractal generalizations of a C¹ rational quartic spline with a
//! linear denominator; surfaces blend networks of such curves with cubic
//! Hermite weights in a bicubic partially blended Coons scheme. The
//! [`constraints`] and [`surface`] modules compute parameter ranges under
//! which the curves stay inside a rectangle or above a line, and the blended
//! surfaces inside a box or above a plane.

pub mod constraints;
pub mod convergence;
pub mod error;
pub mod ifs;
pub mod spline;
pub mod surface;

pub use error::{Error, Result};
