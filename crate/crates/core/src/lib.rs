//! Numerical laboratory for linear Schroedinger evolution on rectangular tori:
//! Galerkin propagators, dispersive and resolvent estimate scans, observability
//! Gramians, HUM control, sector geometry and low-frequency elimination.

pub mod control;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod linalg;
pub mod lowfreq;
pub mod observability;
pub mod rng;
pub mod spectral1d;
pub mod spectral2d;
pub mod torus;

pub use error::{Error, Result};
pub use num_complex::Complex64;
