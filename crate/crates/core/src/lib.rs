//! Trapped modes and Stark resonances of curved two-dimensional quantum waveguides.
//!
//! The pipeline: a curvature model fixes the strip geometry ([`geometry`]),
//! the field enters through the tube-coordinate interaction ([`fields`]), an
//! exterior complex distortion ([`distortion`]) turns resonances into
//! eigenvalues of a non-Hermitian finite-difference operator ([`discretize`]),
//! and [`spectra`] extracts them. [`lab`] wires it to configuration files and
//! a command line.

pub mod discretize;
pub mod distortion;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod lab;
pub mod linalg;
pub mod quadrature;
pub mod spectra;
pub mod stats;

pub use error::{Error, Result};
