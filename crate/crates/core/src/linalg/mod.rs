//! Sparse storage, banded factorization, Sylvester inertia, dense eigensolvers
//! and shift-invert Arnoldi.

pub mod arnoldi;
pub mod banded;
pub mod dense;
pub mod inertia;
pub mod sparse;

pub use arnoldi::{shift_invert_eigs, ArnoldiOptions, EigenPair};
pub use banded::BandLu;
pub use sparse::CsrMatrix;
