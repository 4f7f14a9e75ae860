//! Micro-macro asymptotic-preserving (MMAP) discretization of the strongly
//! anisotropic elliptic problem
//!
//! ```text
//! -Δ⊥φ - (1/ε) Δ∥φ = f   on (0,1)²
//! ```
//!
//! together with the block lower-triangular preconditioners built from six
//! approximate Schur complements and a non-restarted GMRES driver.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] structured meshes, lexicographic indexing, boundary classes
//! * [`field`] magnetic field, manufactured solution and forcing
//! * [`sparse`] CSR matrices, banded LU/Cholesky, Matrix Market I/O
//! * [`assembly`] the block system `[A3 B; A2 A1]` and the non-AP operator
//! * [`schur`] exact and approximate Schur complements
//! * [`krylov`] block preconditioner, GMRES, Ritz values
//! * [`analysis`] condition numbers, slope fits, error norms

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod field;
pub mod grid;
pub mod krylov;
pub mod schur;
pub mod sparse;

pub use error::{Error, Result};
