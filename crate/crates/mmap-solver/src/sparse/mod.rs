//! Sparse and banded linear algebra used by the assembly and solvers.

pub mod banded;
pub mod csr;
pub mod dense;
pub mod mtx;

pub use banded::{factorize, BandedCholesky, BandedLu, FactorKind, Factorization};
pub use csr::{assemble, triple_product_diag, CsrMatrix, TripletBuilder};
