use thiserror::Error;

use crate::sparse::mtx::MtxError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: N = {0} (need N >= 4)")]
    InvalidGrid(usize),

    #[error("grid index ({i}, {j}) out of range for {nx} x {nz} grid")]
    Index {
        i: usize,
        j: usize,
        nx: usize,
        nz: usize,
    },

    #[error("degenerate magnetic field at ({x}, {z}): |B| = 0")]
    DegenerateField { x: f64, z: f64 },

    #[error("triplet ({row}, {col}) out of range for {n_rows} x {n_cols} matrix")]
    Assembly {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("zero diagonal entry at row {0}")]
    SingularDiagonal(usize),

    #[error("singular factorization: pivot {pivot:e} at row {row}")]
    SingularFactorization { row: usize, pivot: f64 },

    #[error("matrix is not symmetric positive definite: pivot {pivot:e} at row {row}")]
    NotSpd { row: usize, pivot: f64 },

    #[error("matrix is not symmetric: max |A - A^T| = {0:e}")]
    NotSymmetric(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("problem size {n} exceeds the dense limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("diagnostic unavailable: {0}")]
    Diagnostic(String),

    #[error(transparent)]
    Mtx(#[from] MtxError),
}
