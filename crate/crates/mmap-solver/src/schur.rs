//! Exact and approximate Schur complements of the block system.
//!
//! All approximations start from the non-AP operator or from `A1 + εB`,
//! which agrees with the exact complement `E = A1 - A2 A3⁻¹ B` away from the
//! bottom boundary. They differ in how the bottom rows are closed:
//!
//! | variant | bottom rows |
//! |---------|-------------|
//! | S1 | `n·∇∥φ + ε n·∇⊥φ = 0` (the whole matrix is the non-AP operator) |
//! | S2 | whole matrix `A1 - A2 diag(A3)⁻¹ B` |
//! | S3 | rows of S2 |
//! | S4 | rows of E |
//! | S5 | row of S1 + row of S3 |
//! | S6 | `2φ_{i,1} - φ_{i,2}` (aligned only, SPD) |

use std::fmt;
use std::str::FromStr;

use crate::assembly::{assemble_nonap, BlockSystem};
use crate::grid::Case;
use crate::sparse::dense::DenseLu;
use crate::sparse::{
    factorize, triple_product_diag, BandedLu, CsrMatrix, FactorKind, Factorization, TripletBuilder,
};
use crate::{Error, Result};

/// Largest `n_x · n_z` for which the exact complement is built.
pub const DENSE_LIMIT: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    Exact,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::S1,
        Variant::S2,
        Variant::S3,
        Variant::S4,
        Variant::S5,
        Variant::S6,
        Variant::Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::S1 => "s1",
            Variant::S2 => "s2",
            Variant::S3 => "s3",
            Variant::S4 => "s4",
            Variant::S5 => "s5",
            Variant::S6 => "s6",
            Variant::Exact => "exact",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown Schur variant `{s}`"))
    }
}

/// `M = base + P Δ`, where `P` selects `rows`. Solved with the
/// Sherman-Morrison-Woodbury identity around a banded factorization of
/// `base`.
#[derive(Debug, Clone)]
struct LowRank {
    n: usize,
    base: Factorization,
    rows: Vec<usize>,
    /// k x n
    delta: CsrMatrix,
    /// base⁻¹ P, column-major n x k
    z: Vec<f64>,
    cap: DenseLu,
}

impl LowRank {
    fn new(base_matrix: &CsrMatrix, target: &CsrMatrix, rows: &[usize]) -> Result<Self> {
        let n = base_matrix.n_rows();
        let k = rows.len();
        let base = factorize(base_matrix, FactorKind::Lu)?;
        let mut t = TripletBuilder::new(k, n);
        for (a, &r) in rows.iter().enumerate() {
            let (c1, v1) = target.row(r);
            for (&c, &v) in c1.iter().zip(v1) {
                t.push(a, c, v);
            }
            let (c0, v0) = base_matrix.row(r);
            for (&c, &v) in c0.iter().zip(v0) {
                t.push(a, c, -v);
            }
        }
        let delta = t.build()?;
        let mut z = vec![0.0; n * k];
        for (a, &r) in rows.iter().enumerate() {
            let col = &mut z[a * n..(a + 1) * n];
            col[r] = 1.0;
            base.solve_in_place(col, false)?;
        }
        // C = I + Δ Z
        let mut cap = vec![0.0; k * k];
        for a in 0..k {
            let (cols, vals) = delta.row(a);
            for b in 0..k {
                let zc = &z[b * n..(b + 1) * n];
                let s: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * zc[c]).sum();
                cap[a * k + b] = s + if a == b { 1.0 } else { 0.0 };
            }
        }
        let cap = DenseLu::factorize(k, cap)?;
        Ok(LowRank {
            n,
            base,
            rows: rows.to_vec(),
            delta,
            z,
            cap,
        })
    }

    fn solve_in_place(&self, x: &mut [f64], transpose: bool) -> Result<()> {
        let (n, k) = (self.n, self.rows.len());
        self.base.solve_in_place(x, transpose)?;
        if transpose {
            let mut s: Vec<f64> = self.rows.iter().map(|&r| x[r]).collect();
            self.cap.solve_transpose_in_place(&mut s);
            let mut u = self.delta.spmv_transpose(&s)?;
            self.base.solve_in_place(&mut u, true)?;
            x.iter_mut().zip(&u).for_each(|(a, b)| *a -= b);
        } else {
            let mut t = self.delta.spmv(x)?;
            self.cap.solve_in_place(&mut t);
            for (b, tb) in t.iter().enumerate().take(k) {
                if *tb != 0.0 {
                    let zc = &self.z[b * n..(b + 1) * n];
                    x.iter_mut().zip(zc).for_each(|(a, z)| *a -= tb * z);
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Solver {
    Banded(Factorization),
    LowRank(Box<LowRank>),
    /// `E⁻¹ y` is the φ part of `A⁻¹ (0, y)` for the full interleaved
    /// system.
    Augmented(BandedLu),
}

#[derive(Debug, Clone)]
pub struct SchurOperator {
    pub variant: Variant,
    /// Explicit matrix; `None` for the exact complement, which is only
    /// available through its solves (see [`exact_dense`]).
    pub matrix: Option<CsrMatrix>,
    pub case: Case,
    pub eps: f64,
    pub beta: f64,
    n: usize,
    solver: Solver,
}

impl SchurOperator {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Factorization used for the banded part of the solve.
    pub fn factor_kind(&self) -> FactorKind {
        match &self.solver {
            Solver::Banded(f) => f.kind(),
            _ => FactorKind::Lu,
        }
    }

    pub fn solve(&self, r: &[f64], transpose: bool) -> Result<Vec<f64>> {
        let mut x = r.to_vec();
        self.solve_in_place(&mut x, transpose)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64], transpose: bool) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        match &self.solver {
            Solver::Banded(f) => f.solve_in_place(x, transpose),
            Solver::LowRank(l) => l.solve_in_place(x, transpose),
            Solver::Augmented(lu) => {
                let mut y = vec![0.0; 2 * self.n];
                for (k, v) in x.iter().enumerate() {
                    y[2 * k + 1] = *v;
                }
                if transpose {
                    lu.solve_transpose_in_place(&mut y);
                } else {
                    lu.solve_in_place(&mut y);
                }
                for (k, v) in x.iter_mut().enumerate() {
                    *v = y[2 * k + 1];
                }
                Ok(())
            }
        }
    }
}

fn operator(
    sys: &BlockSystem,
    variant: Variant,
    matrix: Option<CsrMatrix>,
    solver: Solver,
) -> SchurOperator {
    SchurOperator {
        variant,
        matrix,
        case: sys.grid.case,
        eps: sys.params.eps,
        beta: sys.params.beta,
        n: sys.n(),
        solver,
    }
}

fn banded(
    sys: &BlockSystem,
    variant: Variant,
    m: CsrMatrix,
    kind: FactorKind,
) -> Result<SchurOperator> {
    let f = factorize(&m, kind)?;
    Ok(operator(sys, variant, Some(m), Solver::Banded(f)))
}

/// Factorization of `A3`: Cholesky for the aligned inflow block (SPD), LU
/// otherwise.
pub fn factorize_a3(sys: &BlockSystem) -> Result<Factorization> {
    let kind = if sys.grid.case == Case::Aligned && sys.inflow {
        FactorKind::Cholesky
    } else {
        FactorKind::Lu
    };
    factorize(&sys.a3, kind)
}

/// `A1 + εB`
pub fn base_matrix(sys: &BlockSystem) -> Result<CsrMatrix> {
    sys.a1.add_scaled(sys.params.eps, &sys.b)
}

pub fn s1_matrix(sys: &BlockSystem) -> Result<CsrMatrix> {
    assemble_nonap(&sys.grid, &sys.params)
}

pub fn s2_matrix(sys: &BlockSystem) -> Result<CsrMatrix> {
    let d = sys.a3.diagonal();
    let p = triple_product_diag(&sys.a2, &d, &sys.b)?;
    sys.a1.add_scaled(-1.0, &p)
}

pub fn s3_matrix(sys: &BlockSystem) -> Result<CsrMatrix> {
    base_matrix(sys)?.replace_rows(&sys.grid.bottom_rows(), &s2_matrix(sys)?)
}

/// Bottom rows of `E`, computed as `row_r(A1) - wᵀB` with `A3ᵀ w = A2ᵀ e_r`.
pub fn s4_matrix(sys: &BlockSystem, a3: &Factorization) -> Result<CsrMatrix> {
    let n = sys.n();
    let rows = sys.grid.bottom_rows();
    let mut t = TripletBuilder::new(n, n);
    for &r in &rows {
        let mut w = vec![0.0; n];
        let (cols, vals) = sys.a2.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            w[c] = v;
        }
        a3.solve_in_place(&mut w, true)?;
        let btw = sys.b.spmv_transpose(&w)?;
        for (c, v) in btw.iter().enumerate() {
            if *v != 0.0 {
                t.push(r, c, -v);
            }
        }
        let (cols, vals) = sys.a1.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            t.push(r, c, v);
        }
    }
    base_matrix(sys)?.replace_rows(&rows, &t.build()?)
}

pub fn s5_matrix(sys: &BlockSystem) -> Result<CsrMatrix> {
    s3_matrix(sys)?.add_rows(&sys.grid.bottom_rows(), &s1_matrix(sys)?)
}

pub fn s6_matrix(sys: &BlockSystem) -> Result<CsrMatrix> {
    if sys.grid.case != Case::Aligned {
        return Err(Error::Unsupported(
            "S6 is defined for the aligned case only".into(),
        ));
    }
    let g = &sys.grid;
    let n = g.len();
    let mut t = TripletBuilder::new(n, n);
    for i in 2..g.nx {
        t.push(g.idx(i, 1), g.idx(i, 1), 2.0);
        t.push(g.idx(i, 1), g.idx(i, 2), -1.0);
    }
    base_matrix(sys)?.replace_rows(&g.bottom_rows(), &t.build()?)
}

pub fn build_s1(sys: &BlockSystem) -> Result<SchurOperator> {
    banded(sys, Variant::S1, s1_matrix(sys)?, FactorKind::Lu)
}

pub fn build_s2(sys: &BlockSystem) -> Result<SchurOperator> {
    banded(sys, Variant::S2, s2_matrix(sys)?, FactorKind::Lu)
}

pub fn build_s3(sys: &BlockSystem) -> Result<SchurOperator> {
    banded(sys, Variant::S3, s3_matrix(sys)?, FactorKind::Lu)
}

pub fn build_s4(sys: &BlockSystem) -> Result<SchurOperator> {
    build_s4_with(sys, &factorize_a3(sys)?)
}

/// S4 reusing an existing factorization of `A3`. The bottom rows are dense
/// across x, so the solve goes through a low-rank update of `A1 + εB` with
/// identity bottom rows rather than a banded factorization of S4 itself.
pub fn build_s4_with(sys: &BlockSystem, a3: &Factorization) -> Result<SchurOperator> {
    let m = s4_matrix(sys, a3)?;
    let rows = sys.grid.bottom_rows();
    let base = base_matrix(sys)?.replace_rows(&rows, &CsrMatrix::identity(sys.n()))?;
    let lr = LowRank::new(&base, &m, &rows)?;
    Ok(operator(
        sys,
        Variant::S4,
        Some(m),
        Solver::LowRank(Box::new(lr)),
    ))
}

pub fn build_s5(sys: &BlockSystem) -> Result<SchurOperator> {
    banded(sys, Variant::S5, s5_matrix(sys)?, FactorKind::Lu)
}

pub fn build_s6(sys: &BlockSystem) -> Result<SchurOperator> {
    banded(sys, Variant::S6, s6_matrix(sys)?, FactorKind::Cholesky)
}

pub fn build_exact(sys: &BlockSystem) -> Result<SchurOperator> {
    if sys.n() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n: sys.n(),
            limit: DENSE_LIMIT,
        });
    }
    let lu = BandedLu::factorize(&sys.interleaved())?;
    Ok(operator(sys, Variant::Exact, None, Solver::Augmented(lu)))
}

pub fn build(sys: &BlockSystem, variant: Variant) -> Result<SchurOperator> {
    match variant {
        Variant::S1 => build_s1(sys),
        Variant::S2 => build_s2(sys),
        Variant::S3 => build_s3(sys),
        Variant::S4 => build_s4(sys),
        Variant::S5 => build_s5(sys),
        Variant::S6 => build_s6(sys),
        Variant::Exact => build_exact(sys),
    }
}

/// Builds `variant` reusing an `A3` factorization where one is needed.
pub fn build_with(
    sys: &BlockSystem,
    variant: Variant,
    a3: &Factorization,
) -> Result<SchurOperator> {
    match variant {
        Variant::S4 => build_s4_with(sys, a3),
        v => build(sys, v),
    }
}

/// Dense `E = A1 - A2 A3⁻¹ B` (row-major), one `A3` solve per column of
/// `B`.
pub fn exact_dense(sys: &BlockSystem) -> Result<Vec<f64>> {
    let n = sys.n();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let a3 = factorize(&sys.a3, FactorKind::Lu)?;
    let bt = sys.b.transpose();
    let mut e = sys.a1.to_dense();
    for c in 0..n {
        let (rows, vals) = bt.row(c);
        if rows.is_empty() {
            continue;
        }
        let mut col = vec![0.0; n];
        for (&r, &v) in rows.iter().zip(vals) {
            col[r] = v;
        }
        a3.solve_in_place(&mut col, false)?;
        let y = sys.a2.spmv(&col)?;
        for r in 0..n {
            e[r * n + c] -= y[r];
        }
    }
    Ok(e)
}

/// The aligned `A3` diagonal block of size `size`:
/// `diag(1, T)` where `T` is tridiagonal `(-1, 2, -1)` with a trailing 1.
pub fn a3_block(size: usize) -> Vec<f64> {
    let mut a = vec![0.0; size * size];
    a[0] = 1.0;
    for r in 1..size {
        a[r * size + r] = if r + 1 == size { 1.0 } else { 2.0 };
        if r > 1 {
            a[r * size + r - 1] = -1.0;
        }
        if r + 1 < size {
            a[r * size + r + 1] = -1.0;
        }
    }
    a
}

/// Closed-form inverse of [`a3_block`]: `diag(1, C)` with
/// `C = [min(i, j)]`, `i, j = 1..size-1`.
pub fn closed_form_a3_inverse(size: usize) -> Vec<f64> {
    let mut a = vec![0.0; size * size];
    if size == 0 {
        return a;
    }
    a[0] = 1.0;
    for i in 1..size {
        for j in 1..size {
            a[i * size + j] = i.min(j) as f64;
        }
    }
    a
}

/// The block `b1` of `-A2 A3⁻¹ B` in the aligned case: first row
/// `(0, 1, ..., 1, 0)`, then `ε` on the diagonal for rows `2..size-1`, last
/// row zero. `-A2 A3⁻¹ B` is block tridiagonal `(-b1, 2b1, -b1)` in x.
pub fn closed_form_a2a3invb(size: usize, eps: f64) -> Vec<f64> {
    let mut b = vec![0.0; size * size];
    for c in 1..size.saturating_sub(1) {
        b[c] = 1.0;
    }
    for r in 1..size.saturating_sub(1) {
        b[r * size + r] = eps;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("s7".parse::<Variant>().is_err());
    }

    #[test]
    fn min_table() {
        let c = closed_form_a3_inverse(3);
        assert_eq!(c, vec![1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn b1_shape() {
        let b = closed_form_a2a3invb(5, 0.0);
        assert_eq!(&b[..5], &[0.0, 1.0, 1.0, 1.0, 0.0]);
        assert!(b[5..].iter().all(|&v| v == 0.0));
        let b = closed_form_a2a3invb(5, 0.5);
        for r in 1..4 {
            assert_eq!(b[r * 5 + r], 0.5);
        }
    }
}
