//! Band-storage LU (partial pivoting) and Cholesky factorizations.
//!
//! LU keeps row `i` in a window of columns `[i-kl, i+kl+ku]`. Row exchanges
//! stay inside the `kl` rows below the pivot, so the window always holds
//! the pivoted row and `U` never needs more than `kl+ku` superdiagonals.
//! Multipliers are left in place, as in LAPACK `gbtrf`, and the solves
//! replay the swaps in the order they happened.

use super::csr::CsrMatrix;
use crate::{Error, Result};

/// A pivot with `|p| <= PIVOT_TOL * max|A|` is treated as zero.
pub const PIVOT_TOL: f64 = 1e-14;

/// Largest `|A - Aᵀ|` accepted by Cholesky, relative to `max(1, max|A|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Lu,
    Cholesky,
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn factorize(a: &CsrMatrix) -> Result<Self> {
        let n = square(a)?;
        let (kl, ku) = a.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut data = vec![0.0; n * width];
        for (r, c, v) in a.triplets() {
            data[r * width + c + kl - r] = v;
        }
        let tiny = PIVOT_TOL * a.max_abs();
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = data[k * width + kl].abs();
            for r in k + 1..=last {
                let v = data[r * width + k + kl - r].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularFactorization {
                    row: k,
                    pivot: data[p * width + k + kl - p],
                });
            }
            piv[k] = p;
            let cmax = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    data.swap(k * width + c + kl - k, p * width + c + kl - p);
                }
            }
            let pivot = data[k * width + kl];
            let (head, tail) = data.split_at_mut((k + 1) * width);
            let prow = &head[k * width + kl + 1..=k * width + kl + cmax - k];
            for r in k + 1..=last {
                // position of (r, k) inside `tail`
                let off = (r - k - 1) * width + kl + k - r;
                let l = tail[off] / pivot;
                tail[off] = l;
                if l != 0.0 {
                    let dst = &mut tail[off + 1..=off + cmax - k];
                    for (d, s) in dst.iter_mut().zip(prow) {
                        *d -= l * s;
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            width,
            data,
            piv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c + self.kl - r]
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    x[r] -= self.at(r, k) * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.at(k, c) * x[c];
            }
            x[k] = s / self.at(k, k);
        }
    }

    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        // Uᵀ y = r
        for k in 0..n {
            let mut s = x[k];
            for i in k.saturating_sub(kl + ku)..k {
                s -= self.at(i, k) * x[i];
            }
            x[k] = s / self.at(k, k);
        }
        // Undo the elimination steps in reverse.
        for k in (0..n).rev() {
            let mut s = x[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                s -= self.at(r, k) * x[r];
            }
            x[k] = s;
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    k: usize,
    /// Row i holds L[i, i-k..=i].
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn factorize(a: &CsrMatrix) -> Result<Self> {
        let n = square(a)?;
        let asym = a.asymmetry();
        if asym > SYMMETRY_TOL * a.max_abs().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        let (k, _) = a.bandwidth();
        let w = k + 1;
        let mut data = vec![0.0; n * w];
        for (r, c, v) in a.triplets() {
            if c <= r {
                data[r * w + c + k - r] = v;
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(k);
            for j in lo..=i {
                let mut s = data[i * w + j + k - i];
                let lo2 = lo.max(j.saturating_sub(k));
                let ri = &data[i * w + lo2 + k - i..i * w + j + k - i];
                let rj = &data[j * w + lo2 + k - j..j * w + k];
                s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::NotSpd { row: i, pivot: s });
                    }
                    data[i * w + k] = s.sqrt();
                } else {
                    data[i * w + j + k - i] = s / data[j * w + k];
                }
            }
        }
        Ok(BandedCholesky { n, k, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn l(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.k + 1) + c + self.k - r]
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, k) = (self.n, self.k);
        for i in 0..n {
            let mut s = x[i];
            for p in i.saturating_sub(k)..i {
                s -= self.l(i, p) * x[p];
            }
            x[i] = s / self.l(i, i);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for r in i + 1..=(i + k).min(n - 1) {
                s -= self.l(r, i) * x[r];
            }
            x[i] = s / self.l(i, i);
        }
    }
}

#[derive(Debug, Clone)]
pub enum Factorization {
    Lu(BandedLu),
    Cholesky(BandedCholesky),
}

pub fn factorize(a: &CsrMatrix, kind: FactorKind) -> Result<Factorization> {
    Ok(match kind {
        FactorKind::Lu => Factorization::Lu(BandedLu::factorize(a)?),
        FactorKind::Cholesky => Factorization::Cholesky(BandedCholesky::factorize(a)?),
    })
}

impl Factorization {
    pub fn kind(&self) -> FactorKind {
        match self {
            Factorization::Lu(_) => FactorKind::Lu,
            Factorization::Cholesky(_) => FactorKind::Cholesky,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Factorization::Lu(f) => f.dim(),
            Factorization::Cholesky(f) => f.dim(),
        }
    }

    /// Solves `A x = r`, or `Aᵀ x = r` when `transpose` is set.
    pub fn solve(&self, r: &[f64], transpose: bool) -> Result<Vec<f64>> {
        let mut x = r.to_vec();
        self.solve_in_place(&mut x, transpose)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64], transpose: bool) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match self {
            Factorization::Lu(f) if transpose => f.solve_transpose_in_place(x),
            Factorization::Lu(f) => f.solve_in_place(x),
            Factorization::Cholesky(f) => f.solve_in_place(x),
        }
        Ok(())
    }
}

fn square(a: &CsrMatrix) -> Result<usize> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::Dimension {
            expected: a.n_rows(),
            got: a.n_cols(),
        });
    }
    Ok(a.n_rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::csr::assemble;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        assemble(n, n, &t).unwrap()
    }

    #[test]
    fn zero_rhs_and_identity() {
        let f = factorize(&CsrMatrix::identity(5), FactorKind::Lu).unwrap();
        let r = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(f.solve(&r, false).unwrap(), r.to_vec());
        let f = factorize(&tridiag(5), FactorKind::Cholesky).unwrap();
        assert_eq!(f.solve(&[0.0; 5], false).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn null_row_is_singular() {
        let a = assemble(3, 3, &[(0, 0, 1.0), (2, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert!(matches!(
            factorize(&a, FactorKind::Lu),
            Err(Error::SingularFactorization { .. })
        ));
    }

    #[test]
    fn cholesky_rejects_indefinite_and_asymmetric() {
        let a = tridiag(4).scale(-1.0);
        assert!(matches!(
            factorize(&a, FactorKind::Cholesky),
            Err(Error::NotSpd { row: 0, .. })
        ));
        let b = assemble(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 2.0)]).unwrap();
        assert!(matches!(
            factorize(&b, FactorKind::Cholesky),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn zero_diagonal_needs_pivoting() {
        // [[0, 1], [1, 0]] breaks elimination without row exchanges.
        let a = assemble(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let f = factorize(&a, FactorKind::Lu).unwrap();
        assert_eq!(f.solve(&[3.0, 4.0], false).unwrap(), vec![4.0, 3.0]);
        assert_eq!(f.solve(&[3.0, 4.0], true).unwrap(), vec![4.0, 3.0]);
    }
}
