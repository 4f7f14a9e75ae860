//! Small dense LU with partial pivoting, row-major storage.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn factorize(n: usize, mut a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: a.len(),
            });
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut piv = vec![0; n];
        for k in 0..n {
            let mut p = k;
            for r in k + 1..n {
                if a[r * n + k].abs() > a[p * n + k].abs() {
                    p = r;
                }
            }
            let pivot = a[p * n + k];
            if !(pivot.abs() > super::banded::PIVOT_TOL * scale) {
                return Err(Error::SingularFactorization { row: k, pivot });
            }
            piv[k] = p;
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
            }
            for r in k + 1..n {
                let l = a[r * n + k] / pivot;
                a[r * n + k] = l;
                if l != 0.0 {
                    for c in k + 1..n {
                        a[r * n + c] -= l * a[k * n + c];
                    }
                }
            }
        }
        Ok(DenseLu { n, a, piv })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.a[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.a[r * n + c] * x[c];
            }
            x[r] = s / self.a[r * n + r];
        }
    }

    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.a[c * n + r] * x[c];
            }
            x[r] = s / self.a[r * n + r];
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.a[c * n + r] * x[c];
            }
            x[r] = s;
        }
        for k in (0..n).rev() {
            x.swap(k, self.piv[k]);
        }
    }
}
