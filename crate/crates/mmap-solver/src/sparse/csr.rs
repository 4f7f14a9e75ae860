use crate::{Error, Result};

/// Compressed sparse row matrix with 0-based indices.
///
/// Column indices are strictly increasing within a row. Entries that sum to
/// exactly zero are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` triplets; duplicates are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        TripletBuilder {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        TripletBuilder {
            n_rows,
            n_cols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn build(self) -> Result<CsrMatrix> {
        assemble(self.n_rows, self.n_cols, &self.entries)
    }
}

/// Builds a canonical CSR matrix from triplets, summing duplicates.
pub fn assemble(
    n_rows: usize,
    n_cols: usize,
    triplets: &[(usize, usize, f64)],
) -> Result<CsrMatrix> {
    let mut counts = vec![0usize; n_rows + 1];
    for &(r, c, _) in triplets {
        if r >= n_rows || c >= n_cols {
            return Err(Error::Assembly {
                row: r,
                col: c,
                n_rows,
                n_cols,
            });
        }
        counts[r + 1] += 1;
    }
    for k in 0..n_rows {
        counts[k + 1] += counts[k];
    }
    let mut cursor = counts.clone();
    let mut cols = vec![0usize; triplets.len()];
    let mut vals = vec![0.0; triplets.len()];
    for &(r, c, v) in triplets {
        cols[cursor[r]] = c;
        vals[cursor[r]] = v;
        cursor[r] += 1;
    }

    let mut row_offsets = Vec::with_capacity(n_rows + 1);
    let mut col_indices = Vec::with_capacity(triplets.len());
    let mut values = Vec::with_capacity(triplets.len());
    row_offsets.push(0);
    let mut scratch: Vec<(usize, f64)> = Vec::new();
    for r in 0..n_rows {
        scratch.clear();
        scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
        scratch.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < scratch.len() {
            let c = scratch[k].0;
            let mut sum = 0.0;
            while k < scratch.len() && scratch[k].0 == c {
                sum += scratch[k].1;
                k += 1;
            }
            if sum != 0.0 {
                col_indices.push(c);
                values.push(sum);
            }
        }
        row_offsets.push(col_indices.len());
    }
    Ok(CsrMatrix {
        n_rows,
        n_cols,
        row_offsets,
        col_indices,
        values,
    })
}

impl CsrMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CsrMatrix {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from row-major dense storage, dropping zeros.
    pub fn from_dense(n_rows: usize, n_cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Dimension {
                expected: n_rows * n_cols,
                got: data.len(),
            });
        }
        let mut t = Vec::new();
        for r in 0..n_rows {
            for c in 0..n_cols {
                let v = data[r * n_cols + c];
                if v != 0.0 {
                    t.push((r, c, v));
                }
            }
        }
        assemble(n_rows, n_cols, &t)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows * self.n_cols];
        for (r, c, v) in self.triplets() {
            d[r * self.n_cols + c] = v;
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// (lower, upper) bandwidth: max of i-j and j-i over stored entries.
    pub fn bandwidth(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for (r, c, _) in self.triplets() {
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        (kl, ku)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|r| self.get(r, r))
            .collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        assemble(self.n_cols, self.n_rows, &t).expect("transpose indices are in range")
    }

    /// max |A - Aᵀ| over all entries, or infinity for non-square matrices.
    pub fn asymmetry(&self) -> f64 {
        if self.n_rows != self.n_cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - self.get(c, r)).abs());
        }
        worst
    }

    pub fn scale(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out.drop_zeros();
        out
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let t: Vec<_> = self.triplets().filter(|e| e.2 != 0.0).collect();
        *self = assemble(self.n_rows, self.n_cols, &t).expect("indices are in range");
    }

    /// y = A x
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::Dimension {
                expected: self.n_rows,
                got: y.len(),
            });
        }
        for (r, yr) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_offsets[r], self.row_offsets[r + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * x[self.col_indices[k]];
            }
            *yr = s;
        }
        Ok(())
    }

    /// y = Aᵀ x
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_rows {
            return Err(Error::Dimension {
                expected: self.n_rows,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_cols];
        for (r, &xr) in x.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        Ok(y)
    }

    fn same_shape(&self, other: &CsrMatrix) -> Result<()> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::Dimension {
                expected: self.n_rows * self.n_cols,
                got: other.n_rows * other.n_cols,
            });
        }
        Ok(())
    }

    fn check_rows(&self, rows: &[usize]) -> Result<()> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::Assembly {
                row: bad,
                col: 0,
                n_rows: self.n_rows,
                n_cols: self.n_cols,
            });
        }
        Ok(())
    }

    /// C = A + αB with merged sparsity.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> Result<CsrMatrix> {
        self.same_shape(other)?;
        let t: Vec<_> = self
            .triplets()
            .chain(other.triplets().map(|(r, c, v)| (r, c, alpha * v)))
            .collect();
        assemble(self.n_rows, self.n_cols, &t)
    }

    /// Listed rows are copied from `source`; all other rows are kept.
    pub fn replace_rows(&self, rows: &[usize], source: &CsrMatrix) -> Result<CsrMatrix> {
        self.same_shape(source)?;
        self.check_rows(rows)?;
        let mut mark = vec![false; self.n_rows];
        rows.iter().for_each(|&r| mark[r] = true);
        let t: Vec<_> = self
            .triplets()
            .filter(|e| !mark[e.0])
            .chain(source.triplets().filter(|e| mark[e.0]))
            .collect();
        assemble(self.n_rows, self.n_cols, &t)
    }

    /// Listed rows become `row(A) + row(source)`; all other rows are kept.
    pub fn add_rows(&self, rows: &[usize], source: &CsrMatrix) -> Result<CsrMatrix> {
        self.same_shape(source)?;
        self.check_rows(rows)?;
        let mut mark = vec![false; self.n_rows];
        rows.iter().for_each(|&r| mark[r] = true);
        let t: Vec<_> = self
            .triplets()
            .chain(source.triplets().filter(|e| mark[e.0]))
            .collect();
        assemble(self.n_rows, self.n_cols, &t)
    }

    /// General sparse product A·B.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::Dimension {
                expected: self.n_cols,
                got: other.n_rows,
            });
        }
        let mut t = Vec::new();
        for r in 0..self.n_rows {
            let (ac, av) = self.row(r);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&c, &b) in bc.iter().zip(bv) {
                    t.push((r, c, a * b));
                }
            }
        }
        assemble(self.n_rows, other.n_cols, &t)
    }
}

/// A2 · diag(d)⁻¹ · B.
pub fn triple_product_diag(a2: &CsrMatrix, d: &[f64], b: &CsrMatrix) -> Result<CsrMatrix> {
    if d.len() != a2.n_cols() {
        return Err(Error::Dimension {
            expected: a2.n_cols(),
            got: d.len(),
        });
    }
    if let Some(k) = d.iter().position(|v| v.abs() <= 1e-300) {
        return Err(Error::SingularDiagonal(k));
    }
    let t: Vec<_> = a2.triplets().map(|(r, c, v)| (r, c, v / d[c])).collect();
    let scaled = assemble(a2.n_rows(), a2.n_cols(), &t)?;
    scaled.matmul(b)
}
