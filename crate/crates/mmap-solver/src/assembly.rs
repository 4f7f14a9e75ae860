//! Finite-difference assembly of the MMAP block system
//!
//! ```text
//! [ A3  B  ] [Q]   [F]
//! [ A2  A1 ] [Φ] = [0]
//! ```
//!
//! The first block row discretizes `-Δ∥q - Δ⊥φ = f`, the second
//! `εΔ∥q - Δ∥φ = 0`. Interior equations are scaled by `h²`; boundary
//! equations are not.

use crate::field::{forcing_f, magnetic_field, FieldParams};
use crate::grid::{BoundaryClass, Case, GridSpec};
use crate::sparse::{BandedLu, CsrMatrix, TripletBuilder};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub grid: GridSpec,
    pub params: FieldParams,
    pub inflow: bool,
    pub a3: CsrMatrix,
    pub b: CsrMatrix,
    pub a2: CsrMatrix,
    pub a1: CsrMatrix,
    /// First-block right-hand side; the second block is zero.
    pub f: Vec<f64>,
}

impl BlockSystem {
    /// Points per field.
    pub fn n(&self) -> usize {
        self.grid.len()
    }

    /// Size of the full system.
    pub fn dim(&self) -> usize {
        2 * self.n()
    }

    /// `(F, 0)`
    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.f.clone();
        r.resize(self.dim(), 0.0);
        r
    }

    /// `y = A x` for the full block operator.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.n();
        if x.len() != 2 * n || y.len() != 2 * n {
            return Err(Error::Dimension {
                expected: 2 * n,
                got: x.len().min(y.len()),
            });
        }
        let (xq, xp) = x.split_at(n);
        let (yq, yp) = y.split_at_mut(n);
        let mut t = vec![0.0; n];
        self.a3.spmv_into(xq, yq)?;
        self.b.spmv_into(xp, &mut t)?;
        yq.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
        self.a2.spmv_into(xq, yp)?;
        self.a1.spmv_into(xp, &mut t)?;
        yp.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// The full `2n x 2n` matrix in block order.
    pub fn to_csr(&self) -> CsrMatrix {
        let n = self.n();
        let mut t = TripletBuilder::new(2 * n, 2 * n);
        for (r, c, v) in self.a3.triplets() {
            t.push(r, c, v);
        }
        for (r, c, v) in self.b.triplets() {
            t.push(r, c + n, v);
        }
        for (r, c, v) in self.a2.triplets() {
            t.push(r + n, c, v);
        }
        for (r, c, v) in self.a1.triplets() {
            t.push(r + n, c + n, v);
        }
        t.build().expect("block indices are in range")
    }

    /// The full matrix with unknowns ordered `(q_0, φ_0, q_1, φ_1, ...)`.
    /// This keeps the bandwidth close to twice that of a single block.
    pub fn interleaved(&self) -> CsrMatrix {
        let n = self.n();
        let mut t = TripletBuilder::new(2 * n, 2 * n);
        for (r, c, v) in self.a3.triplets() {
            t.push(2 * r, 2 * c, v);
        }
        for (r, c, v) in self.b.triplets() {
            t.push(2 * r, 2 * c + 1, v);
        }
        for (r, c, v) in self.a2.triplets() {
            t.push(2 * r + 1, 2 * c, v);
        }
        for (r, c, v) in self.a1.triplets() {
            t.push(2 * r + 1, 2 * c + 1, v);
        }
        t.build().expect("block indices are in range")
    }

    /// Direct banded solve of the full system; returns `(Q, Φ)` in block
    /// order.
    pub fn solve_direct(&self) -> Result<Vec<f64>> {
        let n = self.n();
        let lu = BandedLu::factorize(&self.interleaved())?;
        let mut x = vec![0.0; 2 * n];
        for (k, v) in self.f.iter().enumerate() {
            x[2 * k] = *v;
        }
        lu.solve_in_place(&mut x);
        let mut out = vec![0.0; 2 * n];
        for k in 0..n {
            out[k] = x[2 * k];
            out[n + k] = x[2 * k + 1];
        }
        Ok(out)
    }
}

/// Sparse 2D stencil: `(i, j, weight)` with 1-based grid indices.
#[derive(Debug, Clone, Default)]
pub struct Stencil(pub Vec<(usize, usize, f64)>);

impl Stencil {
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.0.push((i, j, v));
    }

    fn put(&self, t: &mut TripletBuilder, g: &GridSpec, row: usize, scale: f64) {
        for &(i, j, v) in &self.0 {
            t.push(row, g.idx(i, j), scale * v);
        }
    }

    /// Applies the stencil to point samples `u(i, j)`.
    pub fn apply<F: Fn(usize, usize) -> f64>(&self, u: F) -> f64 {
        self.0.iter().map(|&(i, j, v)| v * u(i, j)).sum()
    }
}

/// `h² Δ∥ʰ` at an interior point of the non-aligned grid, in flux form
///
/// ```text
/// (G_{i+1/2,j} - G_{i-1/2,j}) + (H_{i,j+1/2} - H_{i,j-1/2})
/// G_{i+1/2,j} = b11 (φ_{i+1,j} - φ_{i,j})
///             + b12/4 (φ_{i+1,j+1} + φ_{i,j+1} - φ_{i+1,j-1} - φ_{i,j-1})
/// H_{i,j+1/2} = b21/4 (φ_{i+1,j+1} + φ_{i+1,j} - φ_{i-1,j+1} - φ_{i-1,j})
///             + b22 (φ_{i,j+1} - φ_{i,j})
/// ```
///
/// with the tensor evaluated at the half points. The `H` flux samples
/// `b21` at `(i, j+1/2)`.
pub fn parallel_stencil(g: &GridSpec, beta: f64, i: usize, j: usize) -> Result<Stencil> {
    let (x, z, h) = (g.x(i), g.z(j), g.h);
    let e = magnetic_field(x + h / 2.0, z, beta)?;
    let w = magnetic_field(x - h / 2.0, z, beta)?;
    let nn = magnetic_field(x, z + h / 2.0, beta)?;
    let s = magnetic_field(x, z - h / 2.0, beta)?;
    let mut st = Stencil::default();
    // G east
    st.add(i + 1, j, e.b11);
    st.add(i, j, -e.b11);
    let q = 0.25 * e.b12;
    st.add(i + 1, j + 1, q);
    st.add(i, j + 1, q);
    st.add(i + 1, j - 1, -q);
    st.add(i, j - 1, -q);
    // - G west
    st.add(i, j, -w.b11);
    st.add(i - 1, j, w.b11);
    let q = 0.25 * w.b12;
    st.add(i, j + 1, -q);
    st.add(i - 1, j + 1, -q);
    st.add(i, j - 1, q);
    st.add(i - 1, j - 1, q);
    // H north
    let q = 0.25 * nn.b21;
    st.add(i + 1, j + 1, q);
    st.add(i + 1, j, q);
    st.add(i - 1, j + 1, -q);
    st.add(i - 1, j, -q);
    st.add(i, j + 1, nn.b22);
    st.add(i, j, -nn.b22);
    // - H south
    let q = 0.25 * s.b21;
    st.add(i + 1, j, -q);
    st.add(i + 1, j - 1, -q);
    st.add(i - 1, j, q);
    st.add(i - 1, j - 1, q);
    st.add(i, j, -s.b22);
    st.add(i, j - 1, s.b22);
    Ok(st)
}

/// `h² Δʰ`, the 5-point Laplacian.
pub fn laplace_stencil(i: usize, j: usize) -> Stencil {
    Stencil(vec![
        (i, j, -4.0),
        (i + 1, j, 1.0),
        (i - 1, j, 1.0),
        (i, j + 1, 1.0),
        (i, j - 1, 1.0),
    ])
}

/// `h n·∇∥` and `h n·∇⊥` at a top or bottom point of the non-aligned grid,
/// with `n = (0, 1)` and the tensor taken at the node. The z-derivative is
/// one-sided second order, the x-derivative central.
pub fn boundary_stencils(
    g: &GridSpec,
    beta: f64,
    i: usize,
    j: usize,
) -> Result<(Stencil, Stencil)> {
    let u = magnetic_field(g.x(i), g.z(j), beta)?;
    let dz: [(usize, f64); 3] = if j == 1 {
        [(1, -1.5), (2, 2.0), (3, -0.5)]
    } else {
        [(j, 1.5), (j - 1, -2.0), (j - 2, 0.5)]
    };
    let dx = [(i + 1, 0.5), (i - 1, -0.5)];
    let mut par = Stencil::default();
    let mut perp = Stencil::default();
    for &(ii, v) in &dx {
        par.add(ii, j, u.b12 * v);
        perp.add(ii, j, -u.b12 * v);
    }
    for &(jj, v) in &dz {
        par.add(i, jj, u.b22 * v);
        perp.add(i, jj, u.b11 * v);
    }
    Ok((par, perp))
}

/// Right-hand side: `h² f(x_i, z_j)` at interior points, zero elsewhere.
pub fn build_rhs(g: &GridSpec, p: &FieldParams) -> Vec<f64> {
    let mut f = vec![0.0; g.len()];
    let h2 = g.h * g.h;
    for i in 1..=g.nx {
        for j in 1..=g.nz {
            if g.class_of(i, j) == BoundaryClass::Interior {
                f[g.idx(i, j)] = h2 * forcing_f(g.x(i), g.z(j), p);
            }
        }
    }
    f
}

pub fn assemble(g: &GridSpec, p: &FieldParams, inflow: bool) -> Result<BlockSystem> {
    match g.case {
        Case::Aligned => aligned(g, p, inflow),
        Case::NonAligned => nonaligned(g, p, inflow),
    }
}

pub fn assemble_aligned(g: &GridSpec, p: &FieldParams) -> Result<BlockSystem> {
    if g.case != Case::Aligned {
        return Err(Error::Unsupported(
            "assemble_aligned needs an aligned grid".into(),
        ));
    }
    aligned(g, p, true)
}

pub fn assemble_nonaligned(g: &GridSpec, p: &FieldParams) -> Result<BlockSystem> {
    if g.case != Case::NonAligned {
        return Err(Error::Unsupported(
            "assemble_nonaligned needs a non-aligned grid".into(),
        ));
    }
    nonaligned(g, p, true)
}

/// The bottom inflow condition `q = 0` is replaced by
/// `n·∇∥q + n·∇⊥φ = 0`, which leaves `A3` singular.
pub fn assemble_noinflow(g: &GridSpec, p: &FieldParams) -> Result<BlockSystem> {
    assemble(g, p, false)
}

fn check_aligned_field(p: &FieldParams) -> Result<()> {
    if p.beta != 0.0 {
        return Err(Error::Unsupported(format!(
            "the aligned discretization assumes beta = 0, got {}",
            p.beta
        )));
    }
    Ok(())
}

fn aligned(g: &GridSpec, p: &FieldParams, inflow: bool) -> Result<BlockSystem> {
    check_aligned_field(p)?;
    let n = g.len();
    let eps = p.eps;
    let (nx, nz) = (g.nx, g.nz);
    let mut a3 = TripletBuilder::with_capacity(n, n, 3 * n);
    let mut b = TripletBuilder::with_capacity(n, n, 3 * n);
    let mut a2 = TripletBuilder::with_capacity(n, n, 3 * n);
    let mut a1 = TripletBuilder::with_capacity(n, n, 3 * n);
    for i in 1..=nx {
        for j in 1..=nz {
            let r = g.idx(i, j);
            match g.class_of(i, j) {
                BoundaryClass::DirichletX => {
                    a3.push(r, r, 1.0);
                    a1.push(r, r, 1.0);
                }
                BoundaryClass::NeumannBottom => {
                    if inflow {
                        a3.push(r, r, 1.0);
                    } else {
                        a3.push(r, r, 1.0);
                        a3.push(r, g.idx(i, 2), -1.0);
                    }
                    a2.push(r, r, 1.0);
                    a2.push(r, g.idx(i, 2), -1.0);
                }
                BoundaryClass::NeumannTop => {
                    a3.push(r, g.idx(i, nz - 1), -1.0);
                    a3.push(r, r, 1.0);
                    a1.push(r, g.idx(i, nz - 1), -1.0);
                    a1.push(r, r, 1.0);
                }
                BoundaryClass::Interior => {
                    // Known Dirichlet/inflow values move to the right-hand
                    // side (they are zero), which makes A3 and B symmetric.
                    if !(j == 2 && inflow) {
                        a3.push(r, g.idx(i, j - 1), -1.0);
                    }
                    a3.push(r, r, 2.0);
                    a3.push(r, g.idx(i, j + 1), -1.0);
                    if i != 2 {
                        b.push(r, g.idx(i - 1, j), -1.0);
                    }
                    b.push(r, r, 2.0);
                    if i != nx - 1 {
                        b.push(r, g.idx(i + 1, j), -1.0);
                    }
                    a2.push(r, g.idx(i, j - 1), eps);
                    a2.push(r, r, -2.0 * eps);
                    a2.push(r, g.idx(i, j + 1), eps);
                    a1.push(r, g.idx(i, j - 1), -1.0);
                    a1.push(r, r, 2.0);
                    a1.push(r, g.idx(i, j + 1), -1.0);
                }
            }
        }
    }
    Ok(BlockSystem {
        grid: *g,
        params: *p,
        inflow,
        a3: a3.build()?,
        b: b.build()?,
        a2: a2.build()?,
        a1: a1.build()?,
        f: build_rhs(g, p),
    })
}

fn nonaligned(g: &GridSpec, p: &FieldParams, inflow: bool) -> Result<BlockSystem> {
    let n = g.len();
    let eps = p.eps;
    let mut a3 = TripletBuilder::with_capacity(n, n, 9 * n);
    let mut b = TripletBuilder::with_capacity(n, n, 9 * n);
    let mut a2 = TripletBuilder::with_capacity(n, n, 9 * n);
    let mut a1 = TripletBuilder::with_capacity(n, n, 9 * n);
    for i in 1..=g.nx {
        for j in 1..=g.nz {
            let r = g.idx(i, j);
            match g.class_of(i, j) {
                BoundaryClass::DirichletX => {
                    a3.push(r, r, 1.0);
                    a1.push(r, r, 1.0);
                }
                BoundaryClass::NeumannBottom => {
                    let (par, perp) = boundary_stencils(g, p.beta, i, j)?;
                    if inflow {
                        a3.push(r, r, 1.0);
                    } else {
                        par.put(&mut a3, g, r, 1.0);
                        perp.put(&mut b, g, r, 1.0);
                    }
                    par.put(&mut a2, g, r, 1.0);
                    perp.put(&mut a1, g, r, 1.0);
                }
                BoundaryClass::NeumannTop => {
                    let (par, perp) = boundary_stencils(g, p.beta, i, j)?;
                    par.put(&mut a3, g, r, 1.0);
                    perp.put(&mut b, g, r, 1.0);
                    par.put(&mut a2, g, r, eps);
                    par.put(&mut a1, g, r, -1.0);
                }
                BoundaryClass::Interior => {
                    let par = parallel_stencil(g, p.beta, i, j)?;
                    par.put(&mut a3, g, r, -1.0);
                    par.put(&mut a2, g, r, eps);
                    par.put(&mut a1, g, r, -1.0);
                    // -Δ⊥ = -(Δ - Δ∥)
                    laplace_stencil(i, j).put(&mut b, g, r, -1.0);
                    par.put(&mut b, g, r, 1.0);
                }
            }
        }
    }
    Ok(BlockSystem {
        grid: *g,
        params: *p,
        inflow,
        a3: a3.build()?,
        b: b.build()?,
        a2: a2.build()?,
        a1: a1.build()?,
        f: build_rhs(g, p),
    })
}

/// Discretization of `-Δ∥ - εΔ⊥` with `φ = 0` on the x-sides and
/// `n·∇∥φ + ε n·∇⊥φ = 0` on top and bottom.
pub fn assemble_nonap(g: &GridSpec, p: &FieldParams) -> Result<CsrMatrix> {
    let n = g.len();
    let eps = p.eps;
    let mut s = TripletBuilder::with_capacity(n, n, 9 * n);
    match g.case {
        Case::Aligned => {
            check_aligned_field(p)?;
            for i in 1..=g.nx {
                for j in 1..=g.nz {
                    let r = g.idx(i, j);
                    match g.class_of(i, j) {
                        BoundaryClass::DirichletX => s.push(r, r, 1.0),
                        BoundaryClass::NeumannBottom => {
                            s.push(r, r, 1.0);
                            s.push(r, g.idx(i, 2), -1.0);
                        }
                        BoundaryClass::NeumannTop => {
                            s.push(r, r, 1.0);
                            s.push(r, g.idx(i, g.nz - 1), -1.0);
                        }
                        BoundaryClass::Interior => {
                            s.push(r, g.idx(i, j - 1), -1.0);
                            s.push(r, g.idx(i, j + 1), -1.0);
                            s.push(r, r, 2.0 + 2.0 * eps);
                            s.push(r, g.idx(i - 1, j), -eps);
                            s.push(r, g.idx(i + 1, j), -eps);
                        }
                    }
                }
            }
        }
        Case::NonAligned => {
            for i in 1..=g.nx {
                for j in 1..=g.nz {
                    let r = g.idx(i, j);
                    match g.class_of(i, j) {
                        BoundaryClass::DirichletX => s.push(r, r, 1.0),
                        BoundaryClass::NeumannBottom | BoundaryClass::NeumannTop => {
                            let (par, perp) = boundary_stencils(g, p.beta, i, j)?;
                            par.put(&mut s, g, r, 1.0);
                            perp.put(&mut s, g, r, eps);
                        }
                        BoundaryClass::Interior => {
                            let par = parallel_stencil(g, p.beta, i, j)?;
                            par.put(&mut s, g, r, -1.0);
                            laplace_stencil(i, j).put(&mut s, g, r, -eps);
                            par.put(&mut s, g, r, eps);
                        }
                    }
                }
            }
        }
    }
    s.build()
}
