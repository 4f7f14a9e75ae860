//! Structured meshes on the unit square.
//!
//! Indices in the public API are 1-based, `i` along x and `j` along z, and
//! the lexicographic order counts first in z: `lexico(i, j) = j + (i-1) n_z`.
//! Storage offsets used by the matrices are the 0-based `lexico - 1`.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// Field parallel to the z axis. Cell-staggered in z with one ghost
    /// layer below z = 0 and one above z = 1.
    Aligned,
    /// Curved field lines. Nodes on the boundary in both directions.
    NonAligned,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Aligned => "aligned",
            Case::NonAligned => "nonaligned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    Interior,
    /// x = 0 or x = 1, corners included.
    DirichletX,
    /// z = 0 (the inflow side).
    NeumannBottom,
    /// z = 1.
    NeumannTop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub case: Case,
    /// Mesh parameter.
    pub n: usize,
    pub nx: usize,
    pub nz: usize,
    pub h: f64,
}

pub fn make_grid(case: Case, n: usize) -> Result<GridSpec> {
    if n < 4 {
        return Err(Error::InvalidGrid(n));
    }
    let h = 1.0 / (n - 1) as f64;
    let (nx, nz) = match case {
        Case::Aligned => (n, n + 1),
        Case::NonAligned => (n, n),
    };
    Ok(GridSpec { case, n, nx, nz, h })
}

impl GridSpec {
    /// Number of points per field.
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || j == 0 || i > self.nx || j > self.nz {
            return Err(Error::Index {
                i,
                j,
                nx: self.nx,
                nz: self.nz,
            });
        }
        Ok(())
    }

    /// 1-based lexicographic number of point (i, j).
    pub fn lexico(&self, i: usize, j: usize) -> Result<usize> {
        self.check(i, j)?;
        Ok(j + (i - 1) * self.nz)
    }

    /// Inverse of [`lexico`](Self::lexico).
    pub fn unlexico(&self, k: usize) -> Result<(usize, usize)> {
        if k == 0 || k > self.len() {
            return Err(Error::Index {
                i: k,
                j: 0,
                nx: self.nx,
                nz: self.nz,
            });
        }
        Ok(((k - 1) / self.nz + 1, (k - 1) % self.nz + 1))
    }

    /// 0-based storage offset of (i, j). Indices are not range-checked.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        (j - 1) + (i - 1) * self.nz
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - 1.0) * self.h
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        match self.case {
            Case::Aligned => (j as f64 - 1.5) * self.h,
            Case::NonAligned => (j as f64 - 1.0) * self.h,
        }
    }

    pub fn classify(&self, i: usize, j: usize) -> Result<BoundaryClass> {
        self.check(i, j)?;
        Ok(self.class_of(i, j))
    }

    #[inline]
    pub(crate) fn class_of(&self, i: usize, j: usize) -> BoundaryClass {
        if i == 1 || i == self.nx {
            BoundaryClass::DirichletX
        } else if j == 1 {
            BoundaryClass::NeumannBottom
        } else if j == self.nz {
            BoundaryClass::NeumannTop
        } else {
            BoundaryClass::Interior
        }
    }

    /// Storage offsets of the bottom Neumann points, ordered by i.
    pub fn bottom_rows(&self) -> Vec<usize> {
        (2..self.nx).map(|i| self.idx(i, 1)).collect()
    }

    /// True when the point lies in the closed unit square. Only the aligned
    /// ghost layers j = 1 and j = n_z fall outside.
    pub fn inside_domain(&self, j: usize) -> bool {
        match self.case {
            Case::Aligned => j != 1 && j != self.nz,
            Case::NonAligned => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_sizes() {
        let g = make_grid(Case::Aligned, 32).unwrap();
        assert_eq!((g.nx, g.nz), (32, 33));
        assert_eq!(g.h, 1.0 / 31.0);
    }

    #[test]
    fn nonaligned_sizes() {
        let g = make_grid(Case::NonAligned, 32).unwrap();
        assert_eq!((g.nx, g.nz), (32, 32));
        assert_eq!(g.h, 1.0 / 31.0);
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            make_grid(Case::Aligned, 3),
            Err(Error::InvalidGrid(3))
        ));
    }

    #[test]
    fn lexico_examples() {
        let g = make_grid(Case::Aligned, 32).unwrap();
        assert_eq!(g.lexico(1, 1).unwrap(), 1);
        assert_eq!(g.lexico(2, 1).unwrap(), 34);
        assert!(g.lexico(0, 1).is_err());
        assert!(g.lexico(33, 1).is_err());
        assert!(g.lexico(1, 34).is_err());
    }

    #[test]
    fn classify_examples() {
        let g = make_grid(Case::NonAligned, 32).unwrap();
        assert_eq!(g.classify(1, 5).unwrap(), BoundaryClass::DirichletX);
        assert_eq!(g.classify(5, 1).unwrap(), BoundaryClass::NeumannBottom);
        assert_eq!(g.classify(5, 5).unwrap(), BoundaryClass::Interior);
        assert_eq!(g.classify(32, 32).unwrap(), BoundaryClass::DirichletX);
        assert_eq!(g.classify(5, 32).unwrap(), BoundaryClass::NeumannTop);
    }

    #[test]
    fn aligned_ghost_layers_straddle_boundary() {
        let g = make_grid(Case::Aligned, 16).unwrap();
        assert!(g.z(1) < 0.0 && 0.0 < g.z(2));
        assert!(g.z(g.nz - 1) < 1.0 && 1.0 < g.z(g.nz));
        assert!((g.z(1) + g.h / 2.0).abs() < 1e-15);
    }
}
