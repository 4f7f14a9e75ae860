mod common;

use std::f64::consts::PI;

use common::{forcing_oracle, lap_fd, lattice17, par_lap_fd, richardson};
use mmap_solver::assembly::{
    assemble, assemble_aligned, assemble_noinflow, assemble_nonaligned, boundary_stencils,
    laplace_stencil, parallel_stencil,
};
use mmap_solver::field::{forcing_f, phi_exact, FieldParams};
use mmap_solver::grid::{make_grid, BoundaryClass, Case};
use mmap_solver::schur::base_matrix;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn forcing_matches_richardson_oracle() {
    let p = FieldParams::new(2.0, 4, 0.1);
    let pts = lattice17();
    let exact: Vec<f64> = pts.iter().map(|&(x, z)| forcing_f(x, z, &p)).collect();
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = pts
        .iter()
        .zip(&exact)
        .map(|(&(x, z), f)| (forcing_oracle(x, z, &p) - f).abs())
        .fold(0.0f64, f64::max);
    assert!(
        worst / scale < 1e-6,
        "relative deviation {:e}",
        worst / scale
    );
}

#[test]
fn forcing_reduces_to_laplacian_for_unit_eps() {
    // ε = 1 makes the operator isotropic: f = -Δφ for any field.
    let p = FieldParams::new(2.0, 4, 1.0);
    for &(x, z) in &[(0.3, 0.4), (0.7, 0.15), (0.5, 0.5)] {
        let u = |x: f64, z: f64| phi_exact(x, z, &p);
        let lap = richardson(|d| lap_fd(&u, x, z, d), 1e-3);
        assert!((forcing_f(x, z, &p) + lap).abs() < 1e-5 * lap.abs().max(1.0));
    }
}

fn test_fn(x: f64, z: f64) -> f64 {
    (PI * x).sin() * (PI * z).cos()
}

#[test]
fn parallel_stencil_is_second_order() {
    let beta = 2.0;
    let (x0, z0) = (0.25, 0.375);
    let exact = richardson(|d| par_lap_fd(&test_fn, x0, z0, beta, d), 1e-3);
    let mut errs = Vec::new();
    for n in [9usize, 17, 33, 65] {
        let g = make_grid(Case::NonAligned, n).unwrap();
        let (i, j) = ((n - 1) / 4 + 1, 3 * (n - 1) / 8 + 1);
        assert!((g.x(i) - x0).abs() < 1e-15 && (g.z(j) - z0).abs() < 1e-15);
        let st = parallel_stencil(&g, beta, i, j).unwrap();
        let approx = st.apply(|i, j| test_fn(g.x(i), g.z(j))) / (g.h * g.h);
        errs.push((approx - exact).abs());
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.8, "observed order {order} from {errs:?}");
    }
}

#[test]
fn straight_field_stencil_is_z_second_difference() {
    let g = make_grid(Case::NonAligned, 12).unwrap();
    let st = parallel_stencil(&g, 0.0, 5, 7).unwrap();
    let mut w = std::collections::HashMap::new();
    for &(i, j, v) in &st.0 {
        *w.entry((i, j)).or_insert(0.0) += v;
    }
    for (&(i, j), &v) in &w {
        let expect = match (i, j) {
            (5, 6) | (5, 8) => 1.0,
            (5, 7) => -2.0,
            _ => 0.0,
        };
        assert_eq!(v, expect, "weight at ({i}, {j})");
    }
}

#[test]
fn aligned_a3_and_b_are_symmetric() {
    for n in [8, 16, 32] {
        let g = make_grid(Case::Aligned, n).unwrap();
        for eps in [1.0, 1e-6, 1e-20] {
            let sys = assemble_aligned(&g, &FieldParams::new(0.0, 4, eps)).unwrap();
            assert_eq!(sys.a3.asymmetry(), 0.0);
            assert_eq!(sys.b.asymmetry(), 0.0);
        }
    }
}

#[test]
fn aligned_a2_is_eps_times_minus_a1_in_the_interior() {
    let g = make_grid(Case::Aligned, 10).unwrap();
    let eps = 0.25;
    let sys = assemble_aligned(&g, &FieldParams::new(0.0, 4, eps)).unwrap();
    for i in 1..=g.nx {
        for j in 1..=g.nz {
            if g.classify(i, j).unwrap() != BoundaryClass::Interior {
                continue;
            }
            let r = g.idx(i, j);
            for c in [g.idx(i, j - 1), r, g.idx(i, j + 1)] {
                assert_eq!(sys.a2.get(r, c), -eps * sys.a1.get(r, c));
            }
        }
    }
}

fn dense_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.clone().singular_values();
    let tol = 1e-10 * sv.max();
    sv.iter().filter(|&&s| s > tol).count()
}

#[test]
fn aligned_a3_without_inflow_is_singular() {
    let g = make_grid(Case::Aligned, 8).unwrap();
    let p = FieldParams::new(0.0, 4, 1e-2);
    let with = assemble(&g, &p, true).unwrap();
    let without = assemble_noinflow(&g, &p).unwrap();
    let n = g.len();
    let d = |m: &mmap_solver::sparse::CsrMatrix| DMatrix::from_row_slice(n, n, &m.to_dense());
    assert_eq!(dense_rank(&d(&with.a3)), n);
    // q is fixed only up to a constant on each interior field line.
    assert_eq!(dense_rank(&d(&without.a3)), n - (g.nx - 2));
    // The same defect carries over to the full system, but only in q.
    let full = DMatrix::from_row_slice(2 * n, 2 * n, &without.to_csr().to_dense());
    assert_eq!(dense_rank(&full), 2 * n - (g.nx - 2));
    let svd = full.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > 1e-10 * smax {
            continue;
        }
        let phi_part = vt.row(k).columns(n, n).amax();
        assert!(
            phi_part < 1e-10,
            "null vector with phi component {phi_part:e}"
        );
    }
}

#[test]
fn nonaligned_bottom_rows_of_base_are_null() {
    for n in [8, 16, 32] {
        let g = make_grid(Case::NonAligned, n).unwrap();
        let sys = assemble_nonaligned(&g, &FieldParams::new(2.0, 4, 1e-2)).unwrap();
        let base = base_matrix(&sys).unwrap();
        let scale = base.max_abs();
        for r in g.bottom_rows() {
            let (_, vals) = base.row(r);
            let m = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(m <= 1e-13 * scale, "row {r}: {m:e}");
        }
    }
}

#[test]
fn wrong_grid_is_rejected() {
    let a = make_grid(Case::Aligned, 8).unwrap();
    let na = make_grid(Case::NonAligned, 8).unwrap();
    let p = FieldParams::new(0.0, 4, 1.0);
    assert!(assemble_aligned(&na, &p).is_err());
    assert!(assemble_nonaligned(&a, &p).is_err());
    assert!(assemble_aligned(&a, &FieldParams::new(2.0, 4, 1.0)).is_err());
}

#[test]
fn manufactured_solution_is_recovered_by_direct_solve() {
    let p = FieldParams::new(2.0, 4, 1e-6);
    let err = |n: usize| {
        let g = make_grid(Case::NonAligned, n).unwrap();
        let sys = assemble(&g, &p, true).unwrap();
        let x = sys.solve_direct().unwrap();
        mmap_solver::analysis::error_norms(&x[g.len()..], &g, &p)
            .unwrap()
            .l_inf
    };
    let (e32, e64) = (err(32), err(64));
    assert!(e32 < 0.35, "max error {e32}");
    assert!(e32 / e64 > 3.0, "{e32} -> {e64}");
}

proptest! {
    #[test]
    fn stencil_rows_sum_to_zero(beta in 0.0f64..3.0, i in 2usize..15, j in 2usize..15) {
        let g = make_grid(Case::NonAligned, 16).unwrap();
        let par: f64 = parallel_stencil(&g, beta, i, j).unwrap().0.iter().map(|t| t.2).sum();
        prop_assert!(par.abs() < 1e-14);
        let lap: f64 = laplace_stencil(i, j).0.iter().map(|t| t.2).sum();
        prop_assert_eq!(lap, 0.0);
        for jb in [1, g.nz] {
            let (a, b) = boundary_stencils(&g, beta, i, jb).unwrap();
            prop_assert!(a.0.iter().map(|t| t.2).sum::<f64>().abs() < 1e-14);
            prop_assert!(b.0.iter().map(|t| t.2).sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn constants_are_in_the_kernel_of_interior_rows(beta in 0.0f64..3.0, eps in 1e-8f64..1.0) {
        let g = make_grid(Case::NonAligned, 10).unwrap();
        let sys = assemble_nonaligned(&g, &FieldParams::new(beta, 4, eps)).unwrap();
        let ones = vec![1.0; g.len()];
        for m in [&sys.a1, &sys.a2, &sys.a3, &sys.b] {
            let y = m.spmv(&ones).unwrap();
            for i in 2..g.nx {
                for j in 2..g.nz {
                    prop_assert!(y[g.idx(i, j)].abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn forcing_is_finite_on_the_square(x in 0.0f64..=1.0, z in 0.0f64..=1.0, beta in 0.0f64..3.0, e in -20i32..=0) {
        let p = FieldParams::new(beta, 4, 10f64.powi(e));
        prop_assert!(forcing_f(x, z, &p).is_finite());
    }
}
