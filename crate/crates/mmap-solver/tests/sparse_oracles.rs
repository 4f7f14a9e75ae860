use mmap_solver::assembly::assemble;
use mmap_solver::field::FieldParams;
use mmap_solver::grid::{make_grid, Case};
use mmap_solver::sparse::mtx::{
    read_csr, read_matrix_market, write_matrix_market, write_vector, MtxData,
};
use mmap_solver::sparse::{
    factorize, BandedCholesky, BandedLu, CsrMatrix, FactorKind, TripletBuilder,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.n_rows(), a.n_cols(), &a.to_dense())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn probe(n: usize, seed: f64) -> Vec<f64> {
    (0..n)
        .map(|k| (seed * (k as f64 + 1.0)).sin() + 0.1 * k as f64 / n as f64)
        .collect()
}

/// Random band matrix described by a flat list of values in `[-1, 1]`.
fn banded_strategy() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>)> {
    (2usize..24, 0usize..4, 0usize..4).prop_flat_map(|(n, kl, ku)| {
        let len = n * (kl + ku + 1);
        (
            Just(n),
            Just(kl),
            Just(ku),
            prop::collection::vec(-1.0f64..1.0, len),
        )
    })
}

fn band_matrix(n: usize, kl: usize, ku: usize, vals: &[f64], diag_shift: f64) -> CsrMatrix {
    let w = kl + ku + 1;
    let mut t = TripletBuilder::new(n, n);
    for r in 0..n {
        for d in 0..w {
            let c = r as isize + d as isize - kl as isize;
            if c < 0 || c >= n as isize {
                continue;
            }
            let mut v = vals[r * w + d];
            if c as usize == r {
                v += diag_shift;
            }
            t.push(r, c as usize, v);
        }
    }
    t.build().unwrap()
}

#[test]
fn block_operators_match_dense_products() {
    for case in [Case::Aligned, Case::NonAligned] {
        for n in [8, 12, 16] {
            let g = make_grid(case, n).unwrap();
            let beta = if case == Case::Aligned { 0.0 } else { 2.0 };
            let sys = assemble(&g, &FieldParams::new(beta, 4, 1e-2), true).unwrap();
            for m in [&sys.a1, &sys.a2, &sys.a3, &sys.b] {
                let d = dense(m);
                let x = probe(m.n_cols(), 0.37);
                let y = m.spmv(&x).unwrap();
                let yd = &d * DVector::from_vec(x.clone());
                assert!(max_diff(&y, yd.as_slice()) <= 1e-13 * m.max_abs().max(1.0));
                let yt = m.spmv_transpose(&x).unwrap();
                let ytd = d.transpose() * DVector::from_vec(x);
                assert!(max_diff(&yt, ytd.as_slice()) <= 1e-13 * m.max_abs().max(1.0));
            }
            let prod = sys.a2.matmul(&sys.b).unwrap();
            let pd = dense(&sys.a2) * dense(&sys.b);
            assert!(
                max_diff(&prod.to_dense(), pd.transpose().as_slice()) < 1e-13 * pd.amax().max(1.0)
            );
        }
    }
}

#[test]
fn full_system_apply_matches_dense() {
    let g = make_grid(Case::NonAligned, 10).unwrap();
    let sys = assemble(&g, &FieldParams::new(2.0, 4, 0.1), true).unwrap();
    let full = sys.to_csr();
    let x = probe(sys.dim(), 1.3);
    let mut y = vec![0.0; sys.dim()];
    sys.apply(&x, &mut y).unwrap();
    let yd = dense(&full) * DVector::from_vec(x);
    assert!(max_diff(&y, yd.as_slice()) < 1e-13 * full.max_abs());
}

#[test]
fn interleaved_direct_solve_matches_dense() {
    let g = make_grid(Case::Aligned, 8).unwrap();
    let sys = assemble(&g, &FieldParams::new(0.0, 4, 1e-6), true).unwrap();
    let x = sys.solve_direct().unwrap();
    let xd = dense(&sys.to_csr())
        .lu()
        .solve(&DVector::from_vec(sys.rhs()))
        .unwrap();
    let scale = xd.amax();
    assert!(max_diff(&x, xd.as_slice()) < 1e-10 * scale);
}

#[test]
fn banded_lu_needs_pivoting_on_zero_diagonal() {
    // Zero leading diagonal: an unpivoted band LU would divide by zero.
    let a = CsrMatrix::from_dense(3, 3, &[0.0, 1.0, 0.0, 2.0, 1.0, 1.0, 0.0, 3.0, 4.0]).unwrap();
    let lu = BandedLu::factorize(&a).unwrap();
    let r = [1.0, 2.0, 3.0];
    let xd = dense(&a).lu().solve(&DVector::from_row_slice(&r)).unwrap();
    let mut x = r.to_vec();
    lu.solve_in_place(&mut x);
    assert!(max_diff(&x, xd.as_slice()) < 1e-14);
    let xt = dense(&a)
        .transpose()
        .lu()
        .solve(&DVector::from_row_slice(&r))
        .unwrap();
    let mut x = r.to_vec();
    lu.solve_transpose_in_place(&mut x);
    assert!(max_diff(&x, xt.as_slice()) < 1e-14);
}

#[test]
fn singular_matrix_is_rejected() {
    let a = CsrMatrix::from_dense(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
    assert!(BandedLu::factorize(&a).is_err());
    let b = CsrMatrix::from_dense(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
    assert!(BandedCholesky::factorize(&b).is_err());
}

#[test]
fn mtx_round_trip_of_assembled_block() {
    let g = make_grid(Case::NonAligned, 8).unwrap();
    let sys = assemble(&g, &FieldParams::new(2.0, 4, 1e-10), true).unwrap();
    let mut buf = Vec::new();
    write_matrix_market(&mut buf, &sys.a3).unwrap();
    let back = read_csr(buf.as_slice()).unwrap();
    assert_eq!(back, sys.a3);

    let mut buf = Vec::new();
    write_vector(&mut buf, &sys.f).unwrap();
    match read_matrix_market(buf.as_slice()).unwrap() {
        MtxData::Dense { rows, cols, values } => {
            assert_eq!((rows, cols), (sys.f.len(), 1));
            assert_eq!(values, sys.f);
        }
        other => panic!("expected a dense vector, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn banded_lu_matches_dense_solve((n, kl, ku, vals) in banded_strategy()) {
        let a = band_matrix(n, kl, ku, &vals, 0.0);
        let d = dense(&a);
        let sv = d.clone().singular_values();
        prop_assume!(sv.min() > 1e-3 * sv.max());
        let lu = BandedLu::factorize(&a).unwrap();
        let r = probe(n, 0.71);
        let tol = 1e-9 * sv.max() / sv.min();
        let mut x = r.clone();
        lu.solve_in_place(&mut x);
        let xd = d.clone().lu().solve(&DVector::from_vec(r.clone())).unwrap();
        prop_assert!(max_diff(&x, xd.as_slice()) <= tol * xd.amax().max(1.0));
        let mut x = r.clone();
        lu.solve_transpose_in_place(&mut x);
        let xd = d.transpose().lu().solve(&DVector::from_vec(r)).unwrap();
        prop_assert!(max_diff(&x, xd.as_slice()) <= tol * xd.amax().max(1.0));
    }

    #[test]
    fn banded_cholesky_matches_dense((n, kl, ku, vals) in banded_strategy()) {
        let a = band_matrix(n, kl, ku, &vals, 0.0);
        let s = a.add_scaled(1.0, &a.transpose()).unwrap();
        // strictly diagonally dominant, hence SPD
        let spd = s.add_scaled(2.0 * (kl + ku + 1) as f64 + 1.0, &CsrMatrix::identity(n)).unwrap();
        let f = factorize(&spd, FactorKind::Cholesky).unwrap();
        let r = probe(n, 1.9);
        let x = f.solve(&r, false).unwrap();
        let xd = dense(&spd).cholesky().unwrap().solve(&DVector::from_vec(r));
        prop_assert!(max_diff(&x, xd.as_slice()) < 1e-12);
    }

    #[test]
    fn spmv_matches_dense((n, kl, ku, vals) in banded_strategy()) {
        let a = band_matrix(n, kl, ku, &vals, 0.0);
        let x = probe(n, 0.29);
        let y = a.spmv(&x).unwrap();
        let yd = dense(&a) * DVector::from_vec(x);
        prop_assert!(max_diff(&y, yd.as_slice()) < 1e-13);
    }

    #[test]
    fn transpose_is_an_involution((n, kl, ku, vals) in banded_strategy()) {
        let a = band_matrix(n, kl, ku, &vals, 0.0);
        prop_assert_eq!(a.transpose().transpose(), a.clone());
    }

    #[test]
    fn mtx_write_read_is_exact((n, kl, ku, vals) in banded_strategy(), scale in -300i32..300) {
        let a = band_matrix(n, kl, ku, &vals, 0.0).scale(10f64.powi(scale));
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &a).unwrap();
        let back = read_csr(buf.as_slice()).unwrap();
        prop_assert_eq!(back, a);
    }
}
