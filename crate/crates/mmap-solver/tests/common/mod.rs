//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use mmap_solver::assembly::BlockSystem;
use mmap_solver::field::{phi_exact, FieldParams};
use mmap_solver::sparse::CsrMatrix;
use nalgebra::DMatrix;

/// The field, written out again from its closed form.
pub fn unit_b(x: f64, z: f64, beta: f64) -> (f64, f64) {
    let bx = PI * beta * (x * x - x) * (PI * z).sin();
    let bz = beta * (2.0 * x - 1.0) * (PI * z).cos() + PI;
    let r = (bx * bx + bz * bz).sqrt();
    (bx / r, bz / r)
}

fn grad<F: Fn(f64, f64) -> f64>(u: &F, x: f64, z: f64, d: f64) -> (f64, f64) {
    (
        (u(x + d, z) - u(x - d, z)) / (2.0 * d),
        (u(x, z + d) - u(x, z - d)) / (2.0 * d),
    )
}

/// `∇·(b (b·∇u))` by nested central differences with step `d`.
pub fn par_lap_fd<F: Fn(f64, f64) -> f64>(u: &F, x: f64, z: f64, beta: f64, d: f64) -> f64 {
    let flux = |x: f64, z: f64| {
        let (b1, b2) = unit_b(x, z, beta);
        let (gx, gz) = grad(u, x, z, d);
        let s = b1 * gx + b2 * gz;
        (b1 * s, b2 * s)
    };
    (flux(x + d, z).0 - flux(x - d, z).0) / (2.0 * d)
        + (flux(x, z + d).1 - flux(x, z - d).1) / (2.0 * d)
}

pub fn lap_fd<F: Fn(f64, f64) -> f64>(u: &F, x: f64, z: f64, d: f64) -> f64 {
    (u(x + d, z) + u(x - d, z) + u(x, z + d) + u(x, z - d) - 4.0 * u(x, z)) / (d * d)
}

pub fn richardson<G: Fn(f64) -> f64>(g: G, d: f64) -> f64 {
    (4.0 * g(d / 2.0) - g(d)) / 3.0
}

/// `f = -(1/ε)Δ∥φ - Δ⊥φ` from finite differences of the manufactured φ.
pub fn forcing_oracle(x: f64, z: f64, p: &FieldParams) -> f64 {
    let u = |x: f64, z: f64| phi_exact(x, z, p);
    let par = richardson(|d| par_lap_fd(&u, x, z, p.beta, d), 1e-3);
    let lap = richardson(|d| lap_fd(&u, x, z, d), 1e-3);
    -par / p.eps - (lap - par)
}

/// The 17 x 17 lattice `(a/18, b/18)`.
pub fn lattice17() -> Vec<(f64, f64)> {
    (1..=17)
        .flat_map(|a| (1..=17).map(move |b| (a as f64 / 18.0, b as f64 / 18.0)))
        .collect()
}

pub fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.n_rows(), a.n_cols(), &a.to_dense())
}

/// `A1 - A2 A3⁻¹ B` straight from nalgebra.
pub fn oracle_e(sys: &BlockSystem) -> DMatrix<f64> {
    let inv = dense(&sys.a3).try_inverse().expect("A3 invertible");
    dense(&sys.a1) - dense(&sys.a2) * inv * dense(&sys.b)
}

pub fn svd_cond(a: &CsrMatrix) -> f64 {
    let sv = dense(a).singular_values();
    sv.max() / sv.min()
}
