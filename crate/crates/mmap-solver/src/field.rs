//! Magnetic field, manufactured solution and forcing term.
//!
//! The field is
//!
//! ```text
//! B = ( πβ(x²-x) sin πz ,  β(2x-1) cos πz + π ),   b = B / |B|
//! ```
//!
//! and the manufactured solution is `φ = φ0 + ε φ1` with
//! `φ0 = sin(m ψ)`, `ψ = πx + β(x²-x) cos πz` and `φ1 = cos 2πz sin πx`.
//! Since `B·∇ψ = 0`, `Δ∥ φ0 = 0`, which lets the forcing be written without
//! any `1/ε`:
//!
//! ```text
//! f = -Δφ0 - ε Δφ1 - (1-ε) Δ∥φ1
//! ```

use std::f64::consts::PI;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    pub beta: f64,
    pub m: u32,
    pub eps: f64,
}

impl FieldParams {
    pub fn new(beta: f64, m: u32, eps: f64) -> Self {
        FieldParams { beta, m, eps }
    }
}

/// Unit field direction and its outer product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitField {
    pub b1: f64,
    pub b2: f64,
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
}

#[inline]
fn raw_field(x: f64, z: f64, beta: f64) -> (f64, f64) {
    let (s, c) = (PI * z).sin_cos();
    (PI * beta * (x * x - x) * s, beta * (2.0 * x - 1.0) * c + PI)
}

pub fn magnetic_field(x: f64, z: f64, beta: f64) -> Result<UnitField> {
    let (bx, bz) = raw_field(x, z, beta);
    let norm = bx.hypot(bz);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateField { x, z });
    }
    let (b1, b2) = (bx / norm, bz / norm);
    Ok(UnitField {
        b1,
        b2,
        b11: b1 * b1,
        b12: b1 * b2,
        b21: b1 * b2,
        b22: b2 * b2,
    })
}

pub fn phi_exact(x: f64, z: f64, p: &FieldParams) -> f64 {
    let m = p.m as f64;
    let psi = PI * x + p.beta * (x * x - x) * (PI * z).cos();
    (m * psi).sin() + p.eps * (2.0 * PI * z).cos() * (PI * x).sin()
}

/// Analytic `-Δ⊥φ - (1/ε)Δ∥φ` for the manufactured solution.
pub fn forcing_f(x: f64, z: f64, p: &FieldParams) -> f64 {
    let beta = p.beta;
    let m = p.m as f64;
    let eps = p.eps;
    let (spz, cpz) = (PI * z).sin_cos();
    let (spx, cpx) = (PI * x).sin_cos();
    let (s2z, c2z) = (2.0 * PI * z).sin_cos();
    let w = x * x - x;
    let dw = 2.0 * x - 1.0;

    // Δφ0 for φ0 = sin(mψ).
    let psi = PI * x + beta * w * cpz;
    let psi_x = PI + beta * dw * cpz;
    let psi_z = -PI * beta * w * spz;
    let psi_xx = 2.0 * beta * cpz;
    let psi_zz = -PI * PI * beta * w * cpz;
    let (smp, cmp) = (m * psi).sin_cos();
    let lap_phi0 = -m * m * smp * (psi_x * psi_x + psi_z * psi_z) + m * cmp * (psi_xx + psi_zz);

    // φ1 = cos 2πz sin πx and its derivatives.
    let phi1 = c2z * spx;
    let p1x = PI * c2z * cpx;
    let p1z = -2.0 * PI * s2z * spx;
    let p1xx = -PI * PI * phi1;
    let p1zz = -4.0 * PI * PI * phi1;
    let p1xz = -2.0 * PI * PI * s2z * cpx;
    let lap_phi1 = p1xx + p1zz;

    // Field components and first derivatives.
    let b1 = PI * beta * w * spz;
    let b2 = beta * dw * cpz + PI;
    let b1x = PI * beta * dw * spz;
    let b1z = PI * PI * beta * w * cpz;
    let b2x = 2.0 * beta * cpz;
    let b2z = -PI * beta * dw * spz;
    let s = b1 * b1 + b2 * b2;
    let sx = 2.0 * (b1 * b1x + b2 * b2x);
    let sz = 2.0 * (b1 * b1z + b2 * b2z);

    // T = B Bᵀ / s and the derivatives needed by ∇·(T∇φ1).
    let t11 = b1 * b1 / s;
    let t12 = b1 * b2 / s;
    let t22 = b2 * b2 / s;
    let t11_x = (2.0 * b1 * b1x * s - b1 * b1 * sx) / (s * s);
    let t12_x = ((b1x * b2 + b1 * b2x) * s - b1 * b2 * sx) / (s * s);
    let t12_z = ((b1z * b2 + b1 * b2z) * s - b1 * b2 * sz) / (s * s);
    let t22_z = (2.0 * b2 * b2z * s - b2 * b2 * sz) / (s * s);

    let lpar_phi1 = t11_x * p1x
        + t11 * p1xx
        + t12_x * p1z
        + t12 * p1xz
        + t12_z * p1x
        + t12 * p1xz
        + t22_z * p1z
        + t22 * p1zz;

    -lap_phi0 - eps * lap_phi1 - (1.0 - eps) * lpar_phi1
}
