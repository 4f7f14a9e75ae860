//! Block lower-triangular preconditioner and non-restarted GMRES.
//!
//! ```text
//! P = [ A3  0 ]      A3 e1 = r1
//!     [ A2  S ]      S  e2 = r2 - A2 e1
//! ```

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::assembly::BlockSystem;
use crate::schur::{self, SchurOperator, Variant};
use crate::sparse::{CsrMatrix, Factorization};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub maxit: usize,
    /// Keep the Hessenberg matrix and compute Ritz values.
    pub ritz: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            maxit: 100,
            ritz: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresReport {
    pub iterations: usize,
    pub converged: bool,
    /// Preconditioned relative residual after each iteration.
    pub residual_history: Vec<f64>,
    pub time_factorize: Duration,
    pub time_iterate: Duration,
    pub ritz: Option<Vec<Complex64>>,
    pub solution: Vec<f64>,
}

pub struct Preconditioner {
    pub a3: Factorization,
    pub a2: CsrMatrix,
    pub schur: SchurOperator,
    pub time_factorize: Duration,
}

impl Preconditioner {
    /// Factorizes `A3` and builds the requested Schur approximation from
    /// `sys`. For the no-inflow problem pass the inflow system here.
    pub fn build(sys: &BlockSystem, variant: Variant) -> Result<Self> {
        let t0 = Instant::now();
        let a3 = schur::factorize_a3(sys)?;
        let schur = schur::build_with(sys, variant, &a3)?;
        Ok(Preconditioner {
            a3,
            a2: sys.a2.clone(),
            schur,
            time_factorize: t0.elapsed(),
        })
    }

    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        apply_preconditioner(&self.a3, &self.a2, &self.schur, r)
    }
}

/// `e = P⁻¹ r` for `r = (r1, r2)`.
pub fn apply_preconditioner(
    a3: &Factorization,
    a2: &CsrMatrix,
    s: &SchurOperator,
    r: &[f64],
) -> Result<Vec<f64>> {
    let n = a2.n_rows();
    if r.len() != 2 * n {
        return Err(Error::Dimension {
            expected: 2 * n,
            got: r.len(),
        });
    }
    let mut e = r.to_vec();
    let (e1, e2) = e.split_at_mut(n);
    a3.solve_in_place(e1, false)?;
    let t = a2.spmv(e1)?;
    e2.iter_mut().zip(&t).for_each(|(a, b)| *a -= b);
    s.solve_in_place(e2, false)?;
    Ok(e)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Left-preconditioned GMRES from a zero initial guess.
///
/// Stops at the first iteration `k` (counted from 1) where
/// `‖P⁻¹(b - A x_k)‖ / ‖P⁻¹ b‖ <= tol`. Arnoldi uses classical Gram-Schmidt
/// with one reorthogonalization pass.
pub fn gmres<A, P>(apply_a: A, b: &[f64], prec: P, cfg: &SolverConfig) -> Result<GmresReport>
where
    A: Fn(&[f64], &mut [f64]) -> Result<()>,
    P: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let t0 = Instant::now();
    let n = b.len();
    let m = cfg.maxit;
    let r0 = prec(b)?;
    let beta = norm(&r0);
    let mut report = GmresReport {
        iterations: 0,
        converged: false,
        residual_history: Vec::new(),
        time_factorize: Duration::ZERO,
        time_iterate: Duration::ZERO,
        ritz: None,
        solution: vec![0.0; n],
    };
    if beta == 0.0 {
        report.converged = true;
        report.time_iterate = t0.elapsed();
        return Ok(report);
    }

    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    v.push(r0.iter().map(|x| x / beta).collect());
    // Rotated Hessenberg columns, h[k] has k + 2 entries.
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut raw: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::with_capacity(m);
    let mut sn: Vec<f64> = Vec::with_capacity(m);
    let mut g = vec![0.0; m + 1];
    g[0] = beta;
    let mut av = vec![0.0; n];
    let mut k_done = 0;

    for k in 0..m {
        apply_a(&v[k], &mut av)?;
        let mut w = prec(&av)?;
        let w0 = norm(&w);
        let mut col = vec![0.0; k + 2];
        for _ in 0..2 {
            let hh: Vec<f64> = v.iter().map(|vi| dot(vi, &w)).collect();
            for (vi, c) in v.iter().zip(&hh) {
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= c * b);
            }
            col.iter_mut().zip(&hh).for_each(|(a, b)| *a += b);
        }
        let hn = norm(&w);
        col[k + 1] = hn;
        if cfg.ritz {
            raw.push(col.clone());
        }
        for i in 0..k {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let d = col[k].hypot(col[k + 1]);
        let (c, s) = if d == 0.0 {
            (1.0, 0.0)
        } else {
            (col[k] / d, col[k + 1] / d)
        };
        cs.push(c);
        sn.push(s);
        col[k] = d;
        col[k + 1] = 0.0;
        g[k + 1] = -s * g[k];
        g[k] *= c;
        h.push(col);
        k_done = k + 1;

        let rel = g[k + 1].abs() / beta;
        report.residual_history.push(rel);
        let breakdown = hn <= 1e-14 * w0;
        if rel <= cfg.tol || breakdown {
            report.converged = true;
            break;
        }
        v.push(w.iter().map(|x| x / hn).collect());
    }

    // Back substitution for the least-squares coefficients.
    let k = k_done;
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= h[j][i] * y[j];
        }
        y[i] = s / h[i][i];
    }
    for (vi, yi) in v.iter().zip(&y) {
        report
            .solution
            .iter_mut()
            .zip(vi)
            .for_each(|(a, b)| *a += yi * b);
    }
    report.iterations = k;
    if cfg.ritz {
        let mut hm = vec![0.0; k * k];
        for (j, c) in raw.iter().enumerate().take(k) {
            for (i, v) in c.iter().enumerate().take(k) {
                hm[i * k + j] = *v;
            }
        }
        report.ritz = ritz_values(k, &hm).ok();
    }
    report.time_iterate = t0.elapsed();
    Ok(report)
}

/// Preconditioned GMRES on a block system.
pub fn solve(sys: &BlockSystem, prec: &Preconditioner, cfg: &SolverConfig) -> Result<GmresReport> {
    let b = sys.rhs();
    let mut rep = gmres(|x, y| sys.apply(x, y), &b, |r| prec.apply(r), cfg)?;
    rep.time_factorize = prec.time_factorize;
    Ok(rep)
}

/// `‖b - A x‖ / ‖b‖` without preconditioning.
pub fn true_residual(sys: &BlockSystem, x: &[f64]) -> Result<f64> {
    let b = sys.rhs();
    let mut ax = vec![0.0; b.len()];
    sys.apply(x, &mut ax)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
    Ok(norm(&r) / norm(&b))
}

/// Eigenvalues of an upper Hessenberg matrix (row-major `m x m`) by shifted
/// QR iteration with Francis double shifts.
pub fn ritz_values(m: usize, hess: &[f64]) -> Result<Vec<Complex64>> {
    if hess.len() != m * m {
        return Err(Error::Dimension {
            expected: m * m,
            got: hess.len(),
        });
    }
    let mut a = hess.to_vec();
    let at = |a: &Vec<f64>, i: usize, j: usize| a[i * m + j];
    let mut wr = vec![0.0; m];
    let mut wi = vec![0.0; m];
    let anorm: f64 = a
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let max_sweeps = 100 * m.max(1);
    let mut sweeps = 0;
    let mut nn = m as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // Look for a small subdiagonal element.
            let mut l = nn;
            while l >= 1 {
                let (lu, lm) = (l as usize, (l - 1) as usize);
                let s = at(&a, lm, lm).abs() + at(&a, lu, lu).abs();
                let s = if s == 0.0 { anorm } else { s };
                if at(&a, lu, lm).abs() <= f64::EPSILON * s {
                    a[lu * m + lm] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            let x = at(&a, nu, nu);
            if l == nn {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let y = at(&a, nu - 1, nu - 1);
            let w = at(&a, nu, nu - 1) * at(&a, nu - 1, nu);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let xs = x + t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nu - 1] = xs + z;
                    wr[nu] = if z != 0.0 { xs - w / z } else { xs + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = xs + p;
                    wr[nu] = xs + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(Error::Diagnostic("QR iteration did not converge".into()));
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // Exceptional shift.
                t += x;
                for i in 0..=nu {
                    a[i * m + i] -= x;
                }
                let s = at(&a, nu, nu - 1).abs() + at(&a, nu - 1, nu - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let lu = l as usize;
            let mut mm = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = at(&a, mm, mm);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / at(&a, mm + 1, mm) + at(&a, mm, mm + 1);
                q = at(&a, mm + 1, mm + 1) - z - rr - ss;
                r = at(&a, mm + 2, mm + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if mm == lu {
                    break;
                }
                let u = at(&a, mm, mm - 1).abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (at(&a, mm - 1, mm - 1).abs() + z.abs() + at(&a, mm + 1, mm + 1).abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                mm -= 1;
            }
            for i in mm + 2..=nu {
                a[i * m + i - 2] = 0.0;
                if i != mm + 2 {
                    a[i * m + i - 3] = 0.0;
                }
            }
            let mut k = mm;
            while k < nu {
                if k != mm {
                    p = at(&a, k, k - 1);
                    q = at(&a, k + 1, k - 1);
                    r = 0.0;
                    if k + 1 != nu {
                        r = at(&a, k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == mm {
                        if l as usize != mm {
                            a[k * m + k - 1] = -a[k * m + k - 1];
                        }
                    } else {
                        a[k * m + k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..m {
                        let mut pp = a[k * m + j] + q * a[(k + 1) * m + j];
                        if k + 1 != nu {
                            pp += r * a[(k + 2) * m + j];
                            a[(k + 2) * m + j] -= pp * z;
                        }
                        a[(k + 1) * m + j] -= pp * y;
                        a[k * m + j] -= pp * x;
                    }
                    let top = nu.min(k + 3);
                    for i in 0..=top {
                        let mut pp = x * a[i * m + k] + y * a[i * m + k + 1];
                        if k + 1 != nu {
                            pp += z * a[i * m + k + 2];
                            a[i * m + k + 2] -= pp * r;
                        }
                        a[i * m + k + 1] -= pp * q;
                        a[i * m + k] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ritz_of_diagonal_and_rotation() {
        let ev = ritz_values(2, &[3.0, 1.0, 0.0, -2.0]).unwrap();
        let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert_eq!(re, vec![-2.0, 3.0]);
        let ev = ritz_values(2, &[0.0, -1.0, 1.0, 0.0]).unwrap();
        for z in ev {
            assert!(z.re.abs() < 1e-14 && (z.im.abs() - 1.0).abs() < 1e-14);
        }
        assert_eq!(
            ritz_values(1, &[5.0]).unwrap(),
            vec![Complex64::new(5.0, 0.0)]
        );
    }

    #[test]
    fn gmres_identity_takes_one_step() {
        let b = vec![1.0, 2.0, 3.0];
        let cfg = SolverConfig {
            ritz: true,
            ..Default::default()
        };
        let rep = gmres(
            |x, y| {
                y.copy_from_slice(x);
                Ok(())
            },
            &b,
            |r| Ok(r.to_vec()),
            &cfg,
        )
        .unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.ritz.unwrap(), vec![Complex64::new(1.0, 0.0)]);
        for (a, c) in rep.solution.iter().zip(&b) {
            assert!((a - c).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_needs_no_iterations() {
        let rep = gmres(
            |x, y| {
                y.copy_from_slice(x);
                Ok(())
            },
            &[0.0; 4],
            |r| Ok(r.to_vec()),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(rep.converged && rep.iterations == 0);
    }
}
