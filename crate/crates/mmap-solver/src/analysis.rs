//! Conditioning diagnostics and manufactured-solution error norms.

use crate::assembly::assemble_nonap;
use crate::field::{phi_exact, FieldParams};
use crate::grid::{make_grid, Case, GridSpec};
use crate::schur::SchurOperator;
use crate::sparse::{factorize, CsrMatrix, FactorKind};
use crate::{Error, Result};

/// Iteration cap for each of the two power iterations.
pub const COND_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub cond2: f64,
    pub iterations_used: usize,
    /// Set when either iteration hit [`COND_MAX_ITER`].
    pub approximate: bool,
}

fn start_vector(n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (0.7 * i as f64).sin()).collect();
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / s).collect()
}

/// Largest eigenvalue of a symmetric positive semi-definite operator by
/// power iteration. Returns (λ, iterations, converged).
fn power<F>(n: usize, tol: f64, mut op: F) -> Result<(f64, usize, bool)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut v = start_vector(n);
    let mut prev = 0.0;
    for it in 1..=COND_MAX_ITER {
        let u = op(&v)?;
        let lambda: f64 = v.iter().zip(&u).map(|(a, b)| a * b).sum();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nu == 0.0 {
            return Ok((0.0, it, true));
        }
        v = u.into_iter().map(|x| x / nu).collect();
        if it > 1 && (lambda - prev).abs() < tol * lambda.abs() {
            return Ok((lambda, it, true));
        }
        prev = lambda;
    }
    Ok((prev, COND_MAX_ITER, false))
}

/// 2-norm condition number of `a` from power iteration on `AᵀA` and
/// inverse power iteration using `solve(r, transpose)`.
pub fn cond_estimate_with<F>(a: &CsrMatrix, solve: F, tol: f64) -> Result<CondEstimate>
where
    F: Fn(&[f64], bool) -> Result<Vec<f64>>,
{
    let n = a.n_rows();
    let (lmax, it1, ok1) = power(n, tol, |v| a.spmv_transpose(&a.spmv(v)?))?;
    let (linv, it2, ok2) = power(n, tol, |v| solve(&solve(v, true)?, false))?;
    if !(linv > 0.0) {
        return Err(Error::Diagnostic("inverse iteration collapsed".into()));
    }
    let sigma_max = lmax.sqrt();
    let sigma_min = 1.0 / linv.sqrt();
    Ok(CondEstimate {
        sigma_max,
        sigma_min,
        cond2: sigma_max / sigma_min,
        iterations_used: it1 + it2,
        approximate: !(ok1 && ok2),
    })
}

pub fn cond_estimate(s: &SchurOperator, tol: f64) -> Result<CondEstimate> {
    let m = s
        .matrix
        .as_ref()
        .ok_or_else(|| Error::Diagnostic("operator has no explicit matrix".into()))?;
    cond_estimate_with(m, |r, t| s.solve(r, t), tol)
}

/// Condition estimate of the non-AP operator S1 for one parameter set.
pub fn cond_s1(case: Case, n: usize, p: &FieldParams, tol: f64) -> Result<CondEstimate> {
    let g = make_grid(case, n)?;
    let s1 = assemble_nonap(&g, p)?;
    let f = factorize(&s1, FactorKind::Lu)?;
    cond_estimate_with(&s1, |r, t| f.solve(r, t), tol)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Diagnostic("slope needs at least two points".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Diagnostic("slope needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Conjectured scaling `cond(S1) ~ 1 / ((ε + β²h²) h²)`.
pub fn conjectured_cond(n: usize, eps: f64, beta: f64) -> f64 {
    let h = 1.0 / (n as f64 - 1.0);
    1.0 / ((eps + beta * beta * h * h) * h * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Slope against N at fixed (β, ε).
    N,
    /// Slope against 1/ε at fixed (β, N).
    Eps,
    /// Slope against 1/β² at fixed (ε, N).
    Beta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub case: Case,
    pub beta: f64,
    pub eps: f64,
    pub n: usize,
    pub cond2: f64,
    /// Slope of the conjectured formula over the same group.
    pub predicted_exponent: f64,
    /// Slope fitted to the measured condition numbers of the group.
    pub fitted_slope: f64,
}

/// Measures cond(S1) on the grid `betas × epss × ns` and fits log-log
/// slopes along `sweep`. Rows in a group of one get `NaN` slopes.
pub fn conjecture_check(
    case: Case,
    betas: &[f64],
    epss: &[f64],
    ns: &[usize],
    sweep: Sweep,
    m: u32,
    tol: f64,
) -> Result<Vec<SlopeRow>> {
    if betas.is_empty() || epss.is_empty() || ns.is_empty() {
        return Err(Error::Diagnostic("empty parameter list".into()));
    }
    let mut rows = Vec::new();
    for &beta in betas {
        for &eps in epss {
            for &n in ns {
                let est = cond_s1(case, n, &FieldParams::new(beta, m, eps), tol)?;
                rows.push(SlopeRow {
                    case,
                    beta,
                    eps,
                    n,
                    cond2: est.cond2,
                    predicted_exponent: f64::NAN,
                    fitted_slope: f64::NAN,
                });
            }
        }
    }
    let key = |r: &SlopeRow| -> (u64, u64, usize) {
        match sweep {
            Sweep::N => (r.beta.to_bits(), r.eps.to_bits(), 0),
            Sweep::Eps => (r.beta.to_bits(), 0, r.n),
            Sweep::Beta => (0, r.eps.to_bits(), r.n),
        }
    };
    let abscissa = |r: &SlopeRow| -> f64 {
        match sweep {
            Sweep::N => r.n as f64,
            Sweep::Eps => 1.0 / r.eps,
            Sweep::Beta => 1.0 / (r.beta * r.beta),
        }
    };
    let mut done = vec![false; rows.len()];
    for a in 0..rows.len() {
        if done[a] {
            continue;
        }
        let k = key(&rows[a]);
        let group: Vec<usize> = (0..rows.len()).filter(|&b| key(&rows[b]) == k).collect();
        let xs: Vec<f64> = group.iter().map(|&b| abscissa(&rows[b])).collect();
        let ys: Vec<f64> = group.iter().map(|&b| rows[b].cond2).collect();
        let ps: Vec<f64> = group
            .iter()
            .map(|&b| conjectured_cond(rows[b].n, rows[b].eps, rows[b].beta))
            .collect();
        // A group with a single point has no slope.
        let (fitted, predicted) = if group.len() < 2 {
            (f64::NAN, f64::NAN)
        } else {
            (loglog_slope(&xs, &ys)?, loglog_slope(&xs, &ps)?)
        };
        for &b in &group {
            rows[b].fitted_slope = fitted;
            rows[b].predicted_exponent = predicted;
            done[b] = true;
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l_inf: f64,
    /// `sqrt(h² Σ e²)` over the points inside the unit square.
    pub l2_grid: f64,
}

/// Error of a φ field against the manufactured solution. Aligned ghost
/// layers, which lie outside the unit square, are skipped.
pub fn error_norms(phi: &[f64], g: &GridSpec, p: &FieldParams) -> Result<ErrorNorms> {
    if phi.len() != g.len() {
        return Err(Error::Dimension {
            expected: g.len(),
            got: phi.len(),
        });
    }
    let (mut linf, mut sum) = (0.0f64, 0.0);
    for i in 1..=g.nx {
        for j in 1..=g.nz {
            if !g.inside_domain(j) {
                continue;
            }
            let e = (phi[g.idx(i, j)] - phi_exact(g.x(i), g.z(j), p)).abs();
            linf = linf.max(e);
            sum += e * e;
        }
    }
    Ok(ErrorNorms {
        l_inf: linf,
        l2_grid: (g.h * g.h * sum).sqrt(),
    })
}

/// Observed order `log2(e_coarse / e_fine)` for a grid doubling; for
/// general ratios use [`loglog_slope`].
pub fn observed_order(e_coarse: f64, h_coarse: f64, e_fine: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}
