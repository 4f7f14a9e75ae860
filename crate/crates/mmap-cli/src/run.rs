use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use mmap_solver::analysis::error_norms;
use mmap_solver::assembly::{assemble, BlockSystem};
use mmap_solver::field::FieldParams;
use mmap_solver::grid::{make_grid, Case};
use mmap_solver::krylov::{solve, true_residual, GmresReport, Preconditioner, SolverConfig};
use mmap_solver::schur::{build_with, exact_dense, factorize_a3, Variant};
use mmap_solver::sparse::mtx::{write_matrix_market, write_vector};
use mmap_solver::sparse::CsrMatrix;
use serde::Serialize;

/// One point of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub case: Case,
    pub variant: Variant,
    pub n: usize,
    pub eps: f64,
    pub beta: f64,
    pub m: u32,
    pub inflow: bool,
    pub cfg: SolverConfig,
}

impl Cell {
    pub fn params(&self) -> FieldParams {
        FieldParams::new(self.beta, self.m, self.eps)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub case: &'static str,
    pub schur: &'static str,
    #[serde(rename = "N")]
    pub n: usize,
    pub eps: f64,
    pub beta: f64,
    pub m: u32,
    pub inflow: bool,
    pub iterations: usize,
    pub converged: bool,
    /// Iteration count, or `x` when GMRES did not converge.
    pub display: String,
    pub time_factorize: f64,
    pub time_iterate: f64,
    pub true_residual: Option<f64>,
    pub error_linf: Option<f64>,
    pub error_l2: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CsvRow<'a> {
    case: &'a str,
    schur: &'a str,
    #[serde(rename = "N")]
    n: usize,
    eps: f64,
    beta: f64,
    inflow: bool,
    iterations: &'a str,
    converged: bool,
    time_factorize: f64,
    time_iterate: f64,
    true_residual: Option<f64>,
    error_linf: Option<f64>,
    error: Option<&'a str>,
}

impl CellRecord {
    pub fn csv_row(&self) -> CsvRow<'_> {
        CsvRow {
            case: self.case,
            schur: self.schur,
            n: self.n,
            eps: self.eps,
            beta: self.beta,
            inflow: self.inflow,
            iterations: &self.display,
            converged: self.converged,
            time_factorize: self.time_factorize,
            time_iterate: self.time_iterate,
            true_residual: self.true_residual,
            error_linf: self.error_linf,
            error: self.error.as_deref(),
        }
    }

    fn failed(cell: &Cell, msg: String) -> Self {
        CellRecord {
            case: cell.case.name(),
            schur: cell.variant.name(),
            n: cell.n,
            eps: cell.eps,
            beta: cell.beta,
            m: cell.m,
            inflow: cell.inflow,
            iterations: 0,
            converged: false,
            display: "x".into(),
            time_factorize: 0.0,
            time_iterate: 0.0,
            true_residual: None,
            error_linf: None,
            error_l2: None,
            error: Some(msg),
        }
    }
}

pub struct Systems {
    pub sys: BlockSystem,
    /// System the preconditioner is built from. Differs from `sys` only
    /// for the no-inflow problem.
    pub prec_sys: Option<BlockSystem>,
}

pub fn systems(cell: &Cell) -> mmap_solver::Result<Systems> {
    let g = make_grid(cell.case, cell.n)?;
    let p = cell.params();
    let sys = assemble(&g, &p, cell.inflow)?;
    let prec_sys = if cell.inflow {
        None
    } else {
        Some(assemble(&g, &p, true)?)
    };
    Ok(Systems { sys, prec_sys })
}

/// Runs one cell. Failures are recorded in the returned record; the
/// GMRES report is returned when the solve ran.
pub fn run_cell(cell: &Cell) -> (CellRecord, Option<GmresReport>) {
    let s = match systems(cell) {
        Ok(s) => s,
        Err(e) => return (CellRecord::failed(cell, e.to_string()), None),
    };
    let prec = match Preconditioner::build(s.prec_sys.as_ref().unwrap_or(&s.sys), cell.variant) {
        Ok(p) => p,
        Err(e) => {
            return (
                CellRecord::failed(cell, format!("preconditioner: {e}")),
                None,
            )
        }
    };
    let rep = match solve(&s.sys, &prec, &cell.cfg) {
        Ok(r) => r,
        Err(e) => return (CellRecord::failed(cell, format!("gmres: {e}")), None),
    };
    let g = s.sys.grid;
    let n = g.len();
    let norms = error_norms(&rep.solution[n..], &g, &cell.params()).ok();
    let rec = CellRecord {
        case: cell.case.name(),
        schur: cell.variant.name(),
        n: cell.n,
        eps: cell.eps,
        beta: cell.beta,
        m: cell.m,
        inflow: cell.inflow,
        iterations: rep.iterations,
        converged: rep.converged,
        display: if rep.converged {
            rep.iterations.to_string()
        } else {
            "x".into()
        },
        time_factorize: rep.time_factorize.as_secs_f64(),
        time_iterate: rep.time_iterate.as_secs_f64(),
        true_residual: true_residual(&s.sys, &rep.solution).ok(),
        error_linf: norms.map(|e| e.l_inf),
        error_l2: norms.map(|e| e.l2_grid),
        error: None,
    };
    (rec, Some(rep))
}

fn write_mtx(dir: &Path, name: &str, a: &CsrMatrix) -> anyhow::Result<()> {
    let f = File::create(dir.join(name))?;
    let mut w = BufWriter::new(f);
    write_matrix_market(&mut w, a)?;
    w.flush()?;
    Ok(())
}

/// Writes the blocks of the system, the Schur matrix used by the
/// preconditioner and the right-hand side.
pub fn export_matrices(cell: &Cell, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let s = systems(cell)?;
    let sys = &s.sys;
    write_mtx(dir, "A1.mtx", &sys.a1)?;
    write_mtx(dir, "A2.mtx", &sys.a2)?;
    write_mtx(dir, "A3.mtx", &sys.a3)?;
    write_mtx(dir, "B.mtx", &sys.b)?;
    let psys = s.prec_sys.as_ref().unwrap_or(sys);
    let schur = build_with(psys, cell.variant, &factorize_a3(psys)?)?;
    let m = match schur.matrix {
        Some(m) => m,
        None => CsrMatrix::from_dense(psys.n(), psys.n(), &exact_dense(psys)?)?,
    };
    write_mtx(dir, "S.mtx", &m)?;
    let mut w = BufWriter::new(File::create(dir.join("F.mtx"))?);
    write_vector(&mut w, &sys.f)?;
    w.flush()?;
    Ok(())
}
