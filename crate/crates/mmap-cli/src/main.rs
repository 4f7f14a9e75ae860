//! `mmap`: experiment runner for the MMAP solver.

mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use mmap_solver::analysis::{conjecture_check, error_norms, observed_order, Sweep};
use mmap_solver::assembly::assemble;
use mmap_solver::grid::{make_grid, Case};
use mmap_solver::krylov::{solve, Preconditioner, SolverConfig};
use mmap_solver::schur::{Variant, DENSE_LIMIT};
use serde::Serialize;

use run::{run_cell, Cell, CellRecord};

const SCHEMA: u32 = 1;
const DEFAULT_EPS: [f64; 6] = [1.0, 1e-1, 1e-2, 1e-6, 1e-10, 1e-20];
const DEFAULT_N: [usize; 3] = [32, 64, 128];

#[derive(Parser)]
#[command(
    name = "mmap",
    version,
    about = "Iteration tables, condition studies and refinement studies for the MMAP solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single (N, eps) cell and write a JSON report.
    Solve(Opts),
    /// Iteration table over the (N, eps) grid.
    Table(Opts),
    /// Iteration table for the singular problem without inflow condition.
    Noinflow(Opts),
    /// Condition number of the non-AP operator with log-log slopes.
    Cond(CondOpts),
    /// Ritz values of the preconditioned operator for one cell.
    Ritz(Opts),
    /// Grid refinement study against the manufactured solution.
    Verify(Opts),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CaseArg {
    Aligned,
    Nonaligned,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Case {
        match c {
            CaseArg::Aligned => Case::Aligned,
            CaseArg::Nonaligned => Case::NonAligned,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SweepArg {
    N,
    Eps,
    Beta,
}

#[derive(Args, Clone)]
struct Opts {
    #[arg(long, value_enum, default_value = "aligned")]
    case: CaseArg,
    /// s1..s6 or exact.
    #[arg(long)]
    schur: Option<Variant>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "N-list", value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long = "eps-list", value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    /// Field curvature; defaults to 0 (aligned) or 2 (non-aligned).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 4)]
    m: u32,
    /// GMRES tolerance on the preconditioned relative residual.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 100)]
    maxit: usize,
    /// Drop the inflow condition from the system matrix.
    #[arg(long)]
    no_inflow: bool,
    /// Write the residual history as CSV.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Write A1, A2, A3, B, S and F as Matrix Market files.
    #[arg(long)]
    export_matrices: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Add N = 256 to the default grid list.
    #[arg(long)]
    large: bool,
}

#[derive(Args, Clone)]
struct CondOpts {
    #[command(flatten)]
    opts: Opts,
    #[arg(long = "beta-list", value_delimiter = ',')]
    beta_list: Option<Vec<f64>>,
    /// Parameter the slopes are fitted against.
    #[arg(long, value_enum, default_value = "n")]
    sweep: SweepArg,
    /// Relative tolerance of the power iterations.
    #[arg(long, default_value_t = 1e-4)]
    cond_tol: f64,
}

fn usage(msg: impl std::fmt::Display) -> ! {
    Cli::command()
        .error(ErrorKind::ArgumentConflict, msg)
        .exit()
}

impl Opts {
    fn case(&self) -> Case {
        self.case.into()
    }

    fn beta(&self) -> f64 {
        self.beta.unwrap_or(match self.case() {
            Case::Aligned => 0.0,
            Case::NonAligned => 2.0,
        })
    }

    fn n_list(&self) -> Vec<usize> {
        if let Some(l) = &self.n_list {
            return l.clone();
        }
        if let Some(n) = self.n {
            return vec![n];
        }
        let mut l = DEFAULT_N.to_vec();
        if self.large {
            l.push(256);
        }
        l
    }

    fn eps_list(&self) -> Vec<f64> {
        if let Some(l) = &self.eps_list {
            return l.clone();
        }
        match self.eps {
            Some(e) => vec![e],
            None => DEFAULT_EPS.to_vec(),
        }
    }

    fn single(&self) -> (usize, f64) {
        if self.n_list.is_some() || self.eps_list.is_some() {
            usage("this command takes --N and --eps, not lists");
        }
        let n = self.n.unwrap_or_else(|| usage("--N is required"));
        let eps = self.eps.unwrap_or_else(|| usage("--eps is required"));
        (n, eps)
    }

    fn config(&self, default_tol: f64, ritz: bool) -> SolverConfig {
        SolverConfig {
            tol: self.tol.unwrap_or(default_tol),
            maxit: self.maxit,
            ritz,
        }
    }

    /// Rejects parameter combinations the solver cannot run.
    fn validate(&self, variant: Variant, ns: &[usize], epss: &[f64]) {
        let case = self.case();
        if variant == Variant::S6 && case != Case::Aligned {
            usage("--schur s6 requires --case aligned");
        }
        if case == Case::Aligned && self.beta() != 0.0 {
            usage("the aligned case requires --beta 0");
        }
        if let Some(&n) = ns.iter().find(|&&n| n < 4) {
            usage(format!("N = {n} is too small (need N >= 4)"));
        }
        if let Some(e) = epss.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            usage(format!("eps = {e} must be positive"));
        }
        if let Some(t) = self.tol {
            if t.is_nan() || t <= 0.0 {
                usage("--tol must be positive");
            }
        }
        if variant == Variant::Exact {
            for &n in ns {
                let g = make_grid(case, n).unwrap_or_else(|e| usage(e));
                if g.len() > DENSE_LIMIT {
                    usage(format!(
                        "--schur exact needs nx*nz <= {DENSE_LIMIT}; N = {n} gives {}",
                        g.len()
                    ));
                }
            }
        }
    }

    fn cell(&self, variant: Variant, n: usize, eps: f64, cfg: SolverConfig) -> Cell {
        Cell {
            case: self.case(),
            variant,
            n,
            eps,
            beta: self.beta(),
            m: self.m,
            inflow: !self.no_inflow,
            cfg,
        }
    }
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let mut w = open_output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv<T: Serialize>(
    path: Option<&Path>,
    rows: impl IntoIterator<Item = T>,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(open_output(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SolveReport<'a> {
    schema: u32,
    command: &'static str,
    tol: f64,
    maxit: usize,
    #[serde(flatten)]
    cell: &'a CellRecord,
    residual_history: Vec<f64>,
}

fn cmd_solve(o: &Opts) -> anyhow::Result<ExitCode> {
    let variant = o.schur.unwrap_or(Variant::S3);
    let (n, eps) = o.single();
    o.validate(variant, &[n], &[eps]);
    let cell = o.cell(variant, n, eps, o.config(1e-6, false));
    if let Some(dir) = &o.export_matrices {
        run::export_matrices(&cell, dir).context("exporting matrices")?;
    }
    let (rec, rep) = run_cell(&cell);
    let history = rep.map(|r| r.residual_history).unwrap_or_default();
    if let Some(p) = &o.history {
        let rows = history.iter().enumerate().map(|(k, r)| (k + 1, r));
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["iteration", "residual"])?;
        for (k, r) in rows {
            w.serialize((k, r))?;
        }
        w.flush()?;
    }
    match o.format.unwrap_or(Format::Json) {
        Format::Json => write_json(
            o.output.as_deref(),
            &SolveReport {
                schema: SCHEMA,
                command: "solve",
                tol: cell.cfg.tol,
                maxit: cell.cfg.maxit,
                cell: &rec,
                residual_history: history,
            },
        )?,
        Format::Csv => write_csv(o.output.as_deref(), [rec.csv_row()])?,
    }
    if let Some(e) = &rec.error {
        eprintln!("error: {e}");
    }
    Ok(if rec.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

#[derive(Serialize)]
struct TableReport<'a> {
    schema: u32,
    command: &'static str,
    tol: f64,
    maxit: usize,
    cells: &'a [CellRecord],
}

fn cmd_table(
    o: &Opts,
    command: &'static str,
    default_variant: Variant,
) -> anyhow::Result<ExitCode> {
    let variant = o.schur.unwrap_or(default_variant);
    let (ns, epss) = (o.n_list(), o.eps_list());
    o.validate(variant, &ns, &epss);
    let cfg = o.config(1e-6, false);
    let mut cells = Vec::with_capacity(ns.len() * epss.len());
    for &n in &ns {
        for &eps in &epss {
            let (rec, _) = run_cell(&o.cell(variant, n, eps, cfg));
            eprintln!("{} N={n} eps={eps:e}: {}", variant, rec.display);
            cells.push(rec);
        }
    }
    match o.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(o.output.as_deref(), cells.iter().map(|c| c.csv_row()))?,
        Format::Json => write_json(
            o.output.as_deref(),
            &TableReport {
                schema: SCHEMA,
                command,
                tol: cfg.tol,
                maxit: cfg.maxit,
                cells: &cells,
            },
        )?,
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CondRow {
    case: &'static str,
    beta: f64,
    eps: f64,
    #[serde(rename = "N")]
    n: usize,
    cond2: f64,
    predicted_exponent: f64,
    fitted_slope: f64,
}

fn cmd_cond(c: &CondOpts) -> anyhow::Result<ExitCode> {
    let o = &c.opts;
    let case = o.case();
    let betas = c.beta_list.clone().unwrap_or_else(|| vec![o.beta()]);
    let ns = o
        .n_list
        .clone()
        .unwrap_or_else(|| o.n.map_or(vec![16, 32, 64], |n| vec![n]));
    let epss = o.eps_list();
    o.validate(Variant::S1, &ns, &epss);
    if case == Case::Aligned && betas.iter().any(|&b| b != 0.0) {
        usage("the aligned case requires beta 0");
    }
    let sweep = match c.sweep {
        SweepArg::N => Sweep::N,
        SweepArg::Eps => Sweep::Eps,
        SweepArg::Beta => Sweep::Beta,
    };
    let rows = conjecture_check(case, &betas, &epss, &ns, sweep, o.m, c.cond_tol)?;
    let rows: Vec<CondRow> = rows
        .into_iter()
        .map(|r| CondRow {
            case: r.case.name(),
            beta: r.beta,
            eps: r.eps,
            n: r.n,
            cond2: r.cond2,
            predicted_exponent: r.predicted_exponent,
            fitted_slope: r.fitted_slope,
        })
        .collect();
    match o.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(o.output.as_deref(), &rows)?,
        Format::Json => write_json(
            o.output.as_deref(),
            &serde_json::json!({ "schema": SCHEMA, "command": "cond", "rows": rows }),
        )?,
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RitzRow {
    index: usize,
    re: f64,
    im: f64,
}

fn cmd_ritz(o: &Opts) -> anyhow::Result<ExitCode> {
    let variant = o.schur.unwrap_or(Variant::S3);
    let (n, eps) = o.single();
    o.validate(variant, &[n], &[eps]);
    let cell = o.cell(variant, n, eps, o.config(1e-6, true));
    let s = run::systems(&cell)?;
    let prec = match Preconditioner::build(s.prec_sys.as_ref().unwrap_or(&s.sys), variant) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: preconditioner: {e}");
            return Ok(ExitCode::from(3));
        }
    };
    let rep = solve(&s.sys, &prec, &cell.cfg)?;
    let mut ritz = rep.ritz.unwrap_or_default();
    ritz.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let rows: Vec<RitzRow> = ritz
        .iter()
        .enumerate()
        .map(|(index, z)| RitzRow {
            index,
            re: z.re,
            im: z.im,
        })
        .collect();
    match o.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(o.output.as_deref(), &rows)?,
        Format::Json => write_json(
            o.output.as_deref(),
            &serde_json::json!({
                "schema": SCHEMA,
                "command": "ritz",
                "case": cell.case.name(),
                "schur": variant.name(),
                "N": n,
                "eps": eps,
                "iterations": rep.iterations,
                "converged": rep.converged,
                "ritz": rows,
            }),
        )?,
    }
    Ok(if rep.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

#[derive(Serialize)]
struct VerifyRow {
    case: &'static str,
    eps: f64,
    #[serde(rename = "N")]
    n: usize,
    h: f64,
    iterations: String,
    error_linf: Option<f64>,
    error_l2: Option<f64>,
    order_linf: Option<f64>,
    order_l2: Option<f64>,
    error: Option<String>,
}

fn cmd_verify(o: &Opts) -> anyhow::Result<ExitCode> {
    let variant = o.schur.unwrap_or(Variant::S4);
    let ns = o.n_list();
    let epss = o.eps_list();
    o.validate(variant, &ns, &epss);
    let cfg = o.config(1e-10, false);
    let mut rows = Vec::new();
    for &eps in &epss {
        let mut prev: Option<(f64, f64, f64)> = None;
        for &n in &ns {
            let cell = o.cell(variant, n, eps, cfg);
            let g = make_grid(cell.case, n)?;
            let out = assemble(&g, &cell.params(), cell.inflow)
                .and_then(|sys| {
                    let psys = if cell.inflow {
                        None
                    } else {
                        Some(assemble(&g, &cell.params(), true)?)
                    };
                    let prec = Preconditioner::build(psys.as_ref().unwrap_or(&sys), variant)?;
                    solve(&sys, &prec, &cfg)
                })
                .and_then(|rep| {
                    Ok((
                        error_norms(&rep.solution[g.len()..], &g, &cell.params())?,
                        rep,
                    ))
                });
            let row = match out {
                Ok((e, rep)) => {
                    let orders = prev.map(|(h0, l0, q0)| {
                        (
                            observed_order(l0, h0, e.l_inf, g.h),
                            observed_order(q0, h0, e.l2_grid, g.h),
                        )
                    });
                    prev = Some((g.h, e.l_inf, e.l2_grid));
                    VerifyRow {
                        case: cell.case.name(),
                        eps,
                        n,
                        h: g.h,
                        iterations: if rep.converged {
                            rep.iterations.to_string()
                        } else {
                            "x".into()
                        },
                        error_linf: Some(e.l_inf),
                        error_l2: Some(e.l2_grid),
                        order_linf: orders.map(|o| o.0),
                        order_l2: orders.map(|o| o.1),
                        error: None,
                    }
                }
                Err(err) => {
                    prev = None;
                    VerifyRow {
                        case: cell.case.name(),
                        eps,
                        n,
                        h: g.h,
                        iterations: "x".into(),
                        error_linf: None,
                        error_l2: None,
                        order_linf: None,
                        order_l2: None,
                        error: Some(err.to_string()),
                    }
                }
            };
            if let Some(p) = row.order_linf {
                eprintln!("eps={eps:e} N={n}: observed order {p:.3}");
            }
            rows.push(row);
        }
    }
    match o.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(o.output.as_deref(), &rows)?,
        Format::Json => write_json(
            o.output.as_deref(),
            &serde_json::json!({ "schema": SCHEMA, "command": "verify", "rows": rows }),
        )?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Solve(o) => cmd_solve(o),
        Command::Table(o) => cmd_table(o, "table", Variant::S3),
        Command::Noinflow(o) => {
            let mut o = o.clone();
            o.no_inflow = true;
            cmd_table(&o, "noinflow", Variant::S5)
        }
        Command::Cond(c) => cmd_cond(c),
        Command::Ritz(o) => cmd_ritz(o),
        Command::Verify(o) => cmd_verify(o),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
