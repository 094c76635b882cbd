//! The `cle4pt` command line: tables of the basis and the universal ratio,
//! identification constants, the verification suite, the Monte Carlo and the
//! bulk solutions.
//!
//! Exit codes: 0 success, 1 failed verification, 2 invalid input or domain
//! error, 3 convergence failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bulk::{bulk_residual, bulk_solution_jet};
use crate::closed_forms::a_fk;
use crate::connection::{connect_basis, percolation_amplitude_formula};
use crate::error::{Error, Result};
use crate::frobenius::DEFAULT_ORDER;
use crate::ode::{make_boundary_ode, normalized_residual, KappaParams};
use crate::perc_mc::{run_box, write_csv, FarBoundary, McConfig, DEFAULT_HALF_SPAN};
use crate::verify::{run_suite, VerifyOptions, A_FK_REFERENCE, DEFAULT_KAPPAS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

/// Header of the `eval` table.
pub const EVAL_HEADER: &str = "lambda,V0,Vh,V3h1,R,residual_max";
/// Marker appended to rows computed at κ ≤ 4.
pub const CONJECTURAL_MARKER: &str = "CONJECTURAL";

/// Inclusive uniform grid `start:stop:steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + h * i as f64).collect()
    }
}

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid '{s}' is not start:stop:steps"));
        }
        let start: f64 = parts[0].parse().map_err(|e| format!("grid start: {e}"))?;
        let stop: f64 = parts[1].parse().map_err(|e| format!("grid stop: {e}"))?;
        let steps: usize = parts[2].parse().map_err(|e| format!("grid steps: {e}"))?;
        if steps == 0 || !(start <= stop) {
            return Err(format!("grid '{s}' is empty or reversed"));
        }
        Ok(Grid { start, stop, steps })
    }
}

/// Subcommand selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Constants,
    Verify,
    Mc,
    Bulk,
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub box_width: usize,
    pub lambdas: Vec<f64>,
    pub halfwidths: Vec<usize>,
    pub half_span: usize,
    pub samples: u64,
    pub far_boundary: FarBoundary,
}

/// Everything a command depends on. Commands are pure functions of this.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub kappa: f64,
    pub grid: Grid,
    pub order: usize,
    pub tol: f64,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub fault: Option<f64>,
    pub kappas: Vec<f64>,
    pub mc: McSettings,
}

impl RunSpec {
    /// Defaults for `command`.
    pub fn new(command: Command) -> Self {
        let grid = match command {
            Command::Bulk => Grid { start: 0.05, stop: 1.45, steps: 15 },
            _ => Grid { start: 0.05, stop: 0.95, steps: 19 },
        };
        Self {
            command,
            kappa: 6.0,
            grid,
            order: DEFAULT_ORDER,
            tol: 1e-8,
            seed: 1,
            workers: 1,
            out: None,
            alpha: None,
            fault: None,
            kappas: DEFAULT_KAPPAS.to_vec(),
            mc: McSettings {
                box_width: 512,
                lambdas: vec![0.3, 0.5, 0.7],
                halfwidths: vec![2, 3, 4],
                half_span: DEFAULT_HALF_SPAN,
                samples: 10_000,
                far_boundary: FarBoundary::Closed,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cle4pt", version, about = "Boundary four-point connectivities of CLE")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Args)]
struct Common {
    /// κ ∈ (0, 8]
    #[arg(long, default_value_t = 6.0)]
    kappa: f64,
    /// λ grid as start:stop:steps
    #[arg(long)]
    grid: Option<Grid>,
    /// Series truncation order
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
    /// Residual tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output path; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FarArg {
    Closed,
    Wired,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Table of V0, Vh, V3h1 and R on a λ grid
    Eval(Common),
    /// β, C1/C2 and A, with closed-form comparisons where available
    Constants(Common),
    /// Run the invariant suite; exit 1 on any failure
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated κ list for the per-κ checks
        #[arg(long, value_delimiter = ',')]
        kappas: Option<Vec<f64>>,
        /// Add this to one series coefficient to test fault detection
        #[arg(long, hide = true)]
        inject_fault: Option<f64>,
    },
    /// Percolation Monte Carlo; CSV of link-pattern counts
    Mc {
        #[command(flatten)]
        common: Common,
        /// Box height L; the width is 2L
        #[arg(long = "box", default_value_t = 512)]
        box_width: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
        lambdas: Vec<f64>,
        /// Segment half-widths
        #[arg(long = "w", value_delimiter = ',', default_value = "2,3,4")]
        halfwidths: Vec<usize>,
        /// Half span of the symmetric point sets
        #[arg(long, default_value_t = DEFAULT_HALF_SPAN)]
        half_span: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = FarArg::Closed)]
        far_boundary: FarArg,
    },
    /// The three bulk solutions and their residuals on a λ grid
    Bulk {
        #[command(flatten)]
        common: Common,
        /// Bulk weight; defaults to (3κ−8)(8−κ)/(32κ)
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn spec_from(command: Command, c: Common) -> RunSpec {
    let mut spec = RunSpec::new(command);
    spec.kappa = c.kappa;
    if let Some(g) = c.grid {
        spec.grid = g;
    }
    spec.order = c.order;
    spec.tol = c.tol;
    spec.out = c.out;
    spec
}

/// Parses command-line arguments into a [`RunSpec`].
pub fn parse_args<I, T>(args: I) -> std::result::Result<RunSpec, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok(match cli.command {
        CliCommand::Eval(c) => spec_from(Command::Eval, c),
        CliCommand::Constants(c) => spec_from(Command::Constants, c),
        CliCommand::Verify { common, kappas, inject_fault } => {
            let mut s = spec_from(Command::Verify, common);
            if let Some(k) = kappas {
                s.kappas = k;
            }
            s.fault = inject_fault;
            s
        }
        CliCommand::Mc {
            common,
            box_width,
            lambdas,
            halfwidths,
            half_span,
            samples,
            seed,
            workers,
            far_boundary,
        } => {
            let mut s = spec_from(Command::Mc, common);
            s.seed = seed;
            s.workers = workers;
            s.mc = McSettings {
                box_width,
                lambdas,
                halfwidths,
                half_span,
                samples,
                far_boundary: match far_boundary {
                    FarArg::Closed => FarBoundary::Closed,
                    FarArg::Wired => FarBoundary::Wired,
                },
            };
            s
        }
        CliCommand::Bulk { common, alpha } => {
            let mut s = spec_from(Command::Bulk, common);
            s.alpha = alpha;
            s
        }
    })
}

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_convergence() {
        EXIT_CONVERGENCE
    } else {
        EXIT_DOMAIN
    }
}

/// Writes the `eval` table.
pub fn cmd_eval(spec: &RunSpec, out: &mut dyn Write) -> Result<i32> {
    let p = KappaParams::new(spec.kappa)?;
    let points = spec.grid.points();
    if let Some(&l) = points.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::Domain(format!("grid point {l} outside (0, 1)")));
    }
    let conn = connect_basis(&p, spec.order)?;
    let ode = make_boundary_ode(&p);
    let marker = p.conjectural();
    let mut text = String::from(EVAL_HEADER);
    if marker {
        text.push_str(",regime");
    }
    text.push('\n');
    for l in points {
        let jets = [conn.solution_jet(0, l)?, conn.solution_jet(1, l)?, conn.solution_jet(2, l)?];
        let residual = jets.iter().map(|j| normalized_residual(&ode, j, l)).fold(0.0, f64::max);
        let mut row = [l, jets[0].u, jets[1].u, jets[2].u, conn.ratio(l)?, residual]
            .map(fmt17)
            .join(",");
        if marker {
            row.push(',');
            row.push_str(CONJECTURAL_MARKER);
        }
        text.push_str(&row);
        text.push('\n');
    }
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

/// Writes the constants report.
pub fn cmd_constants(spec: &RunSpec, out: &mut dyn Write) -> Result<i32> {
    let p = KappaParams::new(spec.kappa)?;
    let conn = connect_basis(&p, spec.order)?;
    let mut text = String::new();
    if p.conjectural() {
        text.push_str(&format!("regime = {CONJECTURAL_MARKER}\n"));
    }
    text.push_str(&format!("kappa = {}\n", fmt17(p.kappa)));
    text.push_str(&format!("beta = {}\n", fmt17(conn.beta)));
    text.push_str(&format!("C1/C2 = {}\n", fmt17(conn.c1_over_c2)));
    text.push_str(&format!("A = {}\n", fmt17(conn.a)));
    text.push_str(&format!("condition = {}\n", fmt17(conn.condition_estimate)));
    text.push_str(&format!("involution_defect = {}\n", fmt17(conn.involution_defect())));
    if p.kappa == 6.0 {
        let f = percolation_amplitude_formula();
        text.push_str(&format!("A_formula = {}\n", fmt17(f)));
        text.push_str(&format!("A_abs_diff = {}\n", fmt17((conn.a - f).abs())));
    }
    if p.kappa == 16.0 / 3.0 {
        let a = a_fk()?;
        text.push_str(&format!("A_FK = {}\n", fmt17(a)));
        text.push_str(&format!("A_FK_connection = {}\n", fmt17(2.5 * conn.c1_over_c2)));
        text.push_str(&format!("A_FK_reference = {}\n", fmt17(A_FK_REFERENCE)));
        text.push_str(&format!("A_FK_abs_diff = {}\n", fmt17((a - A_FK_REFERENCE).abs())));
    }
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

/// Runs the verification suite and writes its report.
pub fn cmd_verify(spec: &RunSpec, out: &mut dyn Write) -> Result<i32> {
    let opts = VerifyOptions {
        kappas: spec.kappas.clone(),
        order: spec.order,
        residual_tol: spec.tol,
        fault: spec.fault,
    };
    let checks = run_suite(&opts);
    let failed = checks.iter().filter(|c| !c.passed).count();
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!("{c}\n"));
    }
    text.push_str(&format!("{} checks, {} failed\n", checks.len(), failed));
    write_out(out, &text)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Runs the Monte Carlo and writes its CSV.
pub fn cmd_mc(spec: &RunSpec, out: &mut dyn Write) -> Result<i32> {
    let m = &spec.mc;
    let mut cfg = McConfig::conformal(m.box_width, &m.lambdas, &m.halfwidths, m.half_span, m.samples, spec.seed)?;
    cfg.workers = spec.workers;
    cfg.far_boundary = m.far_boundary;
    let tallies = run_box(&cfg)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &tallies).map_err(io_error)?;
    out.write_all(&buf).map_err(io_error)?;
    Ok(EXIT_OK)
}

/// Writes the three bulk solutions and the worst residual on a λ grid.
pub fn cmd_bulk(spec: &RunSpec, out: &mut dyn Write) -> Result<i32> {
    let p = KappaParams::new(spec.kappa)?;
    let alpha = spec.alpha.unwrap_or(p.alpha);
    let units = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut text = String::from("lambda,D1,D2,D3,residual_max\n");
    for l in spec.grid.points() {
        let mut values = [0.0; 3];
        let mut residual = 0.0f64;
        for (v, c) in values.iter_mut().zip(units) {
            *v = bulk_solution_jet(l, c, &p)?.u;
            residual = residual.max(bulk_residual(l, c, &p, alpha)?);
        }
        let row = [l, values[0], values[1], values[2], residual].map(fmt17).join(",");
        text.push_str(&row);
        text.push('\n');
    }
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn io_error(e: io::Error) -> Error {
    Error::Domain(format!("write failed: {e}"))
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(io_error)
}

/// Dispatches a parsed spec, writing to `spec.out` or `stdout`.
pub fn execute(spec: &RunSpec, stdout: &mut dyn Write) -> Result<i32> {
    let mut file;
    let out: &mut dyn Write = match &spec.out {
        Some(path) => {
            file = BufWriter::new(
                File::create(path).map_err(|e| Error::Domain(format!("{}: {e}", path.display())))?,
            );
            &mut file
        }
        None => stdout,
    };
    let code = match spec.command {
        Command::Eval => cmd_eval(spec, out),
        Command::Constants => cmd_constants(spec, out),
        Command::Verify => cmd_verify(spec, out),
        Command::Mc => cmd_mc(spec, out),
        Command::Bulk => cmd_bulk(spec, out),
    }?;
    out.flush().map_err(io_error)?;
    Ok(code)
}

/// Full program: parse, warn about the conjectural regime, run, map errors to
/// exit codes.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let spec = match parse_args(args) {
        Ok(s) => s,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_DOMAIN } else { EXIT_OK };
        }
    };
    if spec.kappa <= 4.0 && spec.kappa > 0.0 {
        let _ = writeln!(
            stderr,
            "warning: kappa = {} <= 4 lies in the conjectural regime",
            spec.kappa
        );
    }
    match execute(&spec, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0.1:0.5:5".parse().unwrap();
        assert_eq!(g.points().len(), 5);
        assert!((g.points()[4] - 0.5).abs() < 1e-15);
        assert!("0.5:0.1:3".parse::<Grid>().is_err());
        assert!("0.1:0.5".parse::<Grid>().is_err());
    }

    #[test]
    fn seventeen_digits() {
        let s = fmt17(0.1);
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(s.split('e').next().unwrap().replace('.', "").len(), 17);
    }
}
