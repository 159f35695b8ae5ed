//! Argument parsing and command dispatch. Every failure is mapped onto the
//! exit-code contract: 0 success, 1 input error, 2 numerical
//! non-convergence, 3 physical-precondition violation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use kickci::{
    build_kick, build_kappa7_state, cumulant_blocks, entropy_report, frobenius_norm, kick_report,
    make_hubbard_model, parse_fcidump, parse_operator_file, scaling_probe, solve_ground, CIVector,
    DetSpace, Error, IntegralSet, SolveOptions,
};

use crate::manifest::{load_manifest, KickParams};
use crate::report::{Diagnostics, Entropies, KickSection, MeasureReport, Norms};

/// ⟨Ŝ⟩ beyond this magnitude fails `--require-zero-mean`.
pub const ZERO_MEAN_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "kickci",
    version,
    about = "Determinant CI ground states, correlation measures, and kick-probe survival analysis"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the ground state and print energy diagnostics
    Solve(SolveArgs),
    /// Entropies and cumulant norms of the ground state
    Measures(MeasuresArgs),
    /// Kick the ground state and analyze the survival probability
    Kick(KickArgs),
    /// Run the measure (and optional kick) pipeline over a manifest
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
struct SystemArgs {
    /// Integral file in FCIDUMP format
    #[arg(long, conflicts_with = "model")]
    fcidump: Option<PathBuf>,
    /// Built-in lattice system, e.g. hubbard:6,1.0,4.0,periodic
    #[arg(long)]
    model: Option<String>,
    /// Override the electron count from the integral header
    #[arg(long)]
    nelec: Option<usize>,
    /// Override twice the spin projection
    #[arg(long)]
    ms2: Option<i32>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Residual norm at which the eigensolver stops
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// 0 starts from the lowest-diagonal determinants, anything else from
    /// a reproducible random vector (useful for block-decoupled systems)
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Machine-readable JSON report
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// One CSV row per system under a frozen header
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct MeasuresArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Closed-form reference state instead of a solved ground state
    /// (currently: kappa7)
    #[arg(long, conflicts_with_all = ["fcidump", "model"])]
    analytic: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct KickArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// One-body operator file; repeat for a multi-component kick
    #[arg(long, required = true)]
    oper: Vec<PathBuf>,
    /// Field weight paired with each --oper, in order
    #[arg(long, required = true, allow_negative_numbers = true)]
    q: Vec<f64>,
    /// Kick strength for the single-point report
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Comma-separated strengths; fits the log-log slope of the residual
    /// beyond the quadratic law
    #[arg(long, value_delimiter = ',')]
    lambda_scan: Vec<f64>,
    /// Fail with exit 3 unless ⟨S⟩ vanishes in the ground state
    #[arg(long)]
    require_zero_mean: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// TOML manifest listing tagged integral files
    #[arg(long)]
    manifest: PathBuf,
    /// Report failed entries on stderr and keep scanning
    #[arg(long)]
    keep_going: bool,
    /// Write the report stream to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

fn fail(code: i32, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            Error::NotConverged { .. } | Error::SeriesDiverged { .. } => 2,
            _ => 1,
        };
        Failure { code, msg: e.to_string() }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.cmd {
        Command::Solve(a) => run_solve(a),
        Command::Measures(a) => run_measures(a),
        Command::Kick(a) => run_kick(a),
        Command::Scan(a) => run_scan(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}

#[derive(Clone, Copy)]
enum Format {
    Text,
    Json,
    Csv,
}

impl OutputArgs {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            Format::Text
        }
    }
}

fn parse_model(spec: &str) -> Result<IntegralSet, Failure> {
    let (name, rest) = spec
        .split_once(':')
        .ok_or_else(|| fail(1, format!("model {spec:?}: expected name:parameters")))?;
    match name {
        "hubbard" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(fail(1, "hubbard model takes nsites,t,U[,periodic]"));
            }
            let nsites: usize =
                parts[0].parse().map_err(|_| fail(1, format!("bad site count {:?}", parts[0])))?;
            let t: f64 =
                parts[1].parse().map_err(|_| fail(1, format!("bad hopping {:?}", parts[1])))?;
            let u: f64 =
                parts[2].parse().map_err(|_| fail(1, format!("bad repulsion {:?}", parts[2])))?;
            let periodic = match parts.get(3) {
                None => false,
                Some(&"periodic") => true,
                Some(other) => {
                    return Err(fail(1, format!("unknown hubbard option {other:?}")));
                }
            };
            Ok(make_hubbard_model(nsites, t, u, periodic)?)
        }
        other => Err(fail(1, format!("unknown model family {other:?}"))),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(1, format!("cannot read {}: {e}", path.display())))
}

fn load_integrals(path: &Path) -> Result<IntegralSet, Failure> {
    Ok(parse_fcidump(&read_file(path)?)?)
}

fn file_label(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| {
        path.display().to_string()
    })
}

fn apply_overrides(
    mut ints: IntegralSet,
    nelec: Option<usize>,
    ms2: Option<i32>,
) -> Result<IntegralSet, Failure> {
    if nelec.is_none() && ms2.is_none() {
        return Ok(ints);
    }
    let n = nelec.unwrap_or(ints.nelec);
    let m = match ms2 {
        Some(m) => m,
        None if nelec.is_some() => (n % 2) as i32,
        None => ints.ms2,
    };
    ints = ints.with_electrons(n, m)?;
    Ok(ints)
}

fn load_system(sys: &SystemArgs) -> Result<(IntegralSet, String), Failure> {
    let (ints, label) = match (&sys.fcidump, &sys.model) {
        (Some(path), _) => (load_integrals(path)?, file_label(path)),
        (None, Some(m)) => (parse_model(m)?, m.clone()),
        (None, None) => return Err(fail(1, "need --fcidump or --model")),
    };
    Ok((apply_overrides(ints, sys.nelec, sys.ms2)?, label))
}

struct Solved {
    energy: f64,
    vector: CIVector,
    diagnostics: Diagnostics,
}

fn solve_system(ints: &IntegralSet, solver: &SolverArgs) -> Result<Solved, Failure> {
    let (na, nb) = ints.na_nb();
    let space = Arc::new(DetSpace::new(ints.norb, na, nb)?);
    let opts = SolveOptions { tol: solver.tol, seed: solver.seed, ..SolveOptions::default() };
    let sol = solve_ground(ints, &space, &opts)?;
    let diagnostics = Diagnostics {
        dimension: sol.vector.dim(),
        iterations: sol.iterations,
        residual: sol.residual,
    };
    Ok(Solved { energy: sol.energy, vector: sol.vector, diagnostics })
}

fn measure_state(c: &CIVector) -> Result<(Entropies, Norms), Failure> {
    let rep = entropy_report(c)?;
    let (daa, dab) = cumulant_blocks(c)?;
    let aa = frobenius_norm(&daa);
    let ab = frobenius_norm(&dab);
    Ok((Entropies::new(rep, c.space.na), Norms { aa, ab, total: aa.hypot(ab) }))
}

struct KickSetup {
    components: Vec<(f64, nalgebra::DMatrix<f64>)>,
    lambda: f64,
    lambda_scan: Vec<f64>,
    require_zero_mean: bool,
}

fn load_kick_setup(
    opers: &[PathBuf],
    q: &[f64],
    lambda: f64,
    lambda_scan: &[f64],
    require_zero_mean: bool,
) -> Result<KickSetup, Failure> {
    if opers.len() != q.len() {
        return Err(fail(
            1,
            format!("{} operator files but {} --q weights", opers.len(), q.len()),
        ));
    }
    let mut components = Vec::new();
    for (path, weight) in opers.iter().zip(q) {
        let op = parse_operator_file(&read_file(path)?)?;
        components.push((*weight, op.matrix));
    }
    for l in lambda_scan {
        if *l <= 0.0 {
            return Err(fail(1, format!("scan strengths must be positive, got {l}")));
        }
    }
    Ok(KickSetup {
        components,
        lambda,
        lambda_scan: lambda_scan.to_vec(),
        require_zero_mean,
    })
}

fn kick_section(setup: &KickSetup, c: &CIVector) -> Result<KickSection, Failure> {
    let spec = build_kick(setup.components.clone())?;
    let report = kick_report(&spec, c, setup.lambda)?;
    if setup.require_zero_mean && report.mean_s.abs() > ZERO_MEAN_TOL {
        return Err(fail(
            3,
            format!("kick operator has nonzero mean {:.3e} in the ground state", report.mean_s),
        ));
    }
    let (rows, slope) = if setup.lambda_scan.is_empty() {
        (Vec::new(), None)
    } else {
        scaling_probe(&spec, c, &setup.lambda_scan)?
    };
    Ok(KickSection { lambda: setup.lambda, report, rows, slope })
}

fn print_single(report: &MeasureReport, fmt: Format) {
    match fmt {
        Format::Json => print!("{}", report.to_json().render()),
        Format::Csv => println!("{}\n{}", MeasureReport::csv_header(), report.csv_row()),
        Format::Text => print!("{}", report.to_text()),
    }
}

fn run_solve(args: SolveArgs) -> Result<(), Failure> {
    let (ints, label) = load_system(&args.system)?;
    let solved = solve_system(&ints, &args.solver)?;
    let report = MeasureReport {
        system: label,
        geometry: None,
        energy: Some(solved.energy),
        entropies: None,
        norms: None,
        kick: None,
        diagnostics: solved.diagnostics,
    };
    print_single(&report, args.output.format());
    Ok(())
}

fn analytic_report(name: &str) -> Result<MeasureReport, Failure> {
    match name {
        "kappa7" => {
            let c = build_kappa7_state()?;
            let (entropies, norms) = measure_state(&c)?;
            Ok(MeasureReport {
                system: "kappa7".into(),
                geometry: None,
                energy: None,
                entropies: Some(entropies),
                norms: Some(norms),
                kick: None,
                diagnostics: Diagnostics { dimension: c.dim(), iterations: 0, residual: 0.0 },
            })
        }
        other => Err(fail(1, format!("unknown analytic state {other:?}"))),
    }
}

fn run_measures(args: MeasuresArgs) -> Result<(), Failure> {
    let report = match &args.analytic {
        Some(name) => analytic_report(name)?,
        None => {
            let (ints, label) = load_system(&args.system)?;
            let solved = solve_system(&ints, &args.solver)?;
            let (entropies, norms) = measure_state(&solved.vector)?;
            MeasureReport {
                system: label,
                geometry: None,
                energy: Some(solved.energy),
                entropies: Some(entropies),
                norms: Some(norms),
                kick: None,
                diagnostics: solved.diagnostics,
            }
        }
    };
    print_single(&report, args.output.format());
    Ok(())
}

fn run_kick(args: KickArgs) -> Result<(), Failure> {
    let (ints, label) = load_system(&args.system)?;
    let setup = load_kick_setup(
        &args.oper,
        &args.q,
        args.lambda,
        &args.lambda_scan,
        args.require_zero_mean,
    )?;
    let solved = solve_system(&ints, &args.solver)?;
    let (entropies, norms) = measure_state(&solved.vector)?;
    let kick = kick_section(&setup, &solved.vector)?;
    let report = MeasureReport {
        system: label,
        geometry: None,
        energy: Some(solved.energy),
        entropies: Some(entropies),
        norms: Some(norms),
        kick: Some(kick),
        diagnostics: solved.diagnostics,
    };
    print_single(&report, args.output.format());
    Ok(())
}

fn scan_entry(
    entry: &crate::manifest::Entry,
    kick: &Option<KickParams>,
    solver: &SolverArgs,
) -> Result<MeasureReport, Failure> {
    let ints = apply_overrides(load_integrals(&entry.fcidump)?, entry.nelec, entry.ms2)?;
    let solved = solve_system(&ints, solver)?;
    let (entropies, norms) = measure_state(&solved.vector)?;
    let kick = match kick {
        Some(params) => {
            let setup = load_kick_setup(
                &entry.opers,
                &params.q,
                params.lambda,
                &params.lambda_scan,
                params.require_zero_mean,
            )?;
            Some(kick_section(&setup, &solved.vector)?)
        }
        None => None,
    };
    Ok(MeasureReport {
        system: file_label(&entry.fcidump),
        geometry: Some(entry.tag.clone()),
        energy: Some(solved.energy),
        entropies: Some(entropies),
        norms: Some(norms),
        kick,
        diagnostics: solved.diagnostics,
    })
}

fn render_stream(reports: &[MeasureReport], fmt: Format) -> String {
    match fmt {
        Format::Json => {
            crate::jsonfmt::Json::Arr(reports.iter().map(|r| r.to_json()).collect()).render()
        }
        Format::Csv => {
            let mut out = MeasureReport::csv_header();
            out.push('\n');
            for r in reports {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&r.to_text());
            }
            out
        }
    }
}

fn run_scan(args: ScanArgs) -> Result<(), Failure> {
    let man = load_manifest(&args.manifest).map_err(|msg| fail(1, msg))?;
    let mut reports = Vec::new();
    for entry in &man.entries {
        match scan_entry(entry, &man.kick, &args.solver) {
            Ok(r) => reports.push(r),
            Err(f) if args.keep_going => {
                eprintln!("warning: entry {:?} skipped: {}", entry.tag, f.msg);
            }
            Err(f) => {
                return Err(fail(f.code, format!("entry {:?}: {}", entry.tag, f.msg)));
            }
        }
    }
    let rendered = render_stream(&reports, args.output.format());
    match &args.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| fail(1, format!("cannot write {}: {e}", path.display())))?,
        None => print!("{rendered}"),
    }
    Ok(())
}
