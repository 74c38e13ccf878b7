//! Batch front end: model and family file loading, density and measure
//! computations, and the verification suite.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numerical
//! failure, 4 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use bjspec::averaging::{
    averaged_density_left, carmona_limit_measure, double_average_density,
    averaged_interval_measure, LeftBoundary, NormalizationLedger, QuadSpec,
};
use bjspec::coupling::coupling_averaged_density;
use bjspec::linalg::{cident, CMat};
use bjspec::model::io::{matrix_from_data, matrix_to_data, FamilyFile, MatrixData, ModelFile, SemiInfiniteFile};
use bjspec::moebius::UnitaryMatrix;
use bjspec::verify::run_suite;

#[derive(Parser)]
#[command(
    name = "bjspec",
    version,
    about = "Spectral quantities of block Jacobi matrices via symplectic transfer-matrix calculus"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Averaged spectral density over an energy grid, emitted as CSV
    Density(DensityArgs),
    /// Run built-in verification suites against their oracles
    Verify(VerifyArgs),
    /// Spectral-measure computations
    #[command(subcommand)]
    Measure(MeasureCmd),
}

#[derive(Args)]
struct DensityArgs {
    /// Model JSON file
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    emin: f64,
    #[arg(long)]
    emax: f64,
    /// Number of grid intervals (rows = steps + 1)
    #[arg(long)]
    steps: usize,
    /// Left boundary unitary Uhat: JSON file with a row-major [re, im] list
    #[arg(long)]
    uhat: Option<PathBuf>,
    /// CSV output path; stdout when omitted. A ledger JSON side file is
    /// written next to the CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name: all, green, haar, boundav, solvable, radav, hua,
    /// reflection, oscillation, carmona, double-average, coupling
    suite: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Write the report as JSON (runtimes excluded, so reports are
    /// byte-reproducible)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Interval mass of the boundary-averaged measure
    Interval(IntervalArgs),
    /// Truncation-limit interval mass of a semi-infinite operator
    Carmona(CarmonaArgs),
    /// Double boundary average at one energy; the exact value is the identity
    DoubleAverage(DoubleAverageArgs),
    /// Coupling-averaged trace density over an energy window
    Coupling(CouplingArgs),
}

#[derive(Args)]
struct IntervalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    e0: f64,
    #[arg(long)]
    e1: f64,
    #[arg(long)]
    uhat: Option<PathBuf>,
    /// Absolute quadrature tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CarmonaArgs {
    /// Semi-infinite model JSON file (periodic block description)
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    e0: f64,
    #[arg(long)]
    e1: f64,
    /// Stopping tolerance between truncation iterates
    #[arg(long, default_value_t = 2e-2)]
    tol: f64,
    #[arg(long, default_value_t = 512)]
    nmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DoubleAverageArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    energy: f64,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CouplingArgs {
    /// Coupling family JSON file (model plus W and interval)
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    e0: f64,
    #[arg(long)]
    e1: f64,
    #[arg(long = "mu-nodes", default_value_t = 400)]
    mu_nodes: usize,
    #[arg(long, default_value_t = 12)]
    bins: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Input(String),
    Numerical(String),
    VerificationFailed,
}

impl From<bjspec::Error> for CliError {
    fn from(e: bjspec::Error) -> Self {
        use bjspec::Error::*;
        match e {
            NonHermitianDiagonal { .. }
            | SingularOffDiagonal { .. }
            | ShapeMismatch(_)
            | IndexOutOfRange(_)
            | InvalidInput(_) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::VerificationFailed) => {
            eprintln!("verification failed");
            ExitCode::from(4)
        }
    }
}

/// BJSPEC_THREADS caps internal parallelism; default is the machine.
fn configure_threads() {
    if let Ok(v) = std::env::var("BJSPEC_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Command::Density(args) => cmd_density(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Measure(cmd) => match cmd {
            MeasureCmd::Interval(args) => cmd_interval(args),
            MeasureCmd::Carmona(args) => cmd_carmona(args),
            MeasureCmd::DoubleAverage(args) => cmd_double_average(args),
            MeasureCmd::Coupling(args) => cmd_coupling(args),
        },
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("cannot parse {what} file {}: {e}", path.display())))
}

fn read_uhat(path: &Path, l: usize) -> Result<UnitaryMatrix, CliError> {
    let data: MatrixData = read_json(path, "unitary")?;
    let m = matrix_from_data(&data, l, "Uhat").map_err(CliError::from)?;
    UnitaryMatrix::new(m).map_err(CliError::from)
}

fn write_or_print(out: &Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, contents)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

fn header_json(command: &str, config: serde_json::Value, seed: Option<u64>) -> serde_json::Value {
    json!({
        "schema": 1,
        "version": bjspec::VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "ledger": NormalizationLedger::default(),
    })
}

fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

fn cmd_density(args: DensityArgs) -> Result<(), CliError> {
    if args.steps == 0 {
        return Err(CliError::Input("steps must be at least 1".into()));
    }
    if !(args.emin < args.emax) {
        return Err(CliError::Input(format!(
            "need emin < emax, got [{}, {}]",
            args.emin, args.emax
        )));
    }
    let file: ModelFile = read_json(&args.model, "model")?;
    let (model, _) = file.to_model()?;
    let l = model.l();
    let zhat = match &args.uhat {
        Some(p) => {
            let u = read_uhat(p, l)?;
            LeftBoundary::Unitary(u).to_hermitian()?
        }
        None => bjspec::linalg::czeros(l, l),
    };

    let header = header_json(
        "density",
        json!({
            "model": args.model.display().to_string(),
            "emin": args.emin,
            "emax": args.emax,
            "steps": args.steps,
            "uhat": args.uhat.as_ref().map(|p| p.display().to_string()),
        }),
        None,
    );

    let mut csv = String::new();
    csv.push_str(&format!("# {header}\n"));
    csv.push('E');
    for i in 0..l {
        for j in 0..l {
            csv.push_str(&format!(",re_{i}{j},im_{i}{j}"));
        }
    }
    csv.push_str(",flags\n");
    for k in 0..=args.steps {
        let e = args.emin + (args.emax - args.emin) * k as f64 / args.steps as f64;
        let d = averaged_density_left(&model, &zhat, e)?;
        csv.push_str(&fmt_f(e));
        for i in 0..l {
            for j in 0..l {
                csv.push(',');
                csv.push_str(&fmt_f(d.density[(i, j)].re));
                csv.push(',');
                csv.push_str(&fmt_f(d.density[(i, j)].im));
            }
        }
        csv.push_str(",ok\n");
    }
    write_or_print(&args.out, &csv)?;
    if let Some(out) = &args.out {
        let side = out.with_extension("ledger.json");
        std::fs::write(&side, format!("{header:#}\n"))
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", side.display())))?;
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let report = run_suite(&args.suite, args.seed, args.samples)?;
    println!(
        "{:<28} {:<10} {:>12} {:>12} {:>9} {:>9}",
        "check", "status", "statistic", "tolerance", "samples", "time"
    );
    for c in &report.checks {
        println!(
            "{:<28} {:<10} {:>12.3e} {:>12.1e} {:>9} {:>8.2}s",
            c.name,
            format!("{:?}", c.status).to_lowercase(),
            c.statistic,
            c.tolerance,
            c.samples,
            c.runtime_ms / 1e3,
        );
    }
    println!("overall: {}", if report.passed() { "pass" } else { "FAIL" });
    if let Some(out) = &args.out {
        let body = json!({
            "schema": 1,
            "version": bjspec::VERSION,
            "command": "verify",
            "config": { "suite": args.suite, "samples": args.samples },
            "seed": args.seed,
            "ledger": NormalizationLedger::default(),
            "report": report,
        });
        std::fs::write(out, format!("{body:#}\n"))
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", out.display())))?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

fn cmd_interval(args: IntervalArgs) -> Result<(), CliError> {
    let file: ModelFile = read_json(&args.model, "model")?;
    let (model, _) = file.to_model()?;
    let l = model.l();
    let left = match &args.uhat {
        Some(p) => LeftBoundary::Unitary(read_uhat(p, l)?),
        None => LeftBoundary::Unitary(UnitaryMatrix::identity(l)),
    };
    let quad = QuadSpec {
        tol: args.tol,
        ..QuadSpec::default()
    };
    let mass = averaged_interval_measure(&model, &left, args.e0, args.e1, quad)?;
    let body = json!({
        "header": header_json("measure interval", json!({
            "model": args.model.display().to_string(),
            "e0": args.e0, "e1": args.e1, "tol": args.tol,
            "uhat": args.uhat.as_ref().map(|p| p.display().to_string()),
        }), None),
        "result": {
            "e0": mass.e0,
            "e1": mass.e1,
            "mass": matrix_to_data(&mass.mass),
            "trace": (0..l).map(|i| mass.mass[(i, i)].re).sum::<f64>(),
        }
    });
    write_or_print(&args.out, &format!("{body:#}"))
}

fn cmd_carmona(args: CarmonaArgs) -> Result<(), CliError> {
    let file: SemiInfiniteFile = read_json(&args.family, "semi-infinite model")?;
    let semi = file.to_model()?;
    if let Some(warning) = semi.limit_point_diagnostic(64) {
        eprintln!("warning: {warning}");
    }
    let out = carmona_limit_measure(&semi, args.e0, args.e1, args.tol, args.nmax)?;
    let l = semi.l();
    let body = json!({
        "header": header_json("measure carmona", json!({
            "family": args.family.display().to_string(),
            "e0": args.e0, "e1": args.e1, "tol": args.tol, "nmax": args.nmax,
        }), None),
        "result": {
            "e0": out.mass.e0,
            "e1": out.mass.e1,
            "mass": matrix_to_data(&out.mass.mass),
            "trace": (0..l).map(|i| out.mass.mass[(i, i)].re).sum::<f64>(),
            "n_achieved": out.n_achieved,
        }
    });
    write_or_print(&args.out, &format!("{body:#}"))
}

fn cmd_double_average(args: DoubleAverageArgs) -> Result<(), CliError> {
    let file: ModelFile = read_json(&args.model, "model")?;
    let (model, _) = file.to_model()?;
    let l = model.l();
    let est = double_average_density(&model, args.energy, args.samples, args.seed)?;
    let sigma = est.sigma_distance(&cident(l));
    let stderr_mat = CMat::from_fn(l, l, |i, j| {
        bjspec::linalg::c64(est.stderr_re[(i, j)], est.stderr_im[(i, j)])
    });
    let body = json!({
        "header": header_json("measure double-average", json!({
            "model": args.model.display().to_string(),
            "energy": args.energy,
            "samples": args.samples,
        }), Some(args.seed)),
        "result": {
            "mean": matrix_to_data(&est.mean),
            "stderr": matrix_to_data(&stderr_mat),
            "samples": est.samples,
            "skipped": est.skipped,
            "sigma_to_identity": sigma,
        }
    });
    write_or_print(&args.out, &format!("{body:#}"))
}

fn cmd_coupling(args: CouplingArgs) -> Result<(), CliError> {
    let file: FamilyFile = read_json(&args.family, "family")?;
    let family = file.to_family()?;
    let table = coupling_averaged_density(&family, (args.e0, args.e1), args.mu_nodes, args.bins)?;
    let body = json!({
        "header": header_json("measure coupling", json!({
            "family": args.family.display().to_string(),
            "e0": args.e0, "e1": args.e1,
            "mu_nodes": args.mu_nodes, "bins": args.bins,
        }), None),
        "result": {
            "bins": table.bins,
            "min_density": table.min_density,
            "max_density": table.max_density,
        }
    });
    write_or_print(&args.out, &format!("{body:#}"))
}
