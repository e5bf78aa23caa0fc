//! `gaussmeter` command-line front end.

// NaN must fail range checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod matrix_file;
mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gaussmeter::capacity::{cea_multimode, sweep_one_mode, EnergyConstraint, MatrixData, OptimizerSettings};
use gaussmeter::gauge::{entropy_reduction_gauge, posterior_params, GaugeMeasurement, GaugeState};
use gaussmeter::symplectic::{
    entropy_reduction_general, posterior_covariance, GeneralMeasurement, RealCovariance,
};
use gaussmeter::verify::{self, Suite, SuiteReport};
use gaussmeter::{Error, Execution, HermitianMatrix, LogBase, RMatrix};
use serde_json::{json, Value};

use matrix_file::{Layout, MatrixFile};
use sweep::SweepSpec;

const SCHEMA: &str = "1";
const THREADS_ENV: &str = "GAUSSMETER_THREADS";

#[derive(Parser)]
#[command(name = "gaussmeter", version, about = "Entropy reduction and entanglement-assisted capacity of Gaussian measurement channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    Bits,
    Nats,
}

impl From<Base> for LogBase {
    fn from(b: Base) -> Self {
        match b {
            Base::Bits => LogBase::Bits,
            Base::Nats => LogBase::Nats,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    Lemma1,
    Theorem2,
    Prop1,
    Cp,
    Correspondence,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy reduction, posterior noise and gain matrix for a gauge-invariant pair (Λ, N).
    ErGauge {
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        noise: PathBuf,
        #[arg(long, value_enum, default_value = "bits")]
        base: Base,
    },
    /// Entropy reduction and posterior covariance for real covariances (α, β).
    ErGeneral {
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        beta: PathBuf,
        #[arg(long, value_enum, default_value = "bits")]
        base: Base,
    },
    /// Energy-constrained entanglement-assisted capacity.
    Capacity {
        #[arg(long)]
        noise: PathBuf,
        /// Energy matrix ε; identity if omitted.
        #[arg(long)]
        epsilon: Option<PathBuf>,
        #[arg(long)]
        energy: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        multistarts: usize,
        #[arg(long, value_enum, default_value = "bits")]
        base: Base,
    },
    /// One-mode capacity table over N and E, as CSV.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// CSV destination; `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Runs the randomized oracle suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        case: Case,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit statuses.
enum Failure {
    Validation(String),
    NonConvergence,
    Verification,
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<matrix_file::MatrixFileError> for Failure {
    fn from(e: matrix_file::MatrixFileError) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn hermitian(file: MatrixFile) -> Result<HermitianMatrix, Failure> {
    Ok(HermitianMatrix::new(file.matrix)?)
}

fn real_rows(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn print_json(mut value: Value) -> Result<(), Failure> {
    if let Value::Object(map) = &mut value {
        map.insert("schema".into(), json!(SCHEMA));
    }
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn er_gauge(lambda: PathBuf, noise: PathBuf, base: LogBase) -> Result<(), Failure> {
    let lambda = hermitian(MatrixFile::read(&lambda, Layout::Complex)?)?;
    let noise = hermitian(MatrixFile::read(&noise, Layout::Complex)?)?;
    let state = GaugeState::new(lambda)?;
    let meas = GaugeMeasurement::new(noise)?;
    let er = entropy_reduction_gauge(&state, &meas, base)?;
    let post = posterior_params(&state, &meas)?;
    print_json(json!({
        "er": er,
        "ntilde": MatrixData::from(post.ntilde.as_matrix()),
        "k": MatrixData::from(&post.k),
        "base": base,
    }))
}

fn er_general(alpha: PathBuf, beta: PathBuf, base: LogBase) -> Result<(), Failure> {
    let alpha = RealCovariance::new(MatrixFile::read(&alpha, Layout::Real)?.real_part())?;
    let beta = RealCovariance::new(MatrixFile::read(&beta, Layout::Real)?.real_part())?;
    let meas = GeneralMeasurement::new(beta);
    let er = entropy_reduction_general(&alpha, &meas, base)?;
    let tilde = posterior_covariance(&alpha, meas.beta())?;
    print_json(json!({
        "er": er,
        "alpha_tilde": real_rows(tilde.matrix()),
        "symplectic_spectrum": {
            "alpha": alpha.symplectic_spectrum()?,
            "beta": meas.beta().symplectic_spectrum()?,
            "alpha_tilde": tilde.symplectic_spectrum()?,
        },
        "base": base,
    }))
}

fn capacity(
    noise: PathBuf,
    epsilon: Option<PathBuf>,
    energy: f64,
    settings: OptimizerSettings,
    base: LogBase,
) -> Result<(), Failure> {
    let noise = hermitian(MatrixFile::read(&noise, Layout::Complex)?)?;
    let s = noise.dim();
    let epsilon = match epsilon {
        Some(p) => hermitian(MatrixFile::read(&p, Layout::Complex)?)?,
        None => HermitianMatrix::identity(s),
    };
    let constraint = EnergyConstraint::new(epsilon, energy)?;
    let meas = GaugeMeasurement::new(noise)?;
    let report = cea_multimode(&meas, &constraint, base, &settings)?;
    let converged = report.converged;
    print_json(serde_json::to_value(&report).map_err(|e| Failure::Io(e.to_string()))?)?;
    if converged {
        Ok(())
    } else {
        Err(Failure::NonConvergence)
    }
}

fn run_sweep(spec: PathBuf, out: PathBuf, svg: Option<PathBuf>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&spec).map_err(|e| Failure::Validation(format!("{}: {e}", spec.display())))?;
    let spec = SweepSpec::parse(&text).map_err(Failure::Validation)?;
    let rows = sweep_one_mode(&spec.n, &spec.energies(), spec.base, Execution::Parallel)?;
    let csv_err = |e: csv::Error| Failure::Io(e.to_string());
    if out.as_os_str() == "-" {
        sweep::write_csv(io::stdout().lock(), &rows).map_err(csv_err)?;
    } else {
        sweep::write_csv(BufWriter::new(File::create(&out)?), &rows).map_err(csv_err)?;
    }
    if let Some(path) = svg {
        std::fs::write(path, sweep::render_svg(&rows, spec.base))?;
    }
    Ok(())
}

fn run_verify(case: Case, seed: u64) -> Result<(), Failure> {
    let reports: Vec<SuiteReport> = match case {
        Case::All => verify::run_all(seed),
        Case::Lemma1 => vec![verify::run(Suite::Lemma1, seed)],
        Case::Theorem2 => vec![verify::run(Suite::Theorem2, seed)],
        Case::Prop1 => vec![verify::run(Suite::Prop1, seed)],
        Case::Cp => vec![verify::run(Suite::Cp, seed)],
        Case::Correspondence => vec![verify::run(Suite::Correspondence, seed)],
    };
    let mut err = io::stderr().lock();
    for r in &reports {
        for c in &r.checks {
            writeln!(
                err,
                "{:<15} {:<4} {:<55} {:>12.4e} (limit {:.1e})",
                r.suite.name(),
                if c.passed { "PASS" } else { "FAIL" },
                c.label,
                c.value,
                c.threshold
            )?;
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    print_json(json!({ "seed": seed, "passed": passed, "suites": reports }))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Validation(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Io(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::ErGauge { lambda, noise, base } => er_gauge(lambda, noise, base.into()),
        Command::ErGeneral { alpha, beta, base } => er_general(alpha, beta, base.into()),
        Command::Capacity {
            noise,
            epsilon,
            energy,
            seed,
            multistarts,
            base,
        } => {
            let settings = OptimizerSettings {
                seed,
                multistarts,
                ..OptimizerSettings::default()
            };
            capacity(noise, epsilon, energy, settings, base.into())
        }
        Command::Sweep { spec, out, svg } => run_sweep(spec, out, svg),
        Command::Verify { case, seed } => run_verify(case, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NonConvergence) => {
            eprintln!("error: optimizer did not reach the gradient tolerance; best point reported");
            ExitCode::from(3)
        }
        Err(Failure::Verification) => {
            eprintln!("error: verification failed");
            ExitCode::from(4)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
