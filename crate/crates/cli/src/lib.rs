//! Command-line reports for the `hilbert-sharp` toolkit.
//!
//! Every command writes one report, JSON or CSV, to standard output or
//! `--out`. Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 usage error.

mod args;
mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use hilbert_sharp::harness::{Status, TestFunction};
use hilbert_sharp::kernels::KernelSpec;
use hilbert_sharp::{Error, Params};

pub use args::{config_flags, parse_args, ParseStop, MAX_SEED_OFFSET, OFFSET_UNIT, THREADS_ENV};
pub use report::{render, Diagnostic, KernelOut, ParamsOut, Report, SCHEMA};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    ClosedForm,
    Series,
    Quadrature,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstantKindChoice {
    K1,
    K2,
    K,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightFunction {
    Omega,
    Varpi,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Constant {
        method: MethodChoice,
        kind: ConstantKindChoice,
    },
    Weights {
        points: Vec<f64>,
        function: WeightFunction,
    },
    Verify {
        f: TestFunction,
        g: TestFunction,
    },
    Sharpness {
        eps: Vec<f64>,
    },
    Opnorm {
        n_per_side: Vec<usize>,
        t_max: f64,
    },
    Sweep {
        delta: i64,
        p: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constant { .. } => "constant",
            Command::Weights { .. } => "weights",
            Command::Verify { .. } => "verify",
            Command::Sharpness { .. } => "sharpness",
            Command::Opnorm { .. } => "opnorm",
            Command::Sweep { .. } => "sweep",
        }
    }
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Absent only for `sweep`, which walks its own grid.
    pub params: Option<Params>,
    /// Present for the commands that take `--form` and `--truncation`.
    pub kernel: Option<KernelSpec>,
    pub tol: f64,
    pub output_format: Format,
    pub thread_count: usize,
    pub seed_offset: i64,
    pub out: Option<PathBuf>,
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Pass => EXIT_PASS,
        Status::Fail => EXIT_FAIL,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Exit code for a numerical error: bad input is a usage error, a method
/// that could not reach its tolerance leaves the question open.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain { .. }
        | Error::InvalidParams { .. }
        | Error::InvalidInterval { .. }
        | Error::Divergent { .. }
        | Error::DimensionMismatch { .. }
        | Error::Unsupported(_) => EXIT_USAGE,
        Error::Convergence { .. } | Error::NonFinite { .. } | Error::InvalidSingularity(_) | Error::Aborted => {
            EXIT_INCONCLUSIVE
        }
    }
}

/// The report text and its status, computed on a pool of `thread_count` workers.
pub fn execute(config: &RunConfig) -> hilbert_sharp::Result<(String, Status)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.thread_count)
        .build()
        .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    pool.install(|| report::build(config))
}

/// Runs the command, writes its report and returns the exit code.
pub fn run(config: &RunConfig) -> i32 {
    let (text, status) = match execute(config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {} failed: {e}", config.command.name());
            return error_exit_code(&e);
        }
    };
    let written = match &config.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("--out {}: {e}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| e.to_string())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    exit_code(status)
}

/// Parses `argv`, runs, and returns the exit code.
pub fn main_with(argv: &[String], env_threads: Option<&str>) -> i32 {
    match parse_args(argv, env_threads) {
        Ok(config) => run(&config),
        Err(ParseStop::Info(text)) => {
            print!("{text}");
            EXIT_PASS
        }
        Err(ParseStop::Usage(text)) => {
            eprintln!("{text}");
            EXIT_USAGE
        }
    }
}
