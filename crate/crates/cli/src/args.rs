//! Flags, the optional `key=value` config file, and their resolution into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hilbert_sharp::harness::TestFunction;
use hilbert_sharp::kernels::{KernelForm, KernelSpec, Truncation};
use hilbert_sharp::{make_params, Params};

use crate::{Command, ConstantKindChoice, Format, MethodChoice, RunConfig, WeightFunction};

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "HILBERT_SHARP_THREADS";
/// Log-grid shift per unit of `--seed-offset`.
pub const OFFSET_UNIT: f64 = 1.0 / 64.0;
/// Largest accepted `|--seed-offset|`.
pub const MAX_SEED_OFFSET: i64 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "hilbert-sharp",
    version,
    about = "Sharp constants of Hilbert-type integral inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// K₁, K₂ and K by closed form, series and quadrature.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Constant {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodChoice,
        #[arg(long, value_enum, default_value = "all")]
        kind: ConstantKindChoice,
        #[command(flatten)]
        common: Common,
    },
    /// The weight functions at given points against K.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Weights {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        points: Vec<f64>,
        #[arg(long, value_enum, default_value = "omega")]
        function: WeightFunction,
        #[command(flatten)]
        common: Common,
    },
    /// Checks the inequalities on a pair of test functions.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Test function, e.g. `power_exp:a=-0.5:b=1`.
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[command(flatten)]
        common: Common,
    },
    /// The extremal family: εĨ against K as ε shrinks.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Sharpness {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.1,0.01,0.001",
            allow_hyphen_values = true
        )]
        eps: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Norm of the discretized operator at p = 2 on refining grids.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Opnorm {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Cells per side, one estimate each.
        #[arg(long = "n-per-side", value_delimiter = ',', default_value = "64,128,256")]
        n_per_side: Vec<usize>,
        #[arg(long = "t-max", default_value_t = 12.0)]
        t_max: f64,
        #[command(flatten)]
        common: Common,
    },
    /// All three constants over the reference parameter grid.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Sweep {
        #[arg(long, default_value_t = 1)]
        delta: i64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long, required = true)]
    beta: Option<f64>,
    #[arg(long, required = true)]
    mu: Option<f64>,
    #[arg(long, required = true)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1)]
    delta: i64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Nonhomogeneous,
    Homogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TruncationArg {
    None,
    First,
    Second,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "nonhomogeneous")]
    form: FormArg,
    #[arg(long, value_enum, default_value = "none")]
    truncation: TruncationArg,
}

#[derive(Debug, Args)]
struct Common {
    /// Relative tolerance, in (0, 1e-2].
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads; overridden by HILBERT_SHARP_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Shifts the operator grid by this many 1/64 steps in the log variable.
    #[arg(long = "seed-offset", default_value_t = 0)]
    seed_offset: i64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key=value` file of flag values; flags on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Why parsing stopped short of a [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseStop {
    /// `--help` or `--version`: print and exit 0.
    Info(String),
    /// Exit 3 with this message.
    Usage(String),
}

fn usage(msg: impl Into<String>) -> ParseStop {
    ParseStop::Usage(msg.into())
}

/// Lines of a config file as `--key=value` arguments.
pub fn config_flags(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value, got '{line}'", n + 1))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" {
            return Err(format!("config line {}: a config file cannot name another", n + 1));
        }
        out.push(format!("--{key}={}", v.trim()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Parses `argv` (program name first). `env_threads` is the value of
/// [`THREADS_ENV`], if set.
pub fn parse_args(argv: &[String], env_threads: Option<&str>) -> Result<RunConfig, ParseStop> {
    let mut args = argv.to_vec();
    if let Some(path) = config_path(&args) {
        let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("--config {path}: {e}")))?;
        let flags = config_flags(&text).map_err(|e| usage(format!("--config {path}: {e}")))?;
        // File values go first so that later command-line flags override them.
        if args.len() >= 2 {
            args.splice(2..2, flags);
        }
    }
    let cli = Cli::try_parse_from(&args).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ParseStop::Info(e.to_string()),
            _ => ParseStop::Usage(e.render().to_string()),
        }
    })?;
    resolve(cli, env_threads)
}

fn params_of(a: &ParamArgs) -> Result<Params, ParseStop> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("missing required flag --{flag}")));
    make_params(
        need(a.beta, "beta")?,
        need(a.mu, "mu")?,
        need(a.sigma, "sigma")?,
        a.delta,
        a.p,
    )
    .map_err(|e| usage(format!("--beta/--mu/--sigma/--delta/--p: {e}")))
}

fn kernel_of(k: &KernelArgs, params: Params) -> KernelSpec {
    let form = match k.form {
        FormArg::Nonhomogeneous => KernelForm::Nonhomogeneous,
        FormArg::Homogeneous => KernelForm::Homogeneous,
    };
    let truncation = match k.truncation {
        TruncationArg::None => Truncation::None,
        TruncationArg::First => Truncation::FirstKind,
        TruncationArg::Second => Truncation::SecondKind,
    };
    KernelSpec::new(form, truncation, params)
}

fn test_function(flag: &str, s: &str) -> Result<TestFunction, ParseStop> {
    TestFunction::parse(s).map_err(|e| usage(format!("--{flag}: {e}")))
}

fn resolve(cli: Cli, env_threads: Option<&str>) -> Result<RunConfig, ParseStop> {
    let (command, params, kernel, common) = match cli.command {
        Cmd::Constant {
            params,
            method,
            kind,
            common,
        } => (
            Command::Constant { method, kind },
            Some(params_of(&params)?),
            None,
            common,
        ),
        Cmd::Weights {
            params,
            points,
            function,
            common,
        } => {
            if let Some(bad) = points.iter().find(|y| **y == 0.0 || !y.is_finite()) {
                return Err(usage(format!("--points: {bad} must be finite and non-zero")));
            }
            (
                Command::Weights { points, function },
                Some(params_of(&params)?),
                None,
                common,
            )
        }
        Cmd::Verify {
            params,
            kernel,
            f,
            g,
            common,
        } => {
            let pr = params_of(&params)?;
            let command = Command::Verify {
                f: test_function("f", &f)?,
                g: test_function("g", &g)?,
            };
            (command, Some(pr), Some(kernel_of(&kernel, pr)), common)
        }
        Cmd::Sharpness { params, eps, common } => {
            if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return Err(usage("--eps: every value must be positive and finite"));
            }
            (Command::Sharpness { eps }, Some(params_of(&params)?), None, common)
        }
        Cmd::Opnorm {
            params,
            kernel,
            n_per_side,
            t_max,
            common,
        } => {
            let pr = params_of(&params)?;
            if pr.p != 2.0 {
                return Err(usage("--p: operator norms are estimated at p = 2 only"));
            }
            if n_per_side.iter().any(|&n| n < 8) {
                return Err(usage("--n-per-side: every value must be at least 8"));
            }
            if !(t_max > 0.0 && t_max.is_finite()) {
                return Err(usage("--t-max: must be positive and finite"));
            }
            (
                Command::Opnorm { n_per_side, t_max },
                Some(pr),
                Some(kernel_of(&kernel, pr)),
                common,
            )
        }
        Cmd::Sweep { delta, p, common } => {
            if hilbert_sharp::Delta::from_int(delta).is_none() {
                return Err(usage("--delta: must be -1 or 1"));
            }
            if !(p > 0.0 && p != 1.0 && p.is_finite()) {
                return Err(usage("--p: must be positive and not 1"));
            }
            (Command::Sweep { delta, p }, None, None, common)
        }
    };
    if !(common.tol > 0.0 && common.tol <= 1e-2) {
        return Err(usage(format!("--tol: {} is outside (0, 1e-2]", common.tol)));
    }
    if common.seed_offset.abs() > MAX_SEED_OFFSET {
        return Err(usage(format!(
            "--seed-offset: |{}| exceeds {MAX_SEED_OFFSET}",
            common.seed_offset
        )));
    }
    let thread_count = match env_threads {
        Some(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("{THREADS_ENV}: '{v}' is not a thread count")))?,
        None => common
            .threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    if thread_count == 0 {
        return Err(usage("--threads: must be at least 1"));
    }
    Ok(RunConfig {
        command,
        params,
        kernel,
        tol: common.tol,
        output_format: common.format,
        thread_count,
        seed_offset: common.seed_offset,
        out: common.out,
    })
}
