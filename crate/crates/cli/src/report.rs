//! Report assembly and JSON/CSV rendering.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use hilbert_sharp::constants::{constant, cross_check, ConstantKind, ConstantResult, Method};
use hilbert_sharp::harness::{constant_for, verify, Status};
use hilbert_sharp::kernels::{omega, varpi, KernelForm, KernelSpec, Truncation};
use hilbert_sharp::operators::{build_operator_with_offset, estimate_norm, CONSTRUCTION};
use hilbert_sharp::sharpness::{l_tilde_quadrature, sharpness_sweep};
use hilbert_sharp::{reference_grid, Params, Result};

use crate::{Command, ConstantKindChoice, Format, MethodChoice, RunConfig, WeightFunction, OFFSET_UNIT};

/// Top-level JSON fields, in order.
pub const SCHEMA: [&str; 8] = [
    "command",
    "version",
    "params",
    "kernel",
    "tol",
    "status",
    "results",
    "diagnostics",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamsOut {
    pub beta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub delta: i64,
    pub p: f64,
    pub q: f64,
}

impl From<&Params> for ParamsOut {
    fn from(p: &Params) -> Self {
        ParamsOut {
            beta: p.beta,
            mu: p.mu,
            sigma: p.sigma,
            lambda: p.lambda,
            delta: p.delta.as_int(),
            p: p.p,
            q: p.q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelOut {
    pub form: KernelForm,
    pub truncation: Truncation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: Value,
}

fn diag(name: impl Into<String>, value: impl Serialize) -> Diagnostic {
    Diagnostic {
        name: name.into(),
        value: serde_json::to_value(value).unwrap_or(Value::Null),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report<R> {
    pub command: &'static str,
    pub version: &'static str,
    pub params: Option<ParamsOut>,
    pub kernel: Option<KernelOut>,
    pub tol: f64,
    pub status: Status,
    pub results: Vec<R>,
    pub diagnostics: Vec<Diagnostic>,
}

/// JSON (pretty, newline-terminated) or CSV with one row per result.
pub fn render<R: Serialize>(report: &Report<R>, format: Format) -> Result<String> {
    let fail = |e: String| hilbert_sharp::Error::Unsupported(format!("rendering the report: {e}"));
    match format {
        Format::Json => serde_json::to_string_pretty(report)
            .map(|s| s + "\n")
            .map_err(|e| fail(e.to_string())),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &report.results {
                w.serialize(r).map_err(|e| fail(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| fail(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| fail(e.to_string()))
        }
    }
}

struct Ctx<'a> {
    config: &'a RunConfig,
}

impl Ctx<'_> {
    fn report<R>(&self, status: Status, results: Vec<R>, diagnostics: Vec<Diagnostic>) -> Report<R> {
        Report {
            command: self.config.command.name(),
            version: env!("CARGO_PKG_VERSION"),
            params: self.config.params.as_ref().map(ParamsOut::from),
            kernel: self.config.kernel.map(|k| KernelOut {
                form: k.form,
                truncation: k.truncation,
            }),
            tol: self.config.tol,
            status,
            results,
            diagnostics,
        }
    }

    fn params(&self) -> Params {
        self.config.params.expect("the command takes parameters")
    }

    fn kernel(&self) -> KernelSpec {
        self.config.kernel.expect("the command takes a kernel")
    }
}

pub(crate) fn build(config: &RunConfig) -> Result<(String, Status)> {
    let ctx = Ctx { config };
    let fmt = config.output_format;
    macro_rules! emit {
        ($r:expr) => {{
            let r = $r?;
            Ok((render(&r, fmt)?, r.status))
        }};
    }
    match &config.command {
        Command::Constant { method, kind } => emit!(constants(&ctx, *method, *kind)),
        Command::Weights { points, function } => emit!(weights(&ctx, points, *function)),
        Command::Verify { f, g } => emit!(verify_cmd(&ctx, f, g)),
        Command::Sharpness { eps } => emit!(sharpness(&ctx, eps)),
        Command::Opnorm { n_per_side, t_max } => emit!(opnorm(&ctx, n_per_side, *t_max)),
        Command::Sweep { delta, p } => emit!(sweep(&ctx, *delta, *p)),
    }
}

fn kind_name(k: ConstantKind) -> &'static str {
    match k {
        ConstantKind::K1 => "K1",
        ConstantKind::K2 => "K2",
        ConstantKind::K => "K",
    }
}

#[derive(Debug, Serialize)]
struct ConstantRow {
    kind: &'static str,
    method: Method,
    value: f64,
    abs_error_est: f64,
    work: u64,
}

impl ConstantRow {
    fn new(kind: ConstantKind, r: &ConstantResult) -> Self {
        ConstantRow {
            kind: kind_name(kind),
            method: r.method,
            value: r.value,
            abs_error_est: r.abs_error_est,
            work: r.work,
        }
    }
}

fn constants(ctx: &Ctx, method: MethodChoice, kind: ConstantKindChoice) -> Result<Report<ConstantRow>> {
    let pr = ctx.params();
    let tol = ctx.config.tol;
    let kinds: Vec<ConstantKind> = match kind {
        ConstantKindChoice::K1 => vec![ConstantKind::K1],
        ConstantKindChoice::K2 => vec![ConstantKind::K2],
        ConstantKindChoice::K => vec![ConstantKind::K],
        ConstantKindChoice::All => vec![ConstantKind::K1, ConstantKind::K2, ConstantKind::K],
    };
    let single = match method {
        MethodChoice::ClosedForm => Some(Method::ClosedForm),
        MethodChoice::Series => Some(Method::Series),
        MethodChoice::Quadrature => Some(Method::Quadrature),
        MethodChoice::All => None,
    };
    let mut rows = Vec::new();
    let mut diags = Vec::new();
    let mut status = Status::Pass;
    for k in kinds {
        match single {
            Some(m) => rows.push(ConstantRow::new(k, &constant(&pr, k, m, tol)?)),
            None => {
                let c = cross_check(&pr, k, tol)?;
                for r in [&c.closed_form, &c.series, &c.quadrature] {
                    rows.push(ConstantRow::new(k, r));
                }
                diags.push(diag(
                    format!("{}_agreement", kind_name(k)),
                    json!({ "max_rel_discrepancy": c.max_rel_discrepancy, "agree": c.agree }),
                ));
                if !c.agree {
                    status = Status::Fail;
                }
            }
        }
    }
    Ok(ctx.report(status, rows, diags))
}

#[derive(Debug, Serialize)]
struct WeightRow {
    function: &'static str,
    point: f64,
    value: f64,
    abs_error_est: f64,
    k: f64,
    rel_deviation: f64,
}

/// Largest accepted `|ω - K| / K` at tolerance `tol`.
fn weight_threshold(tol: f64) -> f64 {
    (1e-6f64).max(10.0 * tol)
}

fn weights(ctx: &Ctx, points: &[f64], function: WeightFunction) -> Result<Report<WeightRow>> {
    let pr = ctx.params();
    let tol = ctx.config.tol;
    let k = constant(&pr, ConstantKind::K, Method::ClosedForm, tol.min(1e-12))?.value;
    let (name, f): (&'static str, fn(&Params, f64, f64) -> Result<_>) = match function {
        WeightFunction::Omega => ("omega", omega),
        WeightFunction::Varpi => ("varpi", varpi),
    };
    let rows = points
        .par_iter()
        .map(|&y| {
            let w = f(&pr, y, tol)?;
            Ok(WeightRow {
                function: name,
                point: y,
                value: w.value,
                abs_error_est: w.quad.abs_error_est,
                k,
                rel_deviation: (w.value - k) / k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spread = rows.iter().map(|r| r.rel_deviation.abs()).fold(0.0, f64::max);
    let threshold = weight_threshold(tol);
    let status = if spread <= threshold {
        Status::Pass
    } else {
        Status::Fail
    };
    let diags = vec![diag("max_rel_spread", spread), diag("threshold", threshold)];
    Ok(ctx.report(status, rows, diags))
}

#[derive(Debug, Serialize)]
struct CheckRow {
    check: &'static str,
    lhs: f64,
    rhs: f64,
    margin: f64,
    error: f64,
    status: Status,
}

fn verify_cmd(
    ctx: &Ctx,
    f: &hilbert_sharp::harness::TestFunction,
    g: &hilbert_sharp::harness::TestFunction,
) -> Result<Report<CheckRow>> {
    let spec = ctx.kernel();
    let r = verify(&spec, f, g, ctx.config.tol)?;
    let rows = r
        .checks
        .iter()
        .map(|c| CheckRow {
            check: c.name,
            lhs: c.lhs,
            rhs: c.rhs,
            margin: c.margin,
            error: c.error,
            status: c.status,
        })
        .collect();
    let diags = vec![
        diag("f", f),
        diag("g", g),
        diag("regime", r.regime),
        diag("constant", r.constant),
        diag("norms", r.norms),
        diag("i", r.i),
        diag("j", r.j),
        diag("quad_diags", &r.quad_diags),
    ];
    Ok(ctx.report(r.status, rows, diags))
}

#[derive(Debug, Serialize)]
struct SharpnessRow {
    eps: f64,
    eps_i_tilde: f64,
    abs_error_est: f64,
    l_tilde: f64,
    l_tilde_quadrature: f64,
    ratio: f64,
}

fn sharpness(ctx: &Ctx, eps: &[f64]) -> Result<Report<SharpnessRow>> {
    let pr = ctx.params();
    let tol = ctx.config.tol;
    let s = sharpness_sweep(&pr, eps, tol)?;
    let l_quad = eps
        .par_iter()
        .map(|&e| l_tilde_quadrature(&pr, e, tol))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<SharpnessRow> = s
        .points
        .iter()
        .zip(&l_quad)
        .map(|(p, &lq)| SharpnessRow {
            eps: p.eps,
            eps_i_tilde: p.eps_i_tilde,
            abs_error_est: p.abs_error_est,
            l_tilde: p.l_tilde,
            l_tilde_quadrature: lq,
            ratio: p.ratio,
        })
        .collect();
    // Ratios must rise as eps falls, stay below 1, and L̃ must match 1/ε.
    let mut by_eps: Vec<&SharpnessRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let monotone = by_eps
        .windows(2)
        .all(|w| w[1].eps == w[0].eps || w[1].ratio > w[0].ratio);
    let below = rows.iter().all(|r| r.eps_i_tilde <= s.k + 3.0 * r.abs_error_est);
    let l_tol = (1e-10f64).max(10.0 * tol);
    let l_ok = rows.iter().all(|r| (r.l_tilde_quadrature * r.eps - 1.0).abs() <= l_tol);
    let status = if monotone && below && l_ok {
        Status::Pass
    } else {
        Status::Fail
    };
    let mut diags = vec![
        diag("k", s.k),
        diag("ratios_monotone", monotone),
        diag("below_k", below),
        diag("l_tilde_matches", l_ok),
        diag("extrapolated_ratio", s.extrapolated_ratio),
        diag("extrapolated_limit", s.extrapolated_limit),
    ];
    if let Some(lim) = s.extrapolated_limit {
        diags.push(diag("extrapolated_rel_deviation", (lim - s.k) / s.k));
    }
    Ok(ctx.report(status, rows, diags))
}

#[derive(Debug, Serialize)]
struct NormRow {
    n_per_side: usize,
    t_max: f64,
    norm: f64,
    iterations: usize,
    converged: bool,
    constant: f64,
    ratio: f64,
}

/// Lower end of the accepted band, as a fraction of the constant.
const NORM_LOW: f64 = 0.95;
/// Upper slack of the accepted band.
const NORM_SLACK: f64 = 1e-2;
/// Allowed decrease between refinements.
const REFINE_SLACK: f64 = 1e-6;
/// Power-iteration tolerance on successive Rayleigh quotients.
const NORM_TOL: f64 = 1e-13;

fn opnorm(ctx: &Ctx, n_per_side: &[usize], t_max: f64) -> Result<Report<NormRow>> {
    let spec = ctx.kernel();
    let c = constant_for(&spec, 1e-13)?.value;
    let offset = ctx.config.seed_offset as f64 * OFFSET_UNIT;
    let mut rows = Vec::new();
    for &n in n_per_side {
        let op = build_operator_with_offset(&spec, n, t_max, 2.0, offset)?;
        let est = estimate_norm(&op, NORM_TOL)?;
        rows.push(NormRow {
            n_per_side: n,
            t_max,
            norm: est.value,
            iterations: est.iterations,
            converged: est.converged,
            constant: c,
            ratio: est.value / c,
        });
    }
    let mut sorted: Vec<&NormRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.n_per_side);
    let monotone = sorted.windows(2).all(|w| w[1].norm >= w[0].norm - REFINE_SLACK);
    let bounded = rows.iter().all(|r| r.norm <= c * (1.0 + NORM_SLACK));
    let converged = rows.iter().all(|r| r.converged);
    let reached = sorted.last().is_some_and(|r| r.norm >= NORM_LOW * c);
    // A norm short of the band is a discretization shortfall, not a violation.
    let status = if !monotone || !bounded {
        Status::Fail
    } else if !converged || !reached {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    let diags = vec![
        diag("construction", CONSTRUCTION),
        diag("grid_offset", offset),
        diag("monotone", monotone),
        diag("within_upper_bound", bounded),
        diag("reached_lower_band", reached),
        diag("band", [NORM_LOW, 1.0 + NORM_SLACK]),
    ];
    Ok(ctx.report(status, rows, diags))
}

#[derive(Debug, Serialize)]
struct SweepRow {
    beta: f64,
    mu: f64,
    sigma: f64,
    lambda: f64,
    k1: f64,
    k2: f64,
    k: f64,
    max_rel_discrepancy: f64,
    agree: bool,
}

fn sweep(ctx: &Ctx, delta: i64, p: f64) -> Result<Report<SweepRow>> {
    let tol = ctx.config.tol;
    let grid = reference_grid(delta, p)?;
    let rows = grid
        .par_iter()
        .map(|pr| {
            let checks = [ConstantKind::K1, ConstantKind::K2, ConstantKind::K].map(|k| cross_check(pr, k, tol));
            let [a, b, c] = checks;
            let (a, b, c) = (a?, b?, c?);
            Ok(SweepRow {
                beta: pr.beta,
                mu: pr.mu,
                sigma: pr.sigma,
                lambda: pr.lambda,
                k1: a.closed_form.value,
                k2: b.closed_form.value,
                k: c.closed_form.value,
                max_rel_discrepancy: a
                    .max_rel_discrepancy
                    .max(b.max_rel_discrepancy)
                    .max(c.max_rel_discrepancy),
                agree: a.agree && b.agree && c.agree,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let status = if rows.iter().all(|r| r.agree) {
        Status::Pass
    } else {
        Status::Fail
    };
    let diags = vec![diag("grid_points", rows.len()), diag("delta", delta), diag("p", p)];
    Ok(ctx.report(status, rows, diags))
}
