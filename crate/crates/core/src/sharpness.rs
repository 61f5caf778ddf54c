//! Best-possibility probe: the extremal family `f̃, g̃` and the limit `εĨ -> K(σ)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{k_total, Method};
use crate::error::{domain, Error, Result};
use crate::harness::{bilinear_i, Estimate, Profile};
use crate::kernels::KernelSpec;
use crate::params::{Delta, Params, Regime};
use crate::quadrature::{integrate_with, Local, Point, QuadConfig, QuadResult, SingularitySpec};

/// Default `ε` grid of a sweep.
pub const DEFAULT_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// `f̃(x) = |x|^{δ(σ-2ε/p)-1}` where `|x|^δ >= 1`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalF {
    pub exponent: f64,
    pub delta: Delta,
}

/// `g̃(y) = |y|^{σ+2ε/q-1}` on `(-1, 1)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalG {
    pub exponent: f64,
}

impl ExtremalF {
    /// `ln f̃(x)`, `-∞` off the support.
    pub fn ln_eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        let inside = match self.delta {
            Delta::Plus => ax >= 1.0,
            Delta::Minus => ax <= 1.0 && ax > 0.0,
        };
        if inside {
            self.exponent * ax.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

impl ExtremalG {
    /// `ln g̃(y)`, `-∞` off the support.
    pub fn ln_eval(&self, y: f64) -> f64 {
        let ay = y.abs();
        if ay < 1.0 && ay > 0.0 {
            self.exponent * ay.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

impl Profile for ExtremalF {
    fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x).exp()
    }

    fn origin_exponent(&self) -> Option<f64> {
        (self.delta == Delta::Minus).then_some(self.exponent)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![-1.0, 1.0]
    }
}

impl Profile for ExtremalG {
    fn eval(&self, y: f64) -> f64 {
        self.ln_eval(y).exp()
    }

    fn origin_exponent(&self) -> Option<f64> {
        Some(self.exponent)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![-1.0, 1.0]
    }
}

/// Rejects `ε` outside the range where the shifted exponents stay admissible.
pub fn check_eps(params: &Params, eps: f64) -> Result<()> {
    if params.regime() != Regime::Forward {
        return Err(Error::Unsupported("sharpness probe needs p > 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain("sharpness", format!("eps = {eps} must be positive and finite")));
    }
    let shifted = params.sigma - 2.0 * eps / params.p;
    if !(shifted > -params.beta) {
        return Err(domain(
            "sharpness",
            format!(
                "eps = {eps} too large: sigma - 2 eps / p = {shifted} must exceed -beta = {}",
                -params.beta
            ),
        ));
    }
    Ok(())
}

/// The extremal pair for `ε`.
pub fn extremal_pair(params: &Params, eps: f64) -> Result<(ExtremalF, ExtremalG)> {
    check_eps(params, eps)?;
    let (p, q, s) = (params.p, params.q, params.sigma);
    let f = ExtremalF {
        exponent: params.delta.as_f64() * (s - 2.0 * eps / p) - 1.0,
        delta: params.delta,
    };
    let g = ExtremalG {
        exponent: s + 2.0 * eps / q - 1.0,
    };
    Ok((f, g))
}

/// `L̃ = ‖f̃‖·‖g̃‖`, which is exactly `1/ε`.
pub fn l_tilde(eps: f64) -> f64 {
    1.0 / eps
}

fn converged(q: QuadResult, what: &str) -> Result<QuadResult> {
    if q.converged {
        Ok(q)
    } else {
        Err(Error::Convergence {
            what: what.into(),
            value: q.value,
            abs_error_est: q.abs_error_est,
        })
    }
}

fn cfg(tol: f64) -> QuadConfig {
    QuadConfig::default().with_rel_tol(tol)
}

/// `εĨ` from the reduced form
/// `∫_0^1 [(1-u)^{-α} + (1+u)^{-α}] u^{β+σ+2ε/q-1} du + ∫_1^∞ [(u-1)^{-α} + (1+u)^{-α}] u^{σ-2ε/p-1} du`.
pub fn eps_i_tilde(params: &Params, eps: f64, tol: f64) -> Result<QuadResult> {
    check_eps(params, eps)?;
    let a = params.alpha();
    let lower = params.beta + params.sigma + 2.0 * eps / params.q - 1.0;
    let upper = params.sigma - 2.0 * eps / params.p - 1.0;
    let near = Local(|u: Point| (u.minus(1.0).abs().powf(-a) + (1.0 + u.x).powf(-a)) * u.x.powf(lower));
    let far = Local(|u: Point| (u.minus(1.0).abs().powf(-a) + (1.0 + u.x).powf(-a)) * u.x.powf(upper));
    let curve = (-a).min(0.0);
    let first = integrate_with(
        &near,
        0.0,
        1.0,
        &SingularitySpec::at(0.0, lower)?.with(1.0, curve)?,
        f64::MIN_POSITIVE,
        &cfg(tol),
    )?;
    let second = integrate_with(
        &far,
        1.0,
        f64::INFINITY,
        &SingularitySpec::at(1.0, curve)?,
        f64::MIN_POSITIVE,
        &cfg(tol),
    )?;
    let first = converged(first, "reduced form on (0, 1)")?;
    let second = converged(second, "reduced form on (1, inf)")?;
    Ok(QuadResult {
        value: first.value + second.value,
        abs_error_est: first.abs_error_est + second.abs_error_est,
        n_evals: first.n_evals + second.n_evals,
        converged: true,
    })
}

/// `L̃` by quadrature of the two weighted norm integrals of `f̃` and `g̃`.
///
/// Both integrands are even, so each is taken on the half line; the part of
/// `f̃` on `[1, ∞)` is folded onto `(0, 1]` by `x = 1/v`.
pub fn l_tilde_quadrature(params: &Params, eps: f64, tol: f64) -> Result<f64> {
    let (f, g) = extremal_pair(params, eps)?;
    let (p, q, s) = (params.p, params.q, params.sigma);
    let wf = p * (1.0 - params.delta.as_f64() * s) - 1.0;
    let wg = q * (1.0 - s) - 1.0;
    // Both integrands are |x|^{2ε-1} after folding, the exponent declared at 0.
    let sing = SingularitySpec::at(0.0, 2.0 * eps - 1.0)?;
    // In logs: the weight and the power of the function overflow separately
    // where the variable nears zero, and x = 1/v reaches the overflow range.
    let f_part = Local(|v: Point| {
        let lv = v.x.ln();
        match params.delta {
            Delta::Plus => (-(wf + 2.0) * lv + p * f.ln_eval(1.0 / v.x)).exp(),
            Delta::Minus => (wf * lv + p * f.ln_eval(v.x)).exp(),
        }
    });
    let g_part = Local(|y: Point| (wg * y.x.ln() + q * g.ln_eval(y.x)).exp());
    let nf = converged(
        integrate_with(&f_part, 0.0, 1.0, &sing, f64::MIN_POSITIVE, &cfg(tol))?,
        "norm of f",
    )?;
    let ng = converged(
        integrate_with(&g_part, 0.0, 1.0, &sing, f64::MIN_POSITIVE, &cfg(tol))?,
        "norm of g",
    )?;
    Ok((2.0 * nf.value).powf(1.0 / p) * (2.0 * ng.value).powf(1.0 / q))
}

/// `ε·Ĩ` from the full double integral, a check on the reduced form.
pub fn eps_i_tilde_2d(params: &Params, eps: f64, tol: f64) -> Result<Estimate> {
    let (f, g) = extremal_pair(params, eps)?;
    let e = bilinear_i(&KernelSpec::nonhomogeneous(*params), &f, &g, tol)?;
    Ok(Estimate {
        value: eps * e.value,
        abs_error_est: eps * e.abs_error_est,
        ..e
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessPoint {
    pub eps: f64,
    pub eps_i_tilde: f64,
    pub abs_error_est: f64,
    pub l_tilde: f64,
    /// `εĨ / K(σ)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub k: f64,
    pub points: Vec<SharpnessPoint>,
    /// Limit of `ratio` from a line through the two smallest `ε`, when there are two.
    pub extrapolated_ratio: Option<f64>,
    /// `K(σ)` times the extrapolated ratio.
    pub extrapolated_limit: Option<f64>,
}

/// Evaluates `εĨ` at every `ε` (in parallel, results in input order) and
/// extrapolates `ratio(ε) ≈ 1 - cε` to `ε = 0`.
pub fn sharpness_sweep(params: &Params, eps_list: &[f64], tol: f64) -> Result<Sweep> {
    let k = k_total(params, Method::ClosedForm, tol)?.value;
    let points = eps_list
        .par_iter()
        .map(|&eps| {
            let r = eps_i_tilde(params, eps, tol)?;
            Ok(SharpnessPoint {
                eps,
                eps_i_tilde: r.value,
                abs_error_est: r.abs_error_est,
                l_tilde: l_tilde(eps),
                ratio: r.value / k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let extrapolated_ratio = extrapolate(&points);
    Ok(Sweep {
        k,
        extrapolated_limit: extrapolated_ratio.map(|r| r * k),
        extrapolated_ratio,
        points,
    })
}

/// Value at `ε = 0` of the line through the two points with the smallest distinct `ε`.
fn extrapolate(points: &[SharpnessPoint]) -> Option<f64> {
    let mut sorted: Vec<&SharpnessPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    sorted.dedup_by(|a, b| a.eps == b.eps);
    let [a, b, ..] = sorted[..] else { return None };
    Some((a.ratio * b.eps - b.ratio * a.eps) / (b.eps - a.eps))
}
