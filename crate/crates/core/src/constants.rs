//! `K₁(σ)`, `K₂(σ)` and `K(σ) = K₁ + K₂` by closed form, series, and quadrature.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::params::Params;
use crate::quadrature::{integrate, Local, Point, SingularitySpec};
use crate::specfun::{beta, hyp_at_minus_one_tol, Binomials};
use crate::sum::Accumulator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Series,
    Quadrature,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ClosedForm, Method::Series, Method::Quadrature];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConstantKind {
    K1,
    K2,
    K,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantResult {
    pub value: f64,
    pub method: Method,
    pub abs_error_est: f64,
    /// Series terms or integrand evaluations.
    pub work: u64,
}

pub const DEFAULT_TOL: f64 = 1e-12;
/// Hard cap on series terms.
pub const MAX_SERIES_TERMS: u64 = 100_000;
const SERIES_START: u64 = 16;
/// Relative accuracy assumed for a gamma-ratio beta value.
const BETA_REL_ERR: f64 = 1e-13;

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(domain("constants", format!("tolerance {tol} must lie in (0, 1)")));
    }
    Ok(())
}

/// `B(1-λ-β, θ) + (1/θ) F(λ+β, θ; 1+θ; -1)` with `θ = β + σ` (or `β + μ`).
fn closed_half(alpha: f64, theta: f64, tol: f64) -> Result<ConstantResult> {
    let b = beta(1.0 - alpha, theta)?;
    let h = hyp_at_minus_one_tol(alpha, theta, tol.min(1e-13))?;
    Ok(ConstantResult {
        value: b + h.value,
        method: Method::ClosedForm,
        abs_error_est: BETA_REL_ERR * b + h.abs_error_est,
        work: 1,
    })
}

/// Richardson extrapolation of `Σ_k term(k)`, whose terms behave like
/// `k^{α-2}` times a power series in `1/k`.
fn extrapolated_series(alpha: f64, tol: f64, term: impl Fn(u64, f64) -> f64) -> Result<ConstantResult> {
    let finite = alpha <= 0.0 && alpha.fract() == 0.0;
    let mut binom = Binomials::new(-alpha);
    let mut acc = Accumulator::new();
    let mut k = 0u64;
    let mut next_even = || {
        let b = binom.next().unwrap_or(0.0);
        binom.next();
        b
    };
    if finite {
        // binom(-α, 2k) vanishes once 2k > -α.
        while (2 * k) as f64 <= -alpha {
            acc.add(term(k, next_even()));
            k += 1;
        }
        let value = acc.value();
        return Ok(ConstantResult {
            value,
            method: Method::Series,
            abs_error_est: 4.0 * f64::EPSILON * value.abs() * (k as f64 + 1.0),
            work: 2 * k,
        });
    }
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut n = SERIES_START;
    let mut best: Option<(f64, f64)> = None;
    while 2 * n <= MAX_SERIES_TERMS {
        while k < n {
            acc.add(term(k, next_even()));
            k += 1;
        }
        let mut row = vec![acc.value()];
        if let Some(prev) = table.last() {
            for j in 0..prev.len() {
                let f = 2f64.powf(alpha - 1.0 - j as f64);
                row.push((row[j] - f * prev[j]) / (1.0 - f));
            }
        }
        let m = row.len();
        if m >= 3 {
            let value = row[m - 1];
            let prev = table.last().unwrap();
            let err = (value - row[m - 2]).abs().max((value - prev[prev.len() - 1]).abs());
            if best.map_or(true, |(_, e)| err < e) {
                best = Some((value, err));
            }
            if err <= tol * value.abs() {
                return Ok(ConstantResult {
                    value,
                    method: Method::Series,
                    abs_error_est: err,
                    work: 2 * k,
                });
            }
        }
        table.push(row);
        n *= 2;
    }
    let (value, err) = best.unwrap_or((acc.value(), f64::INFINITY));
    Err(Error::Convergence {
        what: format!("series for alpha={alpha} within {MAX_SERIES_TERMS} terms"),
        value,
        abs_error_est: err,
    })
}

/// `2 Σ_k binom(-λ-β, 2k) / (2k + θ)`.
fn series_half(alpha: f64, theta: f64, tol: f64) -> Result<ConstantResult> {
    extrapolated_series(alpha, tol, |k, b| 2.0 * b / (2.0 * k as f64 + theta))
}

/// `∫_{-1}^{1} |u|^{θ-1} |1+u|^{-α} du`.
fn quadrature_first(alpha: f64, theta: f64, tol: f64) -> Result<ConstantResult> {
    let lower = (-alpha * std::f64::consts::LN_2).exp().min(1.0) / theta;
    let mut sing = SingularitySpec::at(0.0, theta - 1.0)?;
    sing.push(-1.0, if alpha > 0.0 { -alpha } else { 0.0 })?;
    let f = Local(|p: Point| p.x.abs().powf(theta - 1.0) * p.minus(-1.0).abs().powf(-alpha));
    let r = integrate(&f, -1.0, 1.0, &sing, tol * lower)?;
    quad_result(r, "first-kind constant")
}

/// `∫_{|u|>=1} |u|^{θ'-1} |1+u|^{-α} du` where `θ' = σ` for `K₂(σ)`.
fn quadrature_second(alpha: f64, sigma: f64, theta_mu: f64, tol: f64) -> Result<ConstantResult> {
    let lower = (-alpha * std::f64::consts::LN_2).exp().min(1.0) / theta_mu;
    let f = Local(|p: Point| p.x.abs().powf(sigma - 1.0) * p.minus(-1.0).abs().powf(-alpha));
    let neg = SingularitySpec::at(-1.0, if alpha > 0.0 { -alpha } else { 0.0 })?;
    let a = integrate(&f, f64::NEG_INFINITY, -1.0, &neg, 0.5 * tol * lower)?;
    let b = integrate(&f, 1.0, f64::INFINITY, &SingularitySpec::none(), 0.5 * tol * lower)?;
    let r = crate::quadrature::QuadResult {
        value: a.value + b.value,
        abs_error_est: a.abs_error_est + b.abs_error_est,
        n_evals: a.n_evals + b.n_evals,
        converged: a.converged && b.converged,
    };
    quad_result(r, "second-kind constant")
}

fn quad_result(r: crate::quadrature::QuadResult, what: &str) -> Result<ConstantResult> {
    if !r.converged {
        return Err(Error::Convergence {
            what: what.to_string(),
            value: r.value,
            abs_error_est: r.abs_error_est,
        });
    }
    Ok(ConstantResult {
        value: r.value,
        method: Method::Quadrature,
        abs_error_est: r.abs_error_est,
        work: r.n_evals,
    })
}

/// `K₁(σ) = ∫_{-1}^{1} min{1,|u|}^β |u|^{σ-1} (1+u)^{-(λ+β)} du`.
pub fn k1(params: &Params, method: Method, tol: f64) -> Result<ConstantResult> {
    check_tol(tol)?;
    let alpha = params.alpha();
    let theta = params.beta + params.sigma;
    match method {
        Method::ClosedForm => closed_half(alpha, theta, tol),
        Method::Series => series_half(alpha, theta, tol),
        Method::Quadrature => quadrature_first(alpha, theta, tol),
    }
}

/// `K₂(σ) = ∫_{|u|>=1} |u|^{σ-1} |1+u|^{-(λ+β)} du`, equal to `K₁(μ)`.
pub fn k2(params: &Params, method: Method, tol: f64) -> Result<ConstantResult> {
    check_tol(tol)?;
    let alpha = params.alpha();
    let theta = params.beta + params.mu;
    match method {
        Method::ClosedForm => closed_half(alpha, theta, tol),
        Method::Series => series_half(alpha, theta, tol),
        Method::Quadrature => quadrature_second(alpha, params.sigma, theta, tol),
    }
}

/// `K(σ) = K₁(σ) + K₂(σ)`.
pub fn k_total(params: &Params, method: Method, tol: f64) -> Result<ConstantResult> {
    let a = k1(params, method, 0.5 * tol)?;
    let b = k2(params, method, 0.5 * tol)?;
    Ok(ConstantResult {
        value: a.value + b.value,
        method,
        abs_error_est: a.abs_error_est + b.abs_error_est,
        work: a.work + b.work,
    })
}

/// `K(σ)` from the single combined series
/// `2 Σ_k (4k+2β+λ) / ((2k+β+σ)(2k+β+μ)) · binom(-λ-β, 2k)`.
pub fn k_total_combined_series(params: &Params, tol: f64) -> Result<ConstantResult> {
    check_tol(tol)?;
    let (b, l, s, m) = (params.beta, params.lambda, params.sigma, params.mu);
    extrapolated_series(params.alpha(), tol, |k, c| {
        let k = k as f64;
        2.0 * (4.0 * k + 2.0 * b + l) / ((2.0 * k + b + s) * (2.0 * k + b + m)) * c
    })
}

/// Dispatch on [`ConstantKind`].
pub fn constant(params: &Params, kind: ConstantKind, method: Method, tol: f64) -> Result<ConstantResult> {
    match kind {
        ConstantKind::K1 => k1(params, method, tol),
        ConstantKind::K2 => k2(params, method, tol),
        ConstantKind::K => k_total(params, method, tol),
    }
}

/// `K₀(σ)`: the `λ = 0` constant (so `μ = -σ`), for `0 < β < 1` and `|σ| < β`.
pub fn k0(beta_: f64, sigma: f64) -> Result<f64> {
    if !(beta_ > 0.0 && beta_ < 1.0) || !(sigma.abs() < beta_) {
        return Err(domain(
            "k0",
            format!("need 0 < beta < 1 and |sigma| < beta, got ({beta_}, {sigma})"),
        ));
    }
    let mu = -sigma;
    let h = |theta: f64| hyp_at_minus_one_tol(beta_, theta, 1e-14).map(|r| r.value);
    Ok(h(beta_ + sigma)? + h(beta_ + mu)? + beta(1.0 - beta_, beta_ + sigma)? + beta(1.0 - beta_, beta_ + mu)?)
}

/// `k_λ = B(λ/2, λ/2) + 2 B(1-λ, λ/2)` for `0 < λ < 1`.
pub fn k_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(domain("k_lambda", format!("lambda = {lambda} must lie in (0, 1)")));
    }
    Ok(beta(0.5 * lambda, 0.5 * lambda)? + 2.0 * beta(1.0 - lambda, 0.5 * lambda)?)
}

/// Paired series factor `binom(α+2k-1, 2k) - binom(α+2k, 2k+1) u` for `k = 0..count`.
///
/// Past [`crate::specfun::pair_threshold`] all factors share one sign.
pub fn pair_factors(alpha: f64, u: f64, count: usize) -> Vec<f64> {
    let mut binom = Binomials::new(-alpha);
    (0..count)
        .map(|k| {
            let c = binom.next().unwrap_or(0.0);
            binom.next();
            let k = k as f64;
            c * (1.0 - (alpha + 2.0 * k) * u / (2.0 * k + 1.0))
        })
        .collect()
}

/// Terms `binom(-λ-β, 2k)/(2k+θ)` of the even series for `k = 0..count`.
pub fn series_terms(alpha: f64, theta: f64, count: usize) -> Vec<f64> {
    let mut binom = Binomials::new(-alpha);
    (0..count)
        .map(|k| {
            let c = binom.next().unwrap_or(0.0);
            binom.next();
            2.0 * c / (2.0 * k as f64 + theta)
        })
        .collect()
}

/// All three routes for one constant plus their pairwise agreement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub kind: ConstantKind,
    pub closed_form: ConstantResult,
    pub series: ConstantResult,
    pub quadrature: ConstantResult,
    /// Largest pairwise `|a - b| / |a|`.
    pub max_rel_discrepancy: f64,
    /// Every pair within `max(rel_floor·|a|, err_a + err_b)`.
    pub agree: bool,
}

/// Relative agreement floor used by [`cross_check`].
pub const AGREEMENT_REL: f64 = 1e-8;

pub fn within(a: &ConstantResult, b: &ConstantResult, rel: f64) -> bool {
    (a.value - b.value).abs() <= (rel * a.value.abs()).max(a.abs_error_est + b.abs_error_est)
}

pub fn cross_check(params: &Params, kind: ConstantKind, tol: f64) -> Result<CrossCheck> {
    let closed_form = constant(params, kind, Method::ClosedForm, tol)?;
    let series = constant(params, kind, Method::Series, tol)?;
    let quadrature = constant(params, kind, Method::Quadrature, tol)?;
    let all = [closed_form, series, quadrature];
    let mut max_rel: f64 = 0.0;
    let mut agree = true;
    for i in 0..3 {
        for j in i + 1..3 {
            max_rel = max_rel.max(((all[i].value - all[j].value) / all[i].value).abs());
            agree &= within(&all[i], &all[j], AGREEMENT_REL);
        }
    }
    Ok(CrossCheck {
        kind,
        closed_form,
        series,
        quadrature,
        max_rel_discrepancy: max_rel,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn zero_alpha_series_is_finite() {
        // λ + β = 0: binom(0, 2k) vanishes for k >= 1, and K₁ = B(1, θ) + 1/θ = 2/θ.
        let pr = make_params(0.5, -0.25, -0.25, 1, 2.0).unwrap();
        assert_eq!(pr.alpha(), 0.0);
        let s = k1(&pr, Method::Series, 1e-12).unwrap();
        assert_eq!(s.work, 2);
        assert!((s.value - 8.0).abs() < 1e-12);
        let c = k1(&pr, Method::ClosedForm, 1e-12).unwrap();
        assert!((c.value - 8.0).abs() < 1e-11);
    }

    #[test]
    fn tolerance_validated() {
        let pr = make_params(0.0, 0.25, 0.25, 1, 2.0).unwrap();
        assert!(k1(&pr, Method::ClosedForm, 0.0).is_err());
        assert!(k1(&pr, Method::ClosedForm, 2.0).is_err());
    }

    #[test]
    fn special_constant_domains() {
        assert!(k0(1.2, 0.0).is_err());
        assert!(k_lambda(1.0).is_err());
    }
}
