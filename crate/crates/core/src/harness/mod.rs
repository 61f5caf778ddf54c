//! Numerical verification of the inequalities on concrete functions.

mod functions;
mod integrals;

pub use functions::{weighted_norm, weighted_norm_of, Family, Norm, Profile, Side, TestFunction};
pub use integrals::{bilinear_i, hardy_j, inner, ConstructedDual, Estimate};

use serde::Serialize;

use crate::constants::{k1, k2, k_total, ConstantResult, Method, DEFAULT_TOL};
use crate::error::Result;
use crate::kernels::{KernelForm, KernelSpec, Truncation};
use crate::params::{Params, Regime};
use crate::quadrature::QuadResult;

/// A margin must exceed this many combined error estimates to count.
pub const MARGIN_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    /// The worse of two outcomes: any failure fails, any doubt is inconclusive.
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
            _ => Status::Pass,
        }
    }

    pub fn from_margin(margin: f64, error: f64) -> Status {
        if !margin.is_finite() || !error.is_finite() {
            Status::Inconclusive
        } else if margin > MARGIN_FACTOR * error {
            Status::Pass
        } else if margin < -MARGIN_FACTOR * error {
            Status::Fail
        } else {
            Status::Inconclusive
        }
    }
}

/// One inequality `lhs < rhs` (or `lhs > rhs` in the reverse regime).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// Positive when the inequality holds.
    pub margin: f64,
    /// Combined error estimate of both sides.
    pub error: f64,
    pub status: Status,
}

impl Check {
    pub fn new(name: &'static str, lhs: f64, lhs_err: f64, rhs: f64, rhs_err: f64, regime: Regime) -> Check {
        let margin = match regime {
            Regime::Forward => rhs - lhs,
            Regime::Reverse => lhs - rhs,
        };
        let error = lhs_err + rhs_err;
        Check {
            name,
            lhs,
            rhs,
            margin,
            error,
            status: Status::from_margin(margin, error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    /// `I`.
    pub lhs: f64,
    /// `K·‖f‖·‖g‖`.
    pub rhs: f64,
    pub margin: f64,
    /// `(‖f‖, ‖g‖)`.
    pub norms: (f64, f64),
    pub regime: Regime,
    pub constant: ConstantResult,
    /// `J` with its error estimate.
    pub j: Estimate,
    pub i: Estimate,
    pub checks: Vec<Check>,
    /// Outer quadratures of `I`, `J`, `‖f‖^p` and `‖g‖^q`, in that order.
    pub quad_diags: Vec<QuadResult>,
    pub status: Status,
}

/// Exponent of the weight on `f`.
pub fn f_weight(spec: &KernelSpec) -> f64 {
    let pr = &spec.params;
    match spec.form {
        KernelForm::Nonhomogeneous => pr.p * (1.0 - pr.delta.as_f64() * pr.sigma) - 1.0,
        KernelForm::Homogeneous => pr.p * (1.0 - pr.mu) - 1.0,
    }
}

/// Exponent of the weight on `g`.
pub fn g_weight(params: &Params) -> f64 {
    params.q * (1.0 - params.sigma) - 1.0
}

/// Exponent of the weight in `J`.
pub fn j_weight(params: &Params) -> f64 {
    params.p * params.sigma - 1.0
}

/// The constant that goes with a kernel: `K`, `K₁` or `K₂` by truncation.
pub fn constant_for(spec: &KernelSpec, tol: f64) -> Result<ConstantResult> {
    let f = match spec.truncation {
        Truncation::None => k_total,
        Truncation::FirstKind => k1,
        Truncation::SecondKind => k2,
    };
    f(&spec.params, Method::ClosedForm, tol)
}

/// Checks `I < K‖f‖‖g‖`, `J^{1/p} < K‖f‖` and `I <= J^{1/p}‖g‖` (all reversed
/// when `0 < p < 1`). `tol` is the relative quadrature tolerance.
pub fn verify(spec: &KernelSpec, f: &TestFunction, g: &TestFunction, tol: f64) -> Result<VerifyReport> {
    let pr = &spec.params;
    let (p, q) = (pr.p, pr.q);
    let regime = pr.regime();
    let wf = f_weight(spec);
    let wg = g_weight(pr);
    f.certify(wf, p)?;
    g.certify(wg, q)?;
    let nf = weighted_norm(f, wf, p, tol)?;
    let ng = weighted_norm(g, wg, q, tol)?;
    let k = constant_for(spec, DEFAULT_TOL.max(tol * 1e-3))?;
    let i = bilinear_i(spec, f, g, tol)?;
    let j = hardy_j(spec, f, p, tol)?;

    let rhs = k.value * nf.value * ng.value;
    let rhs_err =
        k.abs_error_est * nf.value * ng.value + k.value * (nf.abs_error_est * ng.value + nf.value * ng.abs_error_est);
    let jp = j.value.powf(1.0 / p);
    let jp_err = if j.value > 0.0 {
        jp * (j.abs_error_est / j.value) / p
    } else {
        0.0
    };
    let checks = vec![
        Check::new("bilinear", i.value, i.abs_error_est, rhs, rhs_err, regime),
        Check::new(
            "hardy",
            jp,
            jp_err,
            k.value * nf.value,
            k.abs_error_est * nf.value + k.value * nf.abs_error_est,
            regime,
        ),
        Check::new(
            "holder",
            i.value,
            i.abs_error_est,
            jp * ng.value,
            jp_err * ng.value + jp * ng.abs_error_est,
            regime,
        ),
    ];
    let status = checks.iter().fold(Status::Pass, |s, c| s.and(c.status));
    Ok(VerifyReport {
        lhs: i.value,
        rhs,
        margin: checks[0].margin,
        norms: (nf.value, ng.value),
        regime,
        constant: k,
        j,
        i,
        checks,
        quad_diags: vec![i.outer, j.outer, nf.quad, ng.quad],
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_thresholds() {
        assert_eq!(Status::from_margin(1.0, 0.3), Status::Pass);
        assert_eq!(Status::from_margin(0.85, 0.3), Status::Inconclusive);
        assert_eq!(Status::from_margin(-1.0, 0.3), Status::Fail);
        assert_eq!(Status::from_margin(0.0, 0.0), Status::Inconclusive);
        assert_eq!(Status::Pass.and(Status::Inconclusive), Status::Inconclusive);
        assert_eq!(Status::Inconclusive.and(Status::Fail), Status::Fail);
    }

    #[test]
    fn reverse_margin_flips() {
        let c = Check::new("x", 2.0, 0.0, 1.0, 0.0, Regime::Reverse);
        assert_eq!(c.margin, 1.0);
        assert_eq!(c.status, Status::Pass);
        let c = Check::new("x", 2.0, 0.0, 1.0, 0.0, Regime::Forward);
        assert_eq!(c.status, Status::Fail);
    }
}
