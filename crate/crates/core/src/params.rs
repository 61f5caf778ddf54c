//! Validated parameter bundle.

use serde::Serialize;

use crate::error::{Error, Result};

/// Exponent sign applied to `x` in the product `x^δ y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Delta {
    Minus,
    Plus,
}

impl Delta {
    pub fn from_int(d: i64) -> Option<Self> {
        match d {
            1 => Some(Delta::Plus),
            -1 => Some(Delta::Minus),
            _ => None,
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Delta::Plus => 1,
            Delta::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_int() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p > 1`, `q > 1`.
    Forward,
    /// `0 < p < 1`, `q < 0`.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub beta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub delta: Delta,
    pub p: f64,
    pub q: f64,
}

/// Validates `(β, μ, σ, δ, p)` and derives `λ = μ + σ`, `q = p/(p-1)`.
pub fn make_params(beta: f64, mu: f64, sigma: f64, delta: i64, p: f64) -> Result<Params> {
    let fail = |constraint| Err(Error::InvalidParams { constraint });
    if !beta.is_finite() {
        return fail("beta is not finite");
    }
    if !mu.is_finite() {
        return fail("mu is not finite");
    }
    if !sigma.is_finite() {
        return fail("sigma is not finite");
    }
    if !p.is_finite() {
        return fail("p is not finite");
    }
    if beta <= -1.0 {
        return fail("beta <= -1");
    }
    if mu <= -beta {
        return fail("mu <= -beta");
    }
    if sigma <= -beta {
        return fail("sigma <= -beta");
    }
    let lambda = mu + sigma;
    if lambda >= 1.0 - beta {
        return fail("lambda >= 1 - beta");
    }
    let Some(delta) = Delta::from_int(delta) else {
        return fail("delta not in {-1, 1}");
    };
    if p <= 0.0 {
        return fail("p <= 0");
    }
    if p == 1.0 {
        return fail("p == 1");
    }
    let q = p / (p - 1.0);
    Ok(Params {
        beta,
        mu,
        sigma,
        lambda,
        delta,
        p,
        q,
    })
}

impl Params {
    pub fn regime(&self) -> Regime {
        if self.p > 1.0 {
            Regime::Forward
        } else {
            Regime::Reverse
        }
    }

    /// `λ + β`, the exponent of the singular curve.
    pub fn alpha(&self) -> f64 {
        self.lambda + self.beta
    }

    /// Same parameters with `μ` and `σ` exchanged.
    pub fn swapped(&self) -> Params {
        make_params(self.beta, self.sigma, self.mu, self.delta.as_int(), self.p)
            .expect("hypotheses are symmetric in mu and sigma")
    }

    pub fn with_delta(&self, delta: Delta) -> Params {
        Params { delta, ..*self }
    }

    pub fn with_p(&self, p: f64) -> Result<Params> {
        make_params(self.beta, self.mu, self.sigma, self.delta.as_int(), p)
    }
}

/// Values of `β` in [`reference_grid`], each with its three values of `λ`.
pub const GRID_BETA_LAMBDA: [(f64, [f64; 3]); 3] = [
    (0.5, [-0.2, 0.0, 0.4]),
    (0.0, [0.2, 0.4, 0.8]),
    (-0.25, [0.7, 0.9, 1.1]),
];

/// Positions of `σ` between its bounds: `σ = -β + s(λ + 2β)`.
pub const GRID_SPLITS: [f64; 3] = [0.5, 0.3, 0.7];

/// A 27-point admissible grid spanning negative, zero and positive `λ`,
/// all three signs of `β`, and symmetric and asymmetric `(μ, σ)`.
pub fn reference_grid(delta: i64, p: f64) -> Result<Vec<Params>> {
    let mut out = Vec::with_capacity(27);
    for (beta, lambdas) in GRID_BETA_LAMBDA {
        for lambda in lambdas {
            for s in GRID_SPLITS {
                let sigma = -beta + s * (lambda + 2.0 * beta);
                out.push(make_params(beta, lambda - sigma, sigma, delta, p)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_instance() {
        let pr = make_params(0.0, 0.25, 0.25, 1, 2.0).unwrap();
        assert_eq!(pr.lambda, 0.5);
        assert_eq!(pr.q, 2.0);
        assert_eq!(pr.regime(), Regime::Forward);
    }

    #[test]
    fn zero_lambda_instance() {
        let pr = make_params(0.5, 0.0, 0.0, 1, 2.0).unwrap();
        assert_eq!(pr.lambda, 0.0);
        assert_eq!(pr.q, 2.0);
    }

    #[test]
    fn rejects_large_lambda() {
        let err = make_params(0.0, 0.6, 0.6, 1, 2.0).unwrap_err();
        assert_eq!(err.to_string(), "invalid parameters: lambda >= 1 - beta");
    }

    #[test]
    fn rejects_each_constraint() {
        let cases: [((f64, f64, f64, i64, f64), &str); 6] = [
            ((-1.0, 1.5, 1.5, 1, 2.0), "beta <= -1"),
            ((0.0, 0.0, 0.2, 1, 2.0), "mu <= -beta"),
            ((0.0, 0.2, -0.1, 1, 2.0), "sigma <= -beta"),
            ((0.0, 0.2, 0.2, 0, 2.0), "delta not in {-1, 1}"),
            ((0.0, 0.2, 0.2, 1, 1.0), "p == 1"),
            ((0.0, 0.2, 0.2, 1, -2.0), "p <= 0"),
        ];
        for ((b, m, s, d, p), want) in cases {
            match make_params(b, m, s, d, p) {
                Err(Error::InvalidParams { constraint }) => assert_eq!(constraint, want),
                other => panic!("expected {want}, got {other:?}"),
            }
        }
    }

    #[test]
    fn reverse_regime_has_negative_q() {
        let pr = make_params(0.0, 0.25, 0.25, 1, 0.5).unwrap();
        assert_eq!(pr.regime(), Regime::Reverse);
        assert_eq!(pr.q, -1.0);
    }

    #[test]
    fn reference_grid_is_admissible() {
        let g = reference_grid(1, 2.0).unwrap();
        assert_eq!(g.len(), 27);
        assert!(g.iter().any(|p| p.lambda < 0.0));
        assert!(g.iter().any(|p| p.mu != p.sigma));
    }
}
