//! Test-function families and weighted norms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_whole_line_with, QuadConfig, QuadResult, SingularitySpec};

/// A non-negative function of one variable, described well enough to integrate it.
pub trait Profile: Sync {
    fn eval(&self, x: f64) -> f64;
    /// Exponent of the leading power at `x = 0`, or `None` when the function
    /// vanishes near the origin.
    fn origin_exponent(&self) -> Option<f64>;
    /// Points (other than 0) where the function is not smooth.
    fn breakpoints(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `|x|^a e^{-b x²}`
    PowerGauss,
    /// `|x|^a e^{-b|x|}`
    PowerExp,
    /// `|x|^a` on `[lo, hi]`, zero elsewhere.
    IndicatorPower,
    /// `|x|^a` for `|x| <= 1` and `|x|^{-b}` for `|x| > 1`.
    BrokenPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Both,
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub family: Family,
    pub a: f64,
    pub b: f64,
    pub side: Side,
    /// Interval `[lo, hi]` of an indicator family; unused otherwise.
    pub support: (f64, f64),
}

impl TestFunction {
    fn new(family: Family, a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !(b > 0.0 && b.is_finite()) {
            return Err(Error::Domain {
                function: "TestFunction",
                detail: format!("need finite a and b > 0, got a = {a}, b = {b}"),
            });
        }
        Ok(TestFunction {
            family,
            a,
            b,
            side: Side::Both,
            support: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    pub fn power_gauss(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::PowerGauss, a, b)
    }

    pub fn power_exp(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::PowerExp, a, b)
    }

    pub fn broken_power(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::BrokenPower, a, b)
    }

    pub fn indicator_power(a: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInterval { a: lo, b: hi });
        }
        let mut f = Self::new(Family::IndicatorPower, a, 1.0)?;
        f.support = (lo, hi);
        Ok(f)
    }

    pub fn on(self, side: Side) -> Self {
        TestFunction { side, ..self }
    }

    /// Parses `family:key=value:...`, e.g. `power_exp:a=-0.5:b=1:side=both`
    /// or `indicator_power:a=0:lo=1:hi=2`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |detail: String| Error::Domain {
            function: "TestFunction::parse",
            detail,
        };
        let mut parts = s.split(':');
        let family = parts.next().unwrap_or("").trim();
        let (mut a, mut b, mut lo, mut hi, mut side) = (0.0, 1.0, None, None, Side::Both);
        for kv in parts {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got '{kv}'")))?;
            let num = || {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad number '{v}' for '{k}'")))
            };
            match k.trim() {
                "a" => a = num()?,
                "b" => b = num()?,
                "lo" => lo = Some(num()?),
                "hi" => hi = Some(num()?),
                "side" => {
                    side = match v.trim() {
                        "both" => Side::Both,
                        "positive" => Side::Positive,
                        "negative" => Side::Negative,
                        other => return Err(bad(format!("unknown side '{other}'"))),
                    }
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        let f = match family {
            "power_gauss" => Self::power_gauss(a, b)?,
            "power_exp" => Self::power_exp(a, b)?,
            "broken_power" => Self::broken_power(a, b)?,
            "indicator_power" => match (lo, hi) {
                (Some(lo), Some(hi)) => Self::indicator_power(a, lo, hi)?,
                _ => return Err(bad("indicator_power needs lo and hi".into())),
            },
            other => return Err(bad(format!("unknown family '{other}'"))),
        };
        Ok(f.on(side))
    }

    fn side_allows(&self, x: f64) -> bool {
        match self.side {
            Side::Both => true,
            Side::Positive => x > 0.0,
            Side::Negative => x < 0.0,
        }
    }

    fn log_power(&self, ax: f64) -> f64 {
        if self.a == 0.0 {
            0.0
        } else {
            self.a * ax.ln()
        }
    }

    /// Whether the function is positive on a neighbourhood of the origin (on its side).
    fn reaches_origin(&self) -> bool {
        match self.family {
            Family::IndicatorPower => {
                let (lo, hi) = self.support;
                match self.side {
                    Side::Both => lo <= 0.0 && hi >= 0.0,
                    Side::Positive => lo <= 0.0 && hi > 0.0,
                    Side::Negative => lo < 0.0 && hi >= 0.0,
                }
            }
            _ => true,
        }
    }

    /// Checks that `∫ |x|^w f^power dx` is finite and positive, naming the failed condition.
    pub fn certify(&self, weight_exponent: f64, power: f64) -> Result<()> {
        let divergent = |condition: String| Err(Error::Divergent { condition });
        if self.family == Family::IndicatorPower {
            let (lo, hi) = self.support;
            let empty = match self.side {
                Side::Both => false,
                Side::Positive => hi <= 0.0,
                Side::Negative => lo >= 0.0,
            };
            if empty {
                return divergent("support is empty, so the norm vanishes".into());
            }
        }
        if power < 0.0 {
            match self.family {
                Family::IndicatorPower => {
                    return divergent("negative power of a function vanishing on a set of positive measure".into())
                }
                Family::PowerGauss | Family::PowerExp => {
                    return divergent("negative power of a decaying exponential grows without bound".into())
                }
                Family::BrokenPower => {}
            }
            if self.side != Side::Both {
                return divergent("negative power needs support on the whole line".into());
            }
        }
        if self.reaches_origin() {
            let e = weight_exponent + power * self.a;
            if !(e > -1.0) {
                return divergent(format!("w + p*a = {e} must exceed -1 at the origin"));
            }
        }
        if self.family == Family::BrokenPower {
            let e = weight_exponent - power * self.b;
            if !(e < -1.0) {
                return divergent(format!("w - p*b = {e} must be below -1 at infinity"));
            }
        }
        Ok(())
    }
}

impl Profile for TestFunction {
    fn eval(&self, x: f64) -> f64 {
        if !self.side_allows(x) {
            return 0.0;
        }
        let ax = x.abs();
        match self.family {
            // In log form so a huge power never meets a vanishing exponential.
            Family::PowerGauss => (self.log_power(ax) - self.b * x * x).exp(),
            Family::PowerExp => (self.log_power(ax) - self.b * ax).exp(),
            Family::IndicatorPower => {
                if x >= self.support.0 && x <= self.support.1 {
                    ax.powf(self.a)
                } else {
                    0.0
                }
            }
            Family::BrokenPower => {
                if ax <= 1.0 {
                    ax.powf(self.a)
                } else {
                    ax.powf(-self.b)
                }
            }
        }
    }

    fn origin_exponent(&self) -> Option<f64> {
        self.reaches_origin().then_some(self.a)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let pts = match self.family {
            Family::IndicatorPower => vec![self.support.0, self.support.1],
            Family::BrokenPower => vec![-1.0, 1.0],
            _ => Vec::new(),
        };
        pts.into_iter().filter(|&x| x != 0.0 && self.side_allows(x)).collect()
    }
}

/// `(∫ |x|^w f^p dx)^{1/p}` with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norm {
    pub value: f64,
    pub abs_error_est: f64,
    pub quad: QuadResult,
}

/// Singularity layout for `|x|^w f(x)^power`.
pub(crate) fn profile_spec<P: Profile + ?Sized>(f: &P, weight_exponent: f64, power: f64) -> Result<SingularitySpec> {
    let mut s = SingularitySpec::none();
    match f.origin_exponent() {
        Some(a) => s.push(0.0, weight_exponent + power * a)?,
        None => s.push(0.0, 0.0)?,
    }
    for x in f.breakpoints() {
        s.push(x, 0.0)?;
    }
    Ok(s)
}

/// Weighted norm of any profile; `tol` is relative.
pub fn weighted_norm_of<P: Profile + ?Sized>(f: &P, weight_exponent: f64, p: f64, tol: f64) -> Result<Norm> {
    if !(tol > 0.0) || p == 0.0 {
        return Err(Error::Domain {
            function: "weighted_norm",
            detail: format!("need tol > 0 and p != 0, got tol = {tol}, p = {p}"),
        });
    }
    let spec = profile_spec(f, weight_exponent, p)?;
    let integrand = |x: f64| {
        let v = f.eval(x);
        if v == 0.0 {
            0.0
        } else {
            x.abs().powf(weight_exponent) * v.powf(p)
        }
    };
    let cfg = QuadConfig::default().with_rel_tol(tol);
    let q = integrate_whole_line_with(&integrand, &spec, f64::MIN_POSITIVE, &cfg)?;
    if !q.converged {
        return Err(Error::Convergence {
            what: "weighted norm".into(),
            value: q.value,
            abs_error_est: q.abs_error_est,
        });
    }
    let value = q.value.powf(1.0 / p);
    let rel = if q.value > 0.0 { q.abs_error_est / q.value } else { 0.0 };
    Ok(Norm {
        value,
        abs_error_est: value * rel / p.abs(),
        quad: q,
    })
}

/// `(∫ |x|^w f^p dx)^{1/p}` after checking that the integral is finite.
pub fn weighted_norm(f: &TestFunction, weight_exponent: f64, p: f64, tol: f64) -> Result<Norm> {
    f.certify(weight_exponent, p)?;
    weighted_norm_of(f, weight_exponent, p, tol)
}
