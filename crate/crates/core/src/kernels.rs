//! Kernels, their truncations, and the weight functions ω and ϖ.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{Delta, Params};
use crate::quadrature::{integrate_whole_line, Local, Point, QuadResult, SingularitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelForm {
    /// `min{1, |x^δ y|}^β / |1 + x^δ y|^{λ+β}`
    Nonhomogeneous,
    /// `min{|x|, |y|}^β / |x + y|^{λ+β}`
    Homogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    None,
    /// Non-homogeneous: `|x^δ y| <= 1`. Homogeneous: `|y| <= |x|`.
    FirstKind,
    /// Non-homogeneous: `|x^δ y| > 1`. Homogeneous: `|x| < |y|`.
    SecondKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub form: KernelForm,
    pub truncation: Truncation,
    pub params: Params,
}

impl KernelSpec {
    pub fn new(form: KernelForm, truncation: Truncation, params: Params) -> Self {
        KernelSpec {
            form,
            truncation,
            params,
        }
    }

    pub fn nonhomogeneous(params: Params) -> Self {
        Self::new(KernelForm::Nonhomogeneous, Truncation::None, params)
    }

    pub fn homogeneous(params: Params) -> Self {
        Self::new(KernelForm::Homogeneous, Truncation::None, params)
    }

    pub fn with_truncation(self, truncation: Truncation) -> Self {
        KernelSpec { truncation, ..self }
    }

    /// The ratio whose modulus decides the truncation region.
    fn ratio(&self, x: f64, y: f64) -> f64 {
        match (self.form, self.params.delta) {
            (KernelForm::Nonhomogeneous, Delta::Plus) => x * y,
            (KernelForm::Nonhomogeneous, Delta::Minus) | (KernelForm::Homogeneous, _) => y / x,
        }
    }

    /// Whether the point lies in the truncation region. Near `r = -1` the test
    /// uses the sign of `1 + r`, since `r` itself rounds to `-1` there.
    fn kept(&self, r: f64, one_plus_r: f64) -> bool {
        let inner = if one_plus_r.abs() < 0.5 {
            one_plus_r >= 0.0
        } else {
            r.abs() <= 1.0
        };
        match self.truncation {
            Truncation::None => true,
            Truncation::FirstKind => inner,
            Truncation::SecondKind => !inner,
        }
    }

    /// Location in `x` of the singular curve for fixed `y`.
    pub fn singular_x(&self, y: f64) -> f64 {
        match (self.form, self.params.delta) {
            (KernelForm::Nonhomogeneous, Delta::Plus) => -1.0 / y,
            _ => -y,
        }
    }

    /// The two `x` where the truncation boundary is crossed for fixed `y`.
    pub fn boundary_x(&self, y: f64) -> [f64; 2] {
        let b = match (self.form, self.params.delta) {
            (KernelForm::Nonhomogeneous, Delta::Plus) => 1.0 / y.abs(),
            _ => y.abs(),
        };
        [-b, b]
    }

    /// Leading exponent of `k(x, y)` as `x -> 0` with `y` fixed.
    pub fn origin_exponent_x(&self) -> f64 {
        match (self.form, self.params.delta) {
            (KernelForm::Nonhomogeneous, Delta::Minus) => self.params.alpha(),
            _ => self.params.beta,
        }
    }

    /// Declared exponent of the singular curve (0 when the kernel stays bounded).
    pub fn curve_exponent(&self) -> f64 {
        let a = self.params.alpha();
        if a > 0.0 {
            -a
        } else {
            0.0
        }
    }

    /// Kernel value given `1 + r` (signed, with `r` the truncation ratio) and
    /// the kernel gap `|1 + x^δ y|` (resp. `|x + y|`), both computed by the caller.
    ///
    /// Close to the singular curve `r` is recovered from `1 + r`, so a point
    /// anchored there lands on the correct side of the truncation boundary.
    fn value_with(&self, x: f64, y: f64, one_plus_r: f64, gap: f64) -> f64 {
        let r = if one_plus_r.abs() < 0.5 {
            one_plus_r - 1.0
        } else {
            self.ratio(x, y)
        };
        if !self.kept(r, one_plus_r) {
            return 0.0;
        }
        let pr = &self.params;
        let a = pr.alpha();
        match self.form {
            KernelForm::Nonhomogeneous => r.abs().min(1.0).powf(pr.beta) * gap.powf(-a),
            KernelForm::Homogeneous => x.abs().min(y.abs()).powf(pr.beta) * gap.powf(-a),
        }
    }

    /// `(1 + r, gap)` from the signed distance `d` to the singular curve.
    /// `scale` is the other variable, `y` when `d` is measured in `x` and vice versa.
    fn from_offset(&self, d: f64, x: f64, scale: f64) -> (f64, f64) {
        match (self.form, self.params.delta) {
            (KernelForm::Nonhomogeneous, Delta::Plus) => {
                let s = scale * d;
                (s, s.abs())
            }
            (KernelForm::Nonhomogeneous, Delta::Minus) => {
                let s = d / x;
                (s, s.abs())
            }
            (KernelForm::Homogeneous, _) => (d / x, d.abs()),
        }
    }

    /// Kernel value; `+∞` exactly on the singular curve when `λ + β > 0`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let one_plus_r = 1.0 + self.ratio(x, y);
        let gap = match self.form {
            KernelForm::Nonhomogeneous => one_plus_r.abs(),
            KernelForm::Homogeneous => (x + y).abs(),
        };
        self.value_with(x, y, one_plus_r, gap)
    }

    /// Kernel value at a quadrature point in `x`, using the exact offset from
    /// the singular curve when the point is anchored there.
    pub fn eval_at_x(&self, p: Point, y: f64) -> f64 {
        let d = p.minus(self.singular_x(y));
        let (s, gap) = self.from_offset(d, p.x, y);
        self.value_with(p.x, y, s, gap)
    }

    /// Natural length scale in `x` for fixed `y`: the distance from the origin
    /// of the singular curve and the truncation boundary.
    pub fn x_scale(&self, y: f64) -> f64 {
        match (self.form, self.params.delta) {
            (KernelForm::Nonhomogeneous, Delta::Plus) => 1.0 / y.abs(),
            _ => y.abs(),
        }
    }

    /// Kernel value at `x = x_scale(y)·t` for a quadrature point `t`, divided
    /// by `x_scale(y)` times the exponential of [`KernelSpec::ln_scaled_jacobian`]. In this variable the singular curve
    /// sits at `t = -sign(y)` and the truncation boundary at `t = ±1`, whatever
    /// the size of `y`, so offsets from the curve never underflow.
    pub fn eval_scaled(&self, t: Point, y: f64) -> f64 {
        let sgn = y.signum();
        let dt = t.minus(-sgn);
        let plus = matches!(
            (self.form, self.params.delta),
            (KernelForm::Nonhomogeneous, Delta::Plus)
        );
        let (one_plus_r, ratio) = if plus {
            (sgn * dt, sgn * t.x)
        } else {
            (dt / t.x, sgn / t.x)
        };
        let r = if one_plus_r.abs() < 0.5 {
            one_plus_r - 1.0
        } else {
            ratio
        };
        if !self.kept(r, one_plus_r) {
            return 0.0;
        }
        let pr = &self.params;
        let a = pr.alpha();
        match self.form {
            KernelForm::Nonhomogeneous => r.abs().min(1.0).powf(pr.beta) * one_plus_r.abs().powf(-a),
            KernelForm::Homogeneous => t.x.abs().min(1.0).powf(pr.beta) * dt.abs().powf(-a),
        }
    }

    /// Logarithm of `x_scale(y) · k(x_scale(y)·t, y) / eval_scaled(t, y)`, the
    /// factor that turns an integral of `eval_scaled` in `t` into one of `k` in `x`.
    pub fn ln_scaled_jacobian(&self, y: f64) -> f64 {
        let ln_s = self.x_scale(y).ln();
        match self.form {
            KernelForm::Nonhomogeneous => ln_s,
            KernelForm::Homogeneous => (1.0 - self.params.lambda) * ln_s,
        }
    }

    /// Breakpoints in the scaled variable of [`KernelSpec::eval_scaled`].
    pub fn scaled_spec(&self, y: f64, origin_exponent: f64) -> Result<SingularitySpec> {
        let mut s = SingularitySpec::at(0.0, origin_exponent)?;
        s.push(-1.0, 0.0)?;
        s.push(1.0, 0.0)?;
        s.push(-y.signum(), self.curve_exponent())?;
        Ok(s)
    }

    /// Location in `y` of the singular curve for fixed `x`.
    pub fn singular_y(&self, x: f64) -> f64 {
        match (self.form, self.params.delta) {
            (KernelForm::Nonhomogeneous, Delta::Plus) => -1.0 / x,
            _ => -x,
        }
    }

    /// The two `y` where the truncation boundary is crossed for fixed `x`.
    pub fn boundary_y(&self, x: f64) -> [f64; 2] {
        let b = match (self.form, self.params.delta) {
            (KernelForm::Nonhomogeneous, Delta::Plus) => 1.0 / x.abs(),
            _ => x.abs(),
        };
        [-b, b]
    }

    /// Kernel value at a quadrature point in `y`, exact near the singular curve.
    pub fn eval_at_y(&self, x: f64, p: Point) -> f64 {
        let d = p.minus(self.singular_y(x));
        let (s, gap) = self.from_offset(d, x, x);
        self.value_with(x, p.x, s, gap)
    }

    /// Breakpoints in `x` for fixed `y`: the singular curve and the truncation boundary.
    pub fn x_spec(&self, y: f64, origin_exponent: f64) -> Result<SingularitySpec> {
        let [lo, hi] = self.boundary_x(y);
        let mut s = SingularitySpec::at(0.0, origin_exponent)?;
        s.push(lo, 0.0)?;
        s.push(hi, 0.0)?;
        s.push(self.singular_x(y), self.curve_exponent())?;
        Ok(s)
    }
}

/// `kernel_eval` as a free function.
pub fn kernel_eval(spec: &KernelSpec, x: f64, y: f64) -> f64 {
    spec.eval(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightValue {
    pub value: f64,
    pub quad: QuadResult,
}

fn check_point(name: &'static str, v: f64) -> Result<()> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::Domain {
            function: name,
            detail: format!("evaluation point {v} must be finite and non-zero"),
        });
    }
    Ok(())
}

fn finish(what: String, q: QuadResult) -> Result<WeightValue> {
    if !q.converged {
        return Err(Error::Convergence {
            what,
            value: q.value,
            abs_error_est: q.abs_error_est,
        });
    }
    Ok(WeightValue {
        value: q.value,
        quad: q,
    })
}

/// `ω(σ, y) = ∫ k(x^δ y) |y|^σ |x|^{δσ-1} dx` by direct quadrature in `x`.
pub fn omega(params: &Params, y: f64, tol: f64) -> Result<WeightValue> {
    check_point("omega", y)?;
    let spec = KernelSpec::nonhomogeneous(*params);
    let ds = params.delta.as_f64() * params.sigma;
    let ys = y.abs().powf(params.sigma);
    let origin = spec.origin_exponent_x() + ds - 1.0;
    let sing = spec.x_spec(y, origin)?;
    let f = Local(|p: Point| spec.eval_at_x(p, y) * ys * p.x.abs().powf(ds - 1.0));
    let q = integrate_whole_line(&f, &sing, tol)?;
    finish(format!("omega at y={y}"), q)
}

/// `ϖ(σ, x) = ∫ k(x^δ y) |x|^{δσ} |y|^{σ-1} dy` by direct quadrature in `y`.
pub fn varpi(params: &Params, x: f64, tol: f64) -> Result<WeightValue> {
    check_point("varpi", x)?;
    let spec = KernelSpec::nonhomogeneous(*params);
    let xs = x.abs().powf(params.delta.as_f64() * params.sigma);
    let s = params.sigma;
    let [lo, hi] = spec.boundary_y(x);
    let mut sing = SingularitySpec::at(0.0, params.beta + s - 1.0)?;
    sing.push(lo, 0.0)?;
    sing.push(hi, 0.0)?;
    sing.push(spec.singular_y(x), spec.curve_exponent())?;
    let f = Local(|p: Point| spec.eval_at_y(x, p) * xs * p.x.abs().powf(s - 1.0));
    let q = integrate_whole_line(&f, &sing, tol)?;
    finish(format!("varpi at x={x}"), q)
}
