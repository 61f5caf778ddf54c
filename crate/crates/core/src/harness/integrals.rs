//! Iterated quadrature for `I`, `J` and the inner kernel integral.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use super::functions::Profile;
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Truncation};
use crate::quadrature::{integrate_whole_line_with, Integrand, Local, Point, QuadConfig, QuadResult, SingularitySpec};

/// Inner integrals are asked for this fraction of the outer relative tolerance.
const INNER_SHARE: f64 = 0.1;
/// An inner integral that misses its tolerance is still used, with its error
/// carried into the combined estimate, when its relative error is below this.
const INNER_ACCEPT: f64 = 1e-6;
/// The inner integral is taken in the rescaled variable once `1/s` leaves `[1/FAR_SPLIT, FAR_SPLIT]`.
const FAR_SPLIT: f64 = 4.0;

/// A double integral with its combined error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Outer quadrature error plus the propagated worst inner relative error.
    pub abs_error_est: f64,
    pub outer: QuadResult,
    pub max_inner_rel_err: f64,
}

/// `h(y) = ∫ k(x, y) f(x) dx` at one `y`, with relative tolerance `tol`.
///
/// When the kernel's length scale `s` is far from 1 the integral is taken in
/// `t = x / s`, which keeps offsets from the singular curve well above the
/// underflow range; `f` then changes character near `t = ±1/s`.
pub fn inner<P: Profile + ?Sized>(spec: &KernelSpec, f: &P, y: f64, tol: f64) -> Result<QuadResult> {
    let origin = spec.origin_exponent_x() + f.origin_exponent().unwrap_or(0.0);
    let cfg = QuadConfig::default().with_rel_tol(tol);
    let s = spec.x_scale(y);
    // Rescaling pays only once the scales separate. Near s = 1 it would move the
    // breakpoints of `f` by rounding, relative to a singular point that may sit
    // within a few ulps of them. For large `s` it also keeps products of tiny
    // factors of `f` and `k` from underflowing.
    let far = 1.0 / s;
    if !(far > FAR_SPLIT || far < 1.0 / FAR_SPLIT) {
        let mut sing = spec.x_spec(y, origin)?;
        for x in f.breakpoints() {
            sing.push(x, 0.0)?;
        }
        let integrand = Local(|p: Point| {
            let v = f.eval(p.sided());
            if v == 0.0 {
                0.0
            } else {
                spec.eval_at_x(p, y) * v
            }
        });
        return integrate_whole_line_with(&integrand, &sing, f64::MIN_POSITIVE, &cfg);
    }
    let mut sing = spec.scaled_spec(y, origin)?;
    if far.is_finite() {
        sing.push(-far, 0.0)?;
        sing.push(far, 0.0)?;
    }
    for x in f.breakpoints() {
        let t = x / s;
        if t.is_finite() {
            sing.push(t, 0.0)?;
        }
    }
    // The integrand in `t` spans the scales 1 and 1/s, so its raw magnitude can
    // leave the floating range at either end. It is normalised in log space to
    // be of order one near its largest probed value and the scale is restored
    // afterwards.
    let ln_k = |t: Point| spec.eval_scaled(t, y).ln();
    let ln_c = -probe_level(|t| ln_k(Point::at(t)) + f.eval(s * t).abs().ln() + t.abs().ln(), s);
    let integrand = Local(|t: Point| {
        let x = s * t.x;
        if !x.is_finite() {
            return 0.0;
        }
        let v = f.eval(x);
        if v == 0.0 {
            return 0.0;
        }
        let k = ln_k(t);
        if k == f64::NEG_INFINITY {
            return 0.0;
        }
        v.signum() * (ln_c + k + v.abs().ln()).exp()
    });
    let q = integrate_whole_line_with(&integrand, &sing, f64::MIN_POSITIVE, &cfg)?;
    // Recombined in logs: the scale factor alone may overflow while the result does not.
    let ln_back = spec.ln_scaled_jacobian(y) - ln_c;
    let restore = |v: f64| {
        if v == 0.0 {
            0.0
        } else {
            v.signum() * (ln_back + v.abs().ln()).exp()
        }
    };
    Ok(QuadResult {
        value: restore(q.value),
        abs_error_est: restore(q.abs_error_est),
        ..q
    })
}

/// Largest finite value of `ln_density(t)` (the log of `|t|` times the
/// integrand) over points spread log-uniformly between `|t| = s` and `1/s`,
/// or 0 when every probe vanishes.
fn probe_level(ln_density: impl Fn(f64) -> f64, s: f64) -> f64 {
    const PROBES: usize = 24;
    let span = -s.ln();
    let mut best = f64::NEG_INFINITY;
    for i in 0..=PROBES {
        let u = span * (2.0 * i as f64 / PROBES as f64 - 1.0);
        // Offset from the exact grid so no probe lands on a breakpoint.
        let t = (u + 0.1).exp();
        for v in [ln_density(t), ln_density(-t)] {
            if v.is_finite() && v > best {
                best = v;
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// Leading exponent of `h(y)` as `y -> 0`, used only to size the edge correction.
fn h_origin_exponent(spec: &KernelSpec) -> f64 {
    spec.params.beta
}

/// Points in `y` where `h` is not smooth: the singular curve and the truncation
/// boundary meeting a breakpoint of `f`.
fn h_breakpoints<P: Profile + ?Sized>(spec: &KernelSpec, f: &P) -> Vec<(f64, f64)> {
    let curve = 1.0 - spec.params.alpha();
    let mut out = Vec::new();
    for x in f.breakpoints() {
        out.push((spec.singular_y(x), curve));
        if spec.truncation != Truncation::None {
            for b in spec.boundary_y(x) {
                out.push((b, 1.0));
            }
        }
    }
    out
}

/// Evaluates `h` at outer nodes, remembering the worst inner error and the first
/// failure (smallest `|y|`, so the report does not depend on scheduling).
struct InnerTracker<'a, P: Profile + ?Sized> {
    spec: &'a KernelSpec,
    f: &'a P,
    tol: f64,
    worst: AtomicU64,
    failed: AtomicBool,
    failure: Mutex<Option<(f64, Error)>>,
}

impl<'a, P: Profile + ?Sized> InnerTracker<'a, P> {
    fn new(spec: &'a KernelSpec, f: &'a P, tol: f64) -> Self {
        InnerTracker {
            spec,
            f,
            tol,
            worst: AtomicU64::new(0),
            failed: AtomicBool::new(false),
            failure: Mutex::new(None),
        }
    }

    fn fail(&self, y: f64, e: Error) {
        self.failed.store(true, Ordering::Relaxed);
        let mut slot = self.failure.lock().unwrap_or_else(|p| p.into_inner());
        let replace = match &*slot {
            None => true,
            Some((y0, _)) => y.abs() < y0.abs() || (y.abs() == y0.abs() && y < *y0),
        };
        if replace {
            *slot = Some((y, e));
        }
    }

    fn h(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        match inner(self.spec, self.f, y, self.tol) {
            Ok(q)
                if q.value.is_finite()
                    && q.abs_error_est.is_finite()
                    && (q.converged || q.abs_error_est <= INNER_ACCEPT * q.value.abs()) =>
            {
                if q.value != 0.0 {
                    let rel = q.abs_error_est / q.value.abs();
                    self.worst.fetch_max(rel.to_bits(), Ordering::Relaxed);
                }
                q.value
            }
            Ok(q) => {
                self.fail(
                    y,
                    Error::Convergence {
                        what: format!("inner integral at y={y:e}"),
                        value: q.value,
                        abs_error_est: q.abs_error_est,
                    },
                );
                0.0
            }
            Err(e) => {
                self.fail(y, e);
                0.0
            }
        }
    }

    fn worst(&self) -> f64 {
        f64::from_bits(self.worst.load(Ordering::Relaxed))
    }

    fn take_failure(&self) -> Option<Error> {
        let mut slot = self.failure.lock().unwrap_or_else(|p| p.into_inner());
        slot.take().map(|(y, e)| match e {
            e @ Error::Convergence { .. } => e,
            other => Error::Convergence {
                what: format!("inner integral at y={y:e}: {other}"),
                value: f64::NAN,
                abs_error_est: f64::INFINITY,
            },
        })
    }
}

/// Outer integrand that stops the outer quadrature once an inner integral fails.
struct Outer<'t, 'a, P: Profile + ?Sized, F> {
    tracker: &'t InnerTracker<'a, P>,
    f: F,
}

impl<P: Profile + ?Sized, F: Fn(f64) -> f64 + Sync> Integrand for Outer<'_, '_, P, F> {
    fn eval(&self, p: Point) -> f64 {
        (self.f)(p.x)
    }

    fn aborted(&self) -> bool {
        self.tracker.failed.load(Ordering::Relaxed)
    }
}

fn outer<P: Profile + ?Sized, F: Fn(f64) -> f64 + Sync>(
    what: &str,
    tracker: &InnerTracker<'_, P>,
    integrand: F,
    sing: &SingularitySpec,
    tol: f64,
    sensitivity: f64,
) -> Result<Estimate> {
    let cfg = QuadConfig::parallel().with_rel_tol(tol);
    let wrapped = Outer { tracker, f: integrand };
    let q = integrate_whole_line_with(&wrapped, sing, f64::MIN_POSITIVE, &cfg);
    if let Some(e) = tracker.take_failure() {
        return Err(e);
    }
    let q = q?;
    if !q.converged {
        return Err(Error::Convergence {
            what: what.into(),
            value: q.value,
            abs_error_est: q.abs_error_est,
        });
    }
    let worst = tracker.worst();
    Ok(Estimate {
        value: q.value,
        abs_error_est: q.abs_error_est + sensitivity * worst * q.value.abs(),
        outer: q,
        max_inner_rel_err: worst,
    })
}

fn clamp_exponent(e: f64) -> f64 {
    e.max(-0.99)
}

/// `I = ∬ k(x, y) f(x) g(y) dx dy`; `tol` is relative.
pub fn bilinear_i<P: Profile + ?Sized, Q: Profile + ?Sized>(
    spec: &KernelSpec,
    f: &P,
    g: &Q,
    tol: f64,
) -> Result<Estimate> {
    check_tol(tol)?;
    let tracker = InnerTracker::new(spec, f, INNER_SHARE * tol);
    let g0 = g.origin_exponent().unwrap_or(0.0);
    let mut sing = SingularitySpec::at(0.0, clamp_exponent(g0 + h_origin_exponent(spec)))?;
    for (y, e) in h_breakpoints(spec, f) {
        sing.push(y, e)?;
    }
    for y in g.breakpoints() {
        sing.push(y, 0.0)?;
    }
    let integrand = |y: f64| {
        let gy = g.eval(y);
        if gy == 0.0 {
            0.0
        } else {
            gy * tracker.h(y)
        }
    };
    outer("bilinear I", &tracker, integrand, &sing, tol, 1.0)
}

/// `J = ∫ |y|^{pσ-1} h(y)^p dy`; `tol` is relative.
pub fn hardy_j<P: Profile + ?Sized>(spec: &KernelSpec, f: &P, p: f64, tol: f64) -> Result<Estimate> {
    check_tol(tol)?;
    let w = p * spec.params.sigma - 1.0;
    let tracker = InnerTracker::new(spec, f, INNER_SHARE * tol);
    let mut sing = SingularitySpec::at(0.0, clamp_exponent(w + p * h_origin_exponent(spec)))?;
    for (y, e) in h_breakpoints(spec, f) {
        sing.push(y, e)?;
    }
    let integrand = |y: f64| {
        let h = tracker.h(y);
        if h == 0.0 {
            0.0
        } else {
            y.abs().powf(w) * h.powf(p)
        }
    };
    outer("Hardy J", &tracker, integrand, &sing, tol, p.abs())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain {
            function: "harness",
            detail: format!("relative tolerance {tol} must lie in (0, 1)"),
        });
    }
    Ok(())
}

/// `g(y) = |y|^{pσ-1} h(y)^{p-1}`, the dual function built from `f`.
pub struct ConstructedDual<'a, P: Profile + ?Sized> {
    tracker: InnerTracker<'a, P>,
    p: f64,
}

impl<'a, P: Profile + ?Sized> ConstructedDual<'a, P> {
    pub fn new(spec: &'a KernelSpec, f: &'a P, p: f64, tol: f64) -> Self {
        ConstructedDual {
            tracker: InnerTracker::new(spec, f, tol),
            p,
        }
    }

    /// First inner failure met while evaluating, if any.
    pub fn failure(&self) -> Option<Error> {
        self.tracker.take_failure()
    }

    /// Worst relative error of the inner integrals evaluated so far.
    pub fn max_inner_rel_err(&self) -> f64 {
        self.tracker.worst()
    }
}

impl<P: Profile + ?Sized> Profile for ConstructedDual<'_, P> {
    fn eval(&self, y: f64) -> f64 {
        let h = self.tracker.h(y);
        if h == 0.0 {
            return 0.0;
        }
        let s = self.tracker.spec.params.sigma;
        y.abs().powf(self.p * s - 1.0) * h.powf(self.p - 1.0)
    }

    fn origin_exponent(&self) -> Option<f64> {
        let s = self.tracker.spec.params.sigma;
        Some(self.p * s - 1.0 + (self.p - 1.0) * h_origin_exponent(self.tracker.spec))
    }

    fn breakpoints(&self) -> Vec<f64> {
        h_breakpoints(self.tracker.spec, self.tracker.f)
            .into_iter()
            .map(|(y, _)| y)
            .collect()
    }
}
