//! Adaptive quadrature for integrands with declared algebraic singularities.
//!
//! The real line is cut at every declared location. Panels touching a declared
//! singular point get a tanh-sinh rule whose abscissae are carried as offsets
//! from the singular endpoint, so integrands can evaluate `|x - s|` without
//! cancellation (see [`Point`]). Smooth panels use adaptive Gauss–Kronrod, in
//! the logarithmic variable when the panel spans many decades. Unbounded ends
//! are folded onto `(0, 1]` by `u = R / v`.

mod kronrod;
mod tanh_sinh;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::Accumulator;

/// Evaluation point handed to an [`Integrand`].
///
/// `x == anchor + offset` up to rounding. When `anchor` is a declared
/// singular location, `offset` is the exact distance to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub anchor: f64,
    pub offset: f64,
}

impl Point {
    pub fn at(x: f64) -> Self {
        Point {
            x,
            anchor: x,
            offset: 0.0,
        }
    }

    /// `x`, or the neighbouring float on the side of the offset when the offset
    /// is too small to move `x` off its anchor. Functions that jump at the
    /// anchor are then evaluated on the correct side.
    pub fn sided(&self) -> f64 {
        if self.x == self.anchor && self.offset != 0.0 {
            if self.offset > 0.0 {
                self.x.next_up()
            } else {
                self.x.next_down()
            }
        } else {
            self.x
        }
    }

    /// Signed distance `x - s`, exact when `s` is the anchor. An anchor near
    /// `s` (closer than `|x|`) is subtracted first; a far one would cancel.
    #[inline]
    pub fn minus(&self, s: f64) -> f64 {
        if self.anchor == s {
            self.offset
        } else if (self.anchor - s).abs() <= self.x.abs() {
            (self.anchor - s) + self.offset
        } else {
            self.x - s
        }
    }
}

pub trait Integrand: Sync {
    fn eval(&self, p: Point) -> f64;

    /// Polled between batches of evaluations; `true` stops the integration
    /// with [`Error::Aborted`]. Batches are fixed by the rule, so the set of
    /// points evaluated before stopping does not depend on scheduling.
    fn aborted(&self) -> bool {
        false
    }
}

impl<F: Fn(f64) -> f64 + Sync + ?Sized> Integrand for F {
    #[inline]
    fn eval(&self, p: Point) -> f64 {
        self(p.x)
    }
}

/// Wraps a closure that wants the full [`Point`].
pub struct Local<F>(pub F);

impl<F: Fn(Point) -> f64 + Sync> Integrand for Local<F> {
    #[inline]
    fn eval(&self, p: Point) -> f64 {
        (self.0)(p)
    }
}

/// Known behaviour `|u - s|^e` at each location `s`.
///
/// An exponent of exactly 0 marks a plain breakpoint (a kink or a jump).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SingularitySpec {
    locations: Vec<f64>,
    exponents: Vec<f64>,
}

impl SingularitySpec {
    pub fn new(locations: Vec<f64>, exponents: Vec<f64>) -> Result<Self> {
        if locations.len() != exponents.len() {
            return Err(Error::InvalidSingularity(format!(
                "{} locations but {} exponents",
                locations.len(),
                exponents.len()
            )));
        }
        let mut spec = SingularitySpec::none();
        for (s, e) in locations.into_iter().zip(exponents) {
            spec.push(s, e)?;
        }
        Ok(spec)
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn at(location: f64, exponent: f64) -> Result<Self> {
        Self::new(vec![location], vec![exponent])
    }

    /// Adds a location; duplicates keep the most singular exponent.
    pub fn push(&mut self, location: f64, exponent: f64) -> Result<()> {
        if !location.is_finite() {
            return Err(Error::InvalidSingularity(format!("location {location} is not finite")));
        }
        if !(exponent > -1.0) || !exponent.is_finite() {
            return Err(Error::InvalidSingularity(format!(
                "exponent {exponent} at {location} is not integrable"
            )));
        }
        match self.locations.iter().position(|&s| s == location) {
            Some(i) => {
                if exponent != 0.0 && (self.exponents[i] == 0.0 || exponent < self.exponents[i]) {
                    self.exponents[i] = exponent;
                }
            }
            None => {
                self.locations.push(location);
                self.exponents.push(exponent);
            }
        }
        Ok(())
    }

    pub fn with(mut self, location: f64, exponent: f64) -> Result<Self> {
        self.push(location, exponent)?;
        Ok(self)
    }

    pub fn breakpoint(self, location: f64) -> Result<Self> {
        self.with(location, 0.0)
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// Declared exponent at `x`, if `x` is a declared location.
    pub fn exponent_at(&self, x: f64) -> Option<f64> {
        self.locations.iter().position(|&s| s == x).map(|i| self.exponents[i])
    }

    fn is_singular(&self, x: f64) -> bool {
        matches!(self.exponent_at(x), Some(e) if e != 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_est: f64,
    pub n_evals: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Evaluation budget for the whole integral.
    pub max_evals: u64,
    /// Deepest tanh-sinh refinement level.
    pub max_level: u32,
    /// Evaluate large abscissa batches on the rayon pool.
    pub parallel: bool,
    /// Relative tolerance: the result is also accepted once its error is below
    /// about `rel_tol` times the integral of `|f|`. Zero disables the test.
    pub rel_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            max_evals: 1_000_000,
            max_level: 12,
            parallel: false,
            rel_tol: 0.0,
        }
    }
}

impl QuadConfig {
    pub fn parallel() -> Self {
        QuadConfig {
            parallel: true,
            ..Self::default()
        }
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        QuadConfig { rel_tol, ..self }
    }
}

/// Acceptance test shared by the panel rules.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tol {
    pub abs: f64,
    pub rel: f64,
}

impl Tol {
    pub fn met(&self, err: f64, value: f64) -> bool {
        err <= self.abs.max(self.rel * value.abs())
    }
}

/// Ratio above which a smooth same-sign panel is integrated in `ln |x|`.
const WIDE: f64 = 64.0;

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// `x = sign * e^s`
    Log {
        sign: f64,
    },
    /// `x = start / v` for `v` in `(0, 1]`
    Tail {
        start: f64,
    },
    /// `x = anchor + dir * width * e^{-s}` for `s >= 0`
    EndLog {
        anchor: f64,
        dir: f64,
        width: f64,
    },
}

pub(crate) struct Eval<'a> {
    f: &'a dyn Integrand,
    map: Map,
}

impl Eval<'_> {
    fn aborted(&self) -> bool {
        self.f.aborted()
    }

    /// Value of the transformed integrand at `s`, rejecting non-finite output.
    fn at(&self, s: f64) -> Result<f64> {
        let v = self.near(s, 0.0);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { x: s })
        }
    }

    fn near(&self, anchor: f64, offset: f64) -> f64 {
        match self.map {
            Map::Identity => self.f.eval(Point {
                x: anchor + offset,
                anchor,
                offset,
            }),
            Map::Log { sign } => {
                let x = sign * (anchor + offset).exp();
                self.f.eval(Point::at(x)) * x.abs()
            }
            Map::Tail { start } => {
                let x = start / (anchor + offset);
                if !x.is_finite() {
                    return 0.0;
                }
                let fx = self.f.eval(Point::at(x));
                if fx == 0.0 {
                    return 0.0;
                }
                (fx * x.abs()) * (x / start)
            }
            Map::EndLog { anchor: a, dir, width } => {
                let d = width * (-(anchor + offset)).exp();
                let o = dir * d;
                let v = self.f.eval(Point {
                    x: a + o,
                    anchor: a,
                    offset: o,
                });
                if v == 0.0 {
                    0.0
                } else {
                    v * d
                }
            }
        }
    }
}

pub(crate) struct PanelOutcome {
    value: f64,
    err: f64,
    evals: u64,
    converged: bool,
}

#[derive(Debug, Clone, Copy)]
enum Panel {
    Smooth {
        l: f64,
        r: f64,
    },
    SmoothLog {
        l: f64,
        r: f64,
    },
    Singular {
        l: f64,
        r: f64,
        el: f64,
        er: f64,
    },
    Upper {
        start: f64,
    },
    Lower {
        start: f64,
    },
    /// Half of a panel next to a strong singularity at `anchor`, integrated in
    /// `-ln |x - anchor|`; `far` is the other end.
    EndLog {
        anchor: f64,
        far: f64,
        e: f64,
    },
}

fn wide(l: f64, r: f64) -> bool {
    l != 0.0 && r != 0.0 && (l > 0.0) == (r > 0.0) && (r / l).abs().max((l / r).abs()) > WIDE
}

fn geometric_mid(l: f64, r: f64) -> f64 {
    l.signum() * (l.abs() * r.abs()).sqrt()
}

fn push_finite(panels: &mut Vec<Panel>, l: f64, r: f64, spec: &SingularitySpec) {
    let sl = spec.is_singular(l);
    let sr = spec.is_singular(r);
    if !sl && !sr {
        if wide(l, r) {
            panels.push(Panel::SmoothLog { l, r });
        } else {
            panels.push(Panel::Smooth { l, r });
        }
        return;
    }
    if wide(l, r) {
        // Keep the singular end on a short-ratio panel and fold the rest into log panels.
        let m = geometric_mid(l, r);
        if m > l && m < r {
            if sl {
                push_split(panels, l, m, spec, true);
                push_finite(panels, m, r, spec);
            } else {
                push_finite(panels, l, m, spec);
                push_split(panels, m, r, spec, false);
            }
            return;
        }
    }
    push_singular(
        panels,
        l,
        r,
        spec.exponent_at(l).unwrap_or(0.0),
        spec.exponent_at(r).unwrap_or(0.0),
    );
}

/// Exponents at or below this leave too much mass beyond the reach of the
/// double-exponential nodes, so their end is integrated in the log of the offset.
const STRONG: f64 = -0.95;

fn push_singular(panels: &mut Vec<Panel>, l: f64, r: f64, el: f64, er: f64) {
    if el > STRONG && er > STRONG {
        panels.push(Panel::Singular { l, r, el, er });
        return;
    }
    let m = 0.5 * (l + r);
    if el <= STRONG {
        panels.push(Panel::EndLog {
            anchor: l,
            far: m,
            e: el,
        });
    } else {
        panels.push(Panel::Singular { l, r: m, el, er: 0.0 });
    }
    if er <= STRONG {
        panels.push(Panel::EndLog {
            anchor: r,
            far: m,
            e: er,
        });
    } else {
        panels.push(Panel::Singular { l: m, r, el: 0.0, er });
    }
}

/// Like `push_finite`, but the midpoint introduced by a split is never singular.
fn push_split(panels: &mut Vec<Panel>, l: f64, r: f64, spec: &SingularitySpec, left_singular: bool) {
    if wide(l, r) {
        let m = geometric_mid(l, r);
        if m > l && m < r {
            if left_singular {
                push_split(panels, l, m, spec, true);
                panels.push(Panel::SmoothLog { l: m, r });
            } else {
                panels.push(Panel::SmoothLog { l, r: m });
                push_split(panels, m, r, spec, false);
            }
            return;
        }
    }
    let (el, er) = if left_singular {
        (spec.exponent_at(l).unwrap_or(0.0), 0.0)
    } else {
        (0.0, spec.exponent_at(r).unwrap_or(0.0))
    };
    push_singular(panels, l, r, el, er);
}

/// Distance below which a structural breakpoint is dropped in favour of a declared one.
const NEAR: f64 = 1e-3;

/// Start of a tail at distance at least about 1 from the origin; `extreme` is the
/// outermost finite breakpoint's modulus.
fn tail_start(extreme: f64, sign: f64) -> f64 {
    sign * if extreme >= 1.0 - NEAR { extreme } else { 1.0 }
}

/// A plain breakpoint much closer to a singular point than to its other
/// neighbour sees a near-singularity at its far side, so it takes the
/// singular exponent and its panels cluster nodes there too.
fn shadow_near_singular(pts: &[f64], spec: &SingularitySpec) -> SingularitySpec {
    let mut out = spec.clone();
    for (i, &x) in pts.iter().enumerate() {
        if spec.is_singular(x) {
            continue;
        }
        let left = i.checked_sub(1).map(|j| pts[j]);
        let right = pts.get(i + 1).copied();
        for (near, other) in [(left, right), (right, left)] {
            let Some(s) = near else { continue };
            let Some(e) = spec.exponent_at(s).filter(|&e| e < 0.0) else {
                continue;
            };
            // An outermost point borders a tail, whose scale is its modulus.
            let room = other.map_or(x.abs(), |o| (o - x).abs());
            if (x - s).abs() <= NEAR * room {
                // Locations come from the spec or are validated panel ends, so this cannot fail.
                let _ = out.push(x, e);
            }
        }
    }
    out
}

fn build_panels(a: f64, b: f64, spec: &SingularitySpec, whole_line: bool) -> Vec<Panel> {
    let mut pts: Vec<f64> = spec.locations().to_vec();
    if whole_line {
        // Structural points yield to declared ones nearby, which would otherwise
        // leave sliver panels.
        for c in [-1.0, 0.0, 1.0] {
            if !spec.locations().iter().any(|&l| (l - c).abs() <= NEAR) {
                pts.push(c);
            }
        }
    }
    pts.retain(|&s| s > a && s < b);
    if a.is_finite() {
        pts.push(a);
    }
    if b.is_finite() {
        pts.push(b);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let adjusted = shadow_near_singular(&pts, spec);
    let spec = &adjusted;

    let mut panels = Vec::new();
    let mut lower_start = None;
    let mut upper_start = None;
    if a == f64::NEG_INFINITY {
        let mut s = tail_start(pts.first().copied().unwrap_or(-1.0).min(-0.0).abs(), -1.0);
        if spec.is_singular(s) {
            s *= 2.0;
        }
        if pts.first() != Some(&s) {
            pts.insert(0, s);
        }
        lower_start = Some(s);
    }
    if b == f64::INFINITY {
        let mut s = tail_start(pts.last().copied().unwrap_or(1.0).max(0.0), 1.0);
        if spec.is_singular(s) {
            s *= 2.0;
        }
        if pts.last() != Some(&s) {
            pts.push(s);
        }
        upper_start = Some(s);
    }
    if let Some(start) = lower_start {
        panels.push(Panel::Lower { start });
    }
    for w in pts.windows(2) {
        push_finite(&mut panels, w[0], w[1], spec);
    }
    if let Some(start) = upper_start {
        panels.push(Panel::Upper { start });
    }
    panels
}

fn run_panel(f: &dyn Integrand, panel: Panel, tol: Tol, budget: u64, cfg: &QuadConfig) -> Result<PanelOutcome> {
    let ev = |map| Eval { f, map };
    match panel {
        Panel::Smooth { l, r } => kronrod::adaptive(&ev(Map::Identity), l, r, tol, budget),
        Panel::SmoothLog { l, r } => {
            let sign = l.signum();
            let (sl, sr) = if sign > 0.0 {
                (l.ln(), r.ln())
            } else {
                ((-r).ln(), (-l).ln())
            };
            kronrod::adaptive(&ev(Map::Log { sign }), sl, sr, tol, budget)
        }
        Panel::Singular { l, r, el, er } => tanh_sinh::integrate(
            &ev(Map::Identity),
            l,
            r,
            (el, er),
            tol,
            budget,
            cfg.max_level,
            cfg.parallel,
        ),
        Panel::EndLog { anchor, far, e } => end_log(f, anchor, far, e, tol, budget),
        Panel::Upper { start } | Panel::Lower { start } => tanh_sinh::integrate(
            &ev(Map::Tail { start }),
            0.0,
            1.0,
            (0.0, 0.0),
            tol,
            budget,
            cfg.max_level,
            cfg.parallel,
        ),
    }
}

/// Smallest offset from a strong singularity sampled by [`Panel::EndLog`].
const END_OFFSET: f64 = 1e-300;
/// Relative mismatch between declared and observed decay below which the mass
/// beyond [`END_OFFSET`] is added as a correction rather than counted as error.
const POWER_MATCH: f64 = 1e-2;

fn end_log(f: &dyn Integrand, anchor: f64, far: f64, e: f64, tol: Tol, budget: u64) -> Result<PanelOutcome> {
    let width = (far - anchor).abs();
    let g = Eval {
        f,
        map: Map::EndLog {
            anchor,
            dir: (far - anchor).signum(),
            width,
        },
    };
    let s_max = (width / END_OFFSET).ln().max(1.0);
    let mut out = kronrod::adaptive(&g, 0.0, s_max, tol, budget)?;
    // Beyond s_max the integrand is c·e^{-(1+e)s}, whose integral is g(s_max)/(1+e).
    // The rate is checked over a long baseline so rounding in g barely moves it.
    let base = 0.5 * s_max;
    let (g0, g1) = (g.at(s_max)?, g.at(s_max - base)?);
    out.evals += 2;
    if g0 != 0.0 {
        let mass = g0 / (1.0 + e);
        let observed = if g1 != 0.0 && g0.signum() == g1.signum() {
            (g1 / g0).ln() / base
        } else {
            f64::NAN
        };
        let mismatch = (observed - (1.0 + e)).abs() / (1.0 + e);
        if mismatch <= POWER_MATCH {
            out.value += mass;
            out.err += mass.abs() * mismatch;
        } else {
            out.err += mass.abs();
        }
        out.converged &= tol.met(out.err, out.value);
    }
    Ok(out)
}

/// Relative accuracy of the pilot pass used with a relative tolerance.
const PILOT_REL: f64 = 1e-4;
/// Per-panel evaluation cap of the pilot pass; it only needs the magnitude.
const PILOT_EVALS: u64 = 512;

/// Panels run in order; parallelism lives inside each panel's batches.
fn run_panels(
    f: &dyn Integrand,
    panels: &[Panel],
    tol: Tol,
    budget: u64,
    cfg: &QuadConfig,
) -> Result<Vec<PanelOutcome>> {
    panels
        .iter()
        .map(|&p| {
            if f.aborted() {
                return Err(Error::Aborted);
            }
            run_panel(f, p, tol, budget, cfg)
        })
        .collect()
}

fn run(
    f: &dyn Integrand,
    a: f64,
    b: f64,
    spec: &SingularitySpec,
    tol: f64,
    cfg: &QuadConfig,
    whole_line: bool,
) -> Result<QuadResult> {
    if a.is_nan() || b.is_nan() || !(a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    if !(tol > 0.0) {
        return Err(Error::Domain {
            function: "integrate",
            detail: format!("tolerance {tol} must be positive"),
        });
    }
    if let Some(&s) = spec.locations().iter().find(|&&s| s < a || s > b) {
        return Err(Error::InvalidSingularity(format!("location {s} outside [{a}, {b}]")));
    }
    let panels = build_panels(a, b, spec, whole_line);
    let n = panels.len().max(1) as u64;
    let budget = (cfg.max_evals / n).max(64);
    let outcomes = if cfg.rel_tol > 0.0 {
        // A cheap pilot fixes the overall magnitude, so panels carrying a
        // negligible share of it are not refined to their own relative accuracy.
        let pilot_tol = Tol {
            abs: tol / n as f64,
            rel: cfg.rel_tol.max(PILOT_REL),
        };
        let pilot = run_panels(f, &panels, pilot_tol, PILOT_EVALS.min(budget), cfg)?;
        let mut magnitude = Accumulator::new();
        magnitude.extend(pilot.iter().map(|o| o.value.abs()));
        let target = tol.max(cfg.rel_tol * magnitude.value());
        let final_tol = Tol {
            abs: 0.5 * target / n as f64,
            rel: 0.5 * cfg.rel_tol,
        };
        panels
            .iter()
            .zip(pilot)
            .map(|(&p, o)| {
                if o.converged && final_tol.met(o.err, o.value) {
                    return Ok(o);
                }
                if f.aborted() {
                    return Err(Error::Aborted);
                }
                let mut r = run_panel(f, p, final_tol, budget, cfg)?;
                r.evals += o.evals;
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let panel_tol = Tol {
            abs: tol / n as f64,
            rel: 0.0,
        };
        run_panels(f, &panels, panel_tol, budget, cfg)?
    };
    let mut value = Accumulator::new();
    let mut err = Accumulator::new();
    let mut evals = 0;
    let mut converged = true;
    let mut magnitude = Accumulator::new();
    for o in &outcomes {
        value.add(o.value);
        magnitude.add(o.value.abs());
        err.add(o.err);
        evals += o.evals;
        converged &= o.converged;
    }
    let abs_error_est = err.value();
    Ok(QuadResult {
        value: value.value(),
        abs_error_est,
        n_evals: evals.max(1),
        converged: converged && abs_error_est <= tol.max(cfg.rel_tol * magnitude.value()),
    })
}

/// `∫_a^b f`, where either end may be infinite.
pub fn integrate<F: Integrand + ?Sized>(f: &F, a: f64, b: f64, sing: &SingularitySpec, tol: f64) -> Result<QuadResult> {
    integrate_with(f, a, b, sing, tol, &QuadConfig::default())
}

pub fn integrate_with<F: Integrand + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    sing: &SingularitySpec,
    tol: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    run(&Dyn(f), a, b, sing, tol, cfg, false)
}

/// `∫_{-∞}^{∞} f`, split at the declared locations and at `0, ±1`.
pub fn integrate_whole_line<F: Integrand + ?Sized>(f: &F, sing: &SingularitySpec, tol: f64) -> Result<QuadResult> {
    integrate_whole_line_with(f, sing, tol, &QuadConfig::default())
}

pub fn integrate_whole_line_with<F: Integrand + ?Sized>(
    f: &F,
    sing: &SingularitySpec,
    tol: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    run(&Dyn(f), f64::NEG_INFINITY, f64::INFINITY, sing, tol, cfg, true)
}

struct Dyn<'a, F: ?Sized>(&'a F);

impl<F: Integrand + ?Sized> Integrand for Dyn<'_, F> {
    #[inline]
    fn eval(&self, p: Point) -> f64 {
        self.0.eval(p)
    }

    fn aborted(&self) -> bool {
        self.0.aborted()
    }
}
