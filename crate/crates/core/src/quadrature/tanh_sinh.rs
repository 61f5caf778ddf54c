use std::f64::consts::PI;

use rayon::prelude::*;

use super::{Eval, PanelOutcome, Tol};
use crate::error::Error;
use crate::sum::Accumulator;

/// Abscissae stop where the relative offset from an endpoint reaches about 1e-275.
const T_MAX: f64 = 6.0;
const MIN_LEVEL: u32 = 3;
const PAR_THRESHOLD: usize = 64;

#[derive(Debug, Clone, Copy)]
struct Node {
    anchor: f64,
    offset: f64,
    weight: f64,
}

/// Node at parameter `t` on `[l, r]`; the offset is measured from the nearer endpoint.
fn node(l: f64, r: f64, t: f64) -> Option<Node> {
    let width = r - l;
    let z = 0.5 * PI * t.sinh();
    let e = (-2.0 * z.abs()).exp();
    let off = width * e / (1.0 + e);
    let weight = width * PI * t.cosh() * e / ((1.0 + e) * (1.0 + e));
    if !(off >= f64::MIN_POSITIVE) || weight == 0.0 {
        return None;
    }
    let (anchor, offset) = if t < 0.0 {
        (l, off)
    } else if t > 0.0 {
        (r, -off)
    } else {
        (l, 0.5 * width)
    };
    Some(Node { anchor, offset, weight })
}

fn level_params(level: u32) -> Vec<f64> {
    if level == 0 {
        let n = T_MAX.floor() as i64;
        return (-n..=n).map(|k| k as f64).collect();
    }
    let h = 0.5f64.powi(level as i32);
    let n = (T_MAX / h).floor() as i64;
    (-n..=n).filter(|k| k % 2 != 0).map(|k| k as f64 * h).collect()
}

/// Double-exponential rule on `[l, r]`, refined by halving the step.
///
/// `end_exponents` are the declared algebraic exponents at the two ends. The
/// mass beyond the outermost abscissae is added analytically when the two
/// innermost values confirm the declared power, and is counted as error otherwise.
pub(super) fn integrate(
    g: &Eval,
    l: f64,
    r: f64,
    end_exponents: (f64, f64),
    tol: Tol,
    budget: u64,
    max_level: u32,
    parallel: bool,
) -> crate::Result<PanelOutcome> {
    let width = r - l;
    let mut raw = Accumulator::new();
    let mut evals = 0u64;
    let mut prev: Option<f64> = None;
    let mut best = PanelOutcome {
        value: 0.0,
        err: f64::INFINITY,
        evals: 0,
        converged: false,
    };
    // the two smallest offsets seen at each end, with f and the node weight there
    let mut edge = [[(f64::INFINITY, 0.0f64, 0.0f64); 2]; 2];
    for level in 0..=max_level {
        let nodes: Vec<Node> = level_params(level).into_iter().filter_map(|t| node(l, r, t)).collect();
        if evals + nodes.len() as u64 > budget && level > 0 {
            break;
        }
        let eval_node = |nd: &Node| -> crate::Result<f64> {
            let v = g.near(nd.anchor, nd.offset);
            if v.is_finite() {
                Ok(v * nd.weight)
            } else if nd.anchor + nd.offset == nd.anchor || nd.offset.abs() <= 1e-12 * width {
                Ok(0.0)
            } else {
                Err(Error::NonFinite {
                    x: nd.anchor + nd.offset,
                })
            }
        };
        let contrib: Vec<f64> = if parallel && nodes.len() >= PAR_THRESHOLD {
            nodes.par_iter().map(eval_node).collect::<crate::Result<_>>()?
        } else {
            nodes.iter().map(eval_node).collect::<crate::Result<_>>()?
        };
        evals += nodes.len() as u64;
        if g.aborted() {
            return Err(Error::Aborted);
        }
        for (nd, c) in nodes.iter().zip(&contrib) {
            raw.add(*c);
            let side = if nd.offset > 0.0 { 0 } else { 1 };
            let e = &mut edge[side];
            let here = (nd.offset.abs(), c / nd.weight, nd.weight);
            if here.0 < e[0].0 {
                e[1] = e[0];
                e[0] = here;
            } else if here.0 < e[1].0 {
                e[1] = here;
            }
        }
        let h = if level == 0 { 1.0 } else { 0.5f64.powi(level as i32) };
        let (c0, l0) = end_mass(edge[0], end_exponents.0, h);
        let (c1, l1) = end_mass(edge[1], end_exponents.1, h);
        let value = raw.value() * h + c0 + c1;
        let lost = l0 + l1;
        if let Some(p) = prev {
            let err = (value - p).abs() + lost;
            best = PanelOutcome {
                value,
                err,
                evals,
                converged: false,
            };
            if level >= MIN_LEVEL && tol.met(err, value) {
                best.converged = true;
                return Ok(best);
            }
        }
        prev = Some(value);
    }
    best.evals = evals.max(1);
    if best.err.is_infinite() {
        best.value = prev.unwrap_or(0.0);
    }
    Ok(best)
}

/// Relative mismatch between declared and observed exponent below which the
/// end mass is trusted as a correction.
const POWER_MATCH: f64 = 1e-2;

/// `(correction, error)` for the mass between an endpoint and the innermost
/// abscissa, from the two innermost `(offset, f, weight)` samples. A trusted
/// correction also gives the innermost node the half weight of a trapezoid end.
fn end_mass(edge: [(f64, f64, f64); 2], exponent: f64, h: f64) -> (f64, f64) {
    let [(d0, f0, w0), (d1, f1, _)] = edge;
    if !(d0.is_finite() && f0.is_finite()) || f0 == 0.0 {
        return (0.0, 0.0);
    }
    let mass = d0 * f0 / (1.0 + exponent);
    if !(d1.is_finite() && f1.is_finite()) || f1 == 0.0 || f0.signum() != f1.signum() {
        return (0.0, mass.abs());
    }
    let observed = (f0 / f1).ln() / (d0 / d1).ln();
    let mismatch = (observed - exponent).abs() / (1.0 + exponent);
    if mismatch <= POWER_MATCH {
        (mass - 0.5 * h * f0 * w0, mass.abs() * mismatch)
    } else {
        (0.0, mass.abs())
    }
}
