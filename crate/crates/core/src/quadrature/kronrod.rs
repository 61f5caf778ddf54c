use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Eval, PanelOutcome, Tol};
use crate::sum::Accumulator;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// One 15-point Kronrod evaluation with its embedded 7-point Gauss estimate.
fn rule(g: &Eval, a: f64, b: f64) -> crate::Result<(Segment, bool)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g.at(c)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut resabs = (WGK[7] * fc).abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = g.at(c - dx)?;
        let f2 = g.at(c + dx)?;
        kron += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).abs();
    // Below this the rule is limited by rounding and further bisection cannot help.
    let floor = 50.0 * f64::EPSILON * (resabs * h).abs();
    Ok((
        Segment {
            a,
            b,
            value,
            err: err.max(floor),
        },
        err <= floor,
    ))
}

/// Globally adaptive Gauss–Kronrod on `[a, b]`.
pub(super) fn adaptive(g: &Eval, a: f64, b: f64, tol: Tol, budget: u64) -> crate::Result<PanelOutcome> {
    let mut evals = 15u64;
    let (first, settled) = rule(g, a, b)?;
    let mut active = BinaryHeap::new();
    let mut done = Vec::new();
    if settled {
        done.push(first);
    } else {
        active.push(first);
    }
    let totals = |active: &BinaryHeap<Segment>, done: &[Segment]| {
        let mut err = Accumulator::new();
        let mut value = Accumulator::new();
        for s in active.iter().chain(done) {
            err.add(s.err);
            value.add(s.value);
        }
        (err.value(), value.value())
    };
    loop {
        let (err, value) = totals(&active, &done);
        if tol.met(err, value) || evals + 30 > budget {
            break;
        }
        if g.aborted() {
            return Err(crate::error::Error::Aborted);
        }
        let Some(worst) = active.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || worst.b - worst.a <= 8.0 * f64::EPSILON * mid.abs() {
            done.push(worst);
            continue;
        }
        for (l, r) in [(worst.a, mid), (mid, worst.b)] {
            let (seg, settled) = rule(g, l, r)?;
            if settled {
                done.push(seg);
            } else {
                active.push(seg);
            }
        }
        evals += 30;
    }
    let mut all: Vec<Segment> = active.into_vec();
    all.extend(done);
    all.sort_by(|s, t| s.a.total_cmp(&t.a));
    let mut value = Accumulator::new();
    let mut err = Accumulator::new();
    for s in &all {
        value.add(s.value);
        err.add(s.err);
    }
    let (err, value) = (err.value(), value.value());
    Ok(PanelOutcome {
        value,
        err,
        evals,
        converged: tol.met(err, value),
    })
}
