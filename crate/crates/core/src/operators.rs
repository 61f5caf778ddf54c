//! Discretized integral operators and estimates of their norms.
//!
//! At `p = 2`, write `x = ±e^s` and `y = ±e^t` and pass to the unitary
//! coordinates `F(s) = |x|^{1-δσ} f(x)` (homogeneous: `|x|^{1-μ} f(x)`) and
//! `G(t) = |y|^σ (Tf)(y)`. Every variant then becomes
//! `G_{±}(t) = Σ_± ∫ κ_{sign}(t ± s) F_±(s) ds` with one function
//! `κ_{±}(r) = |u|^σ min{1, |u|}^β / |1 + u|^{λ+β}`, `u = ±e^r`. The kernel depends on
//! `s + t` (Hankel) for the non-homogeneous kernel with `δ = 1` and on `t - s`
//! (Toeplitz) otherwise, and the truncations keep `r <= 0` (first kind) or
//! `r > 0` (second kind). `∫ (κ₊ + κ₋)` over the kept half lines is the
//! constant, so the operator norm is `K`, `K₁` or `K₂`.
//!
//! The grid has `n` cells of width `h = 2T/n` on `[-T, T]` for each sign. The
//! matrix is the Galerkin compression onto cell indicators,
//! `M_{ij} = (1/h) ∫∫_{cell i × cell j} κ`, so each entry is a tent-weighted
//! average of `κ`, finite even where the cells straddle the singular curve,
//! and `‖M‖ <= ‖T‖` exactly. Nested grids give nondecreasing norms.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::kernels::{KernelForm, KernelSpec, Truncation};
use crate::params::Delta;
use crate::quadrature::{integrate_with, Local, Point, QuadConfig, SingularitySpec};

/// Iteration cap of [`estimate_norm`].
pub const MAX_ITERATIONS: usize = 10_000;

/// Relative accuracy of the cell averages.
const CELL_TOL: f64 = 1e-12;

/// How the matrix was built, for reports.
pub const CONSTRUCTION: &str = "Galerkin compression onto cell indicators of a log grid: \
M_ij = (1/h) * integral of kappa over cell i x cell j, in unitary log coordinates; \
cells are integrated exactly, so no node is moved off the singular curve";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// Entries depend on `s + t`.
    Hankel,
    /// Entries depend on `t - s`.
    Toeplitz,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOperator {
    /// `None` for a matrix given directly.
    pub spec: Option<KernelSpec>,
    /// Cell centres, ascending: `-e^{s_{n-1}}, …, -e^{s_0}, e^{s_0}, …, e^{s_{n-1}}`.
    pub nodes: Vec<f64>,
    /// Cell lengths in `x`.
    pub weights: Vec<f64>,
    /// Row-major, rows indexed by output nodes `y`, columns by input nodes `x`.
    pub matrix: Vec<f64>,
    pub dim: usize,
    pub p: f64,
    /// Cell width `h` in the log variable (0 for a matrix given directly).
    pub step: f64,
    pub t_max: f64,
    /// Shift of the log grid.
    pub offset: f64,
    pub structure: Option<Structure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Last change of the squared norm, relative to it.
    pub last_change: f64,
}

/// `ln κ_{sign}(r)`, from the offset `r` to `0` so that `|1 - e^r|` keeps its digits.
fn ln_kappa(beta: f64, sigma: f64, alpha: f64, negative: bool, r: f64) -> f64 {
    let gap = if negative {
        r.exp_m1().abs().ln()
    } else if r > 0.0 {
        r + (-r).exp().ln_1p()
    } else {
        r.exp().ln_1p()
    };
    sigma * r + beta * r.min(0.0) - alpha * gap
}

/// `∫ κ(r) (1 - |r - c|/h) dr` over `[c - h, c + h]` and the kept half line.
fn cell_average(spec: &KernelSpec, negative: bool, c: f64, h: f64) -> Result<f64> {
    let pr = &spec.params;
    let (beta, sigma, alpha) = (pr.beta, pr.sigma, pr.alpha());
    let (mut lo, mut hi) = (c - h, c + h);
    match spec.truncation {
        Truncation::None => {}
        Truncation::FirstKind => hi = hi.min(0.0),
        Truncation::SecondKind => lo = lo.max(0.0),
    }
    if !(lo < hi) {
        return Ok(0.0);
    }
    let mut sing = SingularitySpec::none();
    if (lo..=hi).contains(&0.0) {
        let e = if negative && alpha > 0.0 { -alpha } else { 0.0 };
        sing.push(0.0, e)?;
    }
    if lo < c && c < hi {
        sing.push(c, 0.0)?;
    }
    let g = Local(|p: Point| {
        let tent = 1.0 - p.minus(c).abs() / h;
        tent.max(0.0) * ln_kappa(beta, sigma, alpha, negative, p.minus(0.0)).exp()
    });
    let cfg = QuadConfig::default().with_rel_tol(CELL_TOL);
    let q = integrate_with(&g, lo, hi, &sing, f64::MIN_POSITIVE, &cfg)?;
    if !q.converged {
        return Err(Error::Convergence {
            what: format!("cell average at r = {c}"),
            value: q.value,
            abs_error_est: q.abs_error_est,
        });
    }
    Ok(q.value)
}

fn structure_of(spec: &KernelSpec) -> Structure {
    match (spec.form, spec.params.delta) {
        (KernelForm::Nonhomogeneous, Delta::Plus) => Structure::Hankel,
        _ => Structure::Toeplitz,
    }
}

/// Builds the Galerkin matrix of the operator on `2·n_per_side` log cells
/// covering `±[e^{-t_max}, e^{t_max}]`.
pub fn build_operator(spec: &KernelSpec, n_per_side: usize, t_max: f64, p: f64) -> Result<GridOperator> {
    build_operator_with_offset(spec, n_per_side, t_max, p, 0.0)
}

/// As [`build_operator`] with the log grid moved by `offset`, so the cells
/// cover `±[e^{offset-t_max}, e^{offset+t_max}]`. Grids with the same offset stay nested.
pub fn build_operator_with_offset(
    spec: &KernelSpec,
    n_per_side: usize,
    t_max: f64,
    p: f64,
    offset: f64,
) -> Result<GridOperator> {
    if n_per_side < 8 {
        return Err(domain(
            "build_operator",
            format!("n_per_side = {n_per_side} must be at least 8"),
        ));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(domain(
            "build_operator",
            format!("t_max = {t_max} must be positive and finite"),
        ));
    }
    if !(p > 0.0 && p.is_finite() && p != 1.0) {
        return Err(domain("build_operator", format!("p = {p} must be positive and not 1")));
    }
    if !(offset.abs() < t_max) {
        return Err(domain(
            "build_operator",
            format!("offset = {offset} must be smaller than t_max in size"),
        ));
    }
    let n = n_per_side;
    let h = 2.0 * t_max / n as f64;
    let centre = |i: usize| offset - t_max + (i as f64 + 0.5) * h;
    let structure = structure_of(spec);
    // Distinct values: index m = i + j (Hankel) or j - i + n - 1 (Toeplitz).
    let offsets: Vec<f64> = (0..2 * n - 1)
        .map(|m| match structure {
            Structure::Hankel => 2.0 * (offset - t_max) + (m as f64 + 1.0) * h,
            Structure::Toeplitz => (m as f64 - (n as f64 - 1.0)) * h,
        })
        .collect();
    let table = |negative: bool| -> Result<Vec<f64>> {
        offsets
            .par_iter()
            .map(|&c| cell_average(spec, negative, c, h))
            .collect()
    };
    let same = table(false)?;
    let opposite = table(true)?;

    // Node k < n is -e^{s_{n-1-k}}; node k >= n is e^{s_{k-n}}.
    let split = |k: usize| {
        if k < n {
            (true, n - 1 - k)
        } else {
            (false, k - n)
        }
    };
    let nodes: Vec<f64> = (0..2 * n)
        .map(|k| {
            let (neg, i) = split(k);
            if neg {
                -centre(i).exp()
            } else {
                centre(i).exp()
            }
        })
        .collect();
    let weights: Vec<f64> = (0..2 * n)
        .map(|k| {
            let s = centre(split(k).1);
            (s + 0.5 * h).exp() - (s - 0.5 * h).exp()
        })
        .collect();
    let dim = 2 * n;
    let mut matrix = vec![0.0; dim * dim];
    matrix.par_chunks_mut(dim).enumerate().for_each(|(row, out)| {
        let (ny, j) = split(row);
        for (col, v) in out.iter_mut().enumerate() {
            let (nx, i) = split(col);
            let m = match structure {
                Structure::Hankel => i + j,
                Structure::Toeplitz => j + n - 1 - i,
            };
            *v = if nx == ny { same[m] } else { opposite[m] };
        }
    });
    Ok(GridOperator {
        spec: Some(*spec),
        nodes,
        weights,
        matrix,
        dim,
        p,
        step: h,
        t_max,
        offset,
        structure: Some(structure),
    })
}

impl GridOperator {
    /// An operator given by its rows, at `p = 2`.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(domain("GridOperator::from_matrix", "empty matrix"));
        }
        let mut matrix = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(domain("GridOperator::from_matrix", "entries must be finite"));
            }
            matrix.extend_from_slice(r);
        }
        Ok(GridOperator {
            spec: None,
            nodes: (1..=dim).map(|k| k as f64).collect(),
            weights: vec![1.0; dim],
            matrix,
            dim,
            p: 2.0,
            step: 0.0,
            t_max: 0.0,
            offset: 0.0,
            structure: None,
        })
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.matrix[row * self.dim..(row + 1) * self.dim]
    }

    /// `Mᵀ v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, v.len())?;
        let mut out = vec![0.0; self.dim];
        for (r, &w) in v.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += m * w;
            }
        }
        Ok(out)
    }

    fn unitary_exponents(&self) -> Result<(f64, f64)> {
        let spec = self
            .spec
            .ok_or_else(|| Error::Unsupported("grid functions need an operator built from a kernel".into()))?;
        let pr = &spec.params;
        let input = match spec.form {
            KernelForm::Nonhomogeneous => 1.0 - pr.delta.as_f64() * pr.sigma,
            KernelForm::Homogeneous => 1.0 - pr.mu,
        };
        Ok((input, pr.sigma))
    }

    /// Coordinates of `f` in the input space: `√h · |x|^{1-δσ} f(x)` at the
    /// nodes (`|x|^{1-μ}` for the homogeneous kernel). Their Euclidean norm
    /// approximates the weighted norm of `f` at `p = 2`.
    pub fn encode_input(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let (a, _) = self.unitary_exponents()?;
        let r = self.step.sqrt();
        Ok(self.nodes.iter().map(|&x| r * x.abs().powf(a) * f(x)).collect())
    }

    /// Coordinates of `g` in the dual space: `√h · |y|^{1-σ} g(y)`, so that the
    /// dot product with `apply` approximates `(Tf, g) = ∫ (Tf) g`.
    pub fn encode_dual(&self, g: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let (_, s) = self.unitary_exponents()?;
        let r = self.step.sqrt();
        Ok(self.nodes.iter().map(|&y| r * y.abs().powf(1.0 - s) * g(y)).collect())
    }

    /// Values of `Tf` at the nodes from the output coordinates of [`apply`].
    pub fn decode_output(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, v.len())?;
        let (_, s) = self.unitary_exponents()?;
        let r = self.step.sqrt();
        Ok(self
            .nodes
            .iter()
            .zip(v)
            .map(|(&y, &g)| g / (r * y.abs().powf(s)))
            .collect())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `M f`.
pub fn apply(op: &GridOperator, f_values: &[f64]) -> Result<Vec<f64>> {
    check_len(op.dim, f_values.len())?;
    Ok((0..op.dim)
        .map(|r| op.row(r).iter().zip(f_values).map(|(m, v)| m * v).sum())
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest singular value of the matrix by power iteration on `MᵀM` from the
/// all-ones vector. Stops when successive Rayleigh quotients differ by less
/// than `tol` relative to the latest.
pub fn estimate_norm(op: &GridOperator, tol: f64) -> Result<NormEstimate> {
    if op.p != 2.0 {
        return Err(Error::Unsupported(format!(
            "norm estimation needs p = 2, got p = {}",
            op.p
        )));
    }
    if !(tol > 0.0) {
        return Err(domain("estimate_norm", format!("tolerance {tol} must be positive")));
    }
    let mut v = vec![1.0 / (op.dim as f64).sqrt(); op.dim];
    let mut rho = f64::NAN;
    let mut change = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let w = op.apply_transpose(&apply(op, &v)?)?;
        let next = dot(&v, &w);
        let len = dot(&w, &w).sqrt();
        if next == 0.0 || len == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
                last_change: 0.0,
            });
        }
        if rho.is_finite() {
            change = (next - rho).abs() / next;
        }
        rho = next;
        if change < tol {
            return Ok(NormEstimate {
                value: rho.sqrt(),
                iterations: it,
                converged: true,
                last_change: change,
            });
        }
        v = w.into_iter().map(|x| x / len).collect();
    }
    Ok(NormEstimate {
        value: rho.sqrt(),
        iterations: MAX_ITERATIONS,
        converged: false,
        last_change: change,
    })
}
