//! Sharp constants of whole-plane Hilbert-type integral inequalities.
//!
//! The kernel is `min{1, |x^δ y|}^β / |1 + x^δ y|^{λ+β}` (or its homogeneous
//! counterpart `min{|x|, |y|}^β / |x + y|^{λ+β}`), and the best constant is
//! `K(σ) = K₁(σ) + K₂(σ)`. The crate computes these constants by three
//! independent routes, checks the weight-function identities, verifies the
//! inequalities on concrete functions, probes best possibility, and estimates
//! the norms of the associated integral operators.

pub mod constants;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod operators;
pub mod params;
pub mod quadrature;
pub mod sharpness;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
pub use params::{make_params, reference_grid, Delta, Params, Regime};
pub use quadrature::{QuadConfig, QuadResult, SingularitySpec};
