//! Structured-sparsity norms built by optimal interpolation over block linear
//! operators, with closed-form duals, proximity operators, and full and
//! random block-coordinate Douglas–Rachford solvers.

pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod prox;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, TensorShape};
pub use norms::{InnerNorm, InterpolationNorm, LpExponent, OuterNorm, PrimalOptions};
pub use solver::{DrConfig, Loss, LossActivation, ProblemSpec, RunTrace, SolveResult};
