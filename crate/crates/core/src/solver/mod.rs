//! Regularized empirical risk minimization
//!
//! `min_w Σ_i ψ_i(⟨a_i, w⟩) + λ‖w‖`
//!
//! for an interpolation norm with ℓ1 outer norm, solved over the
//! decomposition `w = Σ_j B_j v_j` by Douglas–Rachford splitting (all blocks
//! or a random subset per iteration), with FISTA and forward–backward
//! baselines for the square loss.

mod dr;
mod gradient;
mod trace;

pub use dr::{dr_full, dr_random_block, precompute, DrSolver, DrState, Precomputed};
pub use gradient::{fista, forward_backward, GradientConfig, PartitionProx};
pub(crate) use trace::format_real;
pub use trace::{RunTrace, TraceRecord, TRACE_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::norms::{InterpolationNorm, OuterNorm};
use crate::prox::{prox_hinge, prox_square};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// `max(0, 1 − βη)` with labels `β ∈ {−1, +1}`.
    Hinge,
    /// `½(η − β)²`.
    Square,
}

impl Loss {
    pub fn value(self, eta: f64, beta: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - beta * eta).max(0.0),
            Loss::Square => 0.5 * (eta - beta) * (eta - beta),
        }
    }

    pub fn prox(self, eta: f64, beta: f64, t: f64) -> f64 {
        match self {
            Loss::Hinge => prox_hinge(eta, beta, t),
            Loss::Square => prox_square(eta, beta, t),
        }
    }
}

/// Data, loss, and regularizer of one problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    a: DenseMatrix,
    targets: Vec<f64>,
    loss: Loss,
    lambda: f64,
    norm: InterpolationNorm,
}

impl ProblemSpec {
    pub fn new(
        a: DenseMatrix,
        targets: Vec<f64>,
        loss: Loss,
        lambda: f64,
        norm: InterpolationNorm,
    ) -> Result<Self> {
        if targets.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                context: "targets vs data rows",
                expected: a.rows(),
                got: targets.len(),
            });
        }
        if a.cols() != norm.dim() {
            return Err(Error::DimensionMismatch {
                context: "data columns vs norm dimension",
                expected: norm.dim(),
                got: a.cols(),
            });
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("targets"));
        }
        if loss == Loss::Hinge {
            if let Some(bad) = targets.iter().find(|&&t| t != 1.0 && t != -1.0) {
                return Err(Error::InvalidParameter(format!(
                    "hinge labels must be -1 or +1, found {bad}"
                )));
            }
        }
        if norm.outer() != OuterNorm::L1 {
            return Err(Error::Unsupported("solvers require an l1 outer norm".to_string()));
        }
        Ok(Self {
            a,
            targets,
            loss,
            lambda,
            norm,
        })
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn norm(&self) -> &InterpolationNorm {
        &self.norm
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }

    /// `Σ_i ψ_i(η_i)` for predictions `η`.
    pub fn loss_sum(&self, eta: &[f64]) -> f64 {
        eta.iter()
            .zip(&self.targets)
            .map(|(&e, &b)| self.loss.value(e, b))
            .sum()
    }

    /// `Σ_i ψ_i(⟨a_i, w⟩) + λ‖w‖`, with the norm evaluated numerically.
    pub fn objective(&self, w: &[f64]) -> Result<f64> {
        let eta = self.a.matvec(w)?;
        Ok(self.loss_sum(&eta) + self.lambda * self.norm.norm(w)?)
    }

    /// `Σ_i ψ_i(⟨a_i, Bv⟩) + λ Σ_j f_j(v_j)` for a concatenated decomposition.
    pub fn objective_split(&self, v: &[f64]) -> Result<f64> {
        let w = self.norm.operator().apply(v)?;
        let eta = self.a.matvec(&w)?;
        Ok(self.loss_sum(&eta) + self.lambda * self.norm.decomposition_value(v)?)
    }

    /// Fraction of samples with `β_i ⟨a_i, w⟩ ≤ 0`.
    pub fn training_error(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.d() {
            return Err(Error::DimensionMismatch {
                context: "weight vector",
                expected: self.d(),
                got: w.len(),
            });
        }
        let n = self.n();
        let wrong = (0..n)
            .filter(|&i| self.targets[i] * dot(self.a.row(i), w) <= 0.0)
            .count();
        Ok(wrong as f64 / n.max(1) as f64)
    }
}

/// Which loss coordinates `η_i` are updated per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossActivation {
    #[default]
    AlwaysActive,
    /// Each coordinate independently with probability α.
    Sampled,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-5
}

fn default_max_iter() -> usize {
    100_000
}

/// Douglas–Rachford settings. `gamma` and `mu` have no defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrConfig {
    pub gamma: f64,
    /// Relaxation, constant over iterations.
    pub mu: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Relative change of `(v, y)` over one sweep of the blocks at which a
    /// run stops.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub loss_activation: LossActivation,
}

impl DrConfig {
    pub fn new(gamma: f64, mu: f64) -> Self {
        Self {
            gamma,
            mu,
            alpha: default_alpha(),
            seed: 0,
            tol: default_tol(),
            max_iter: default_max_iter(),
            loss_activation: LossActivation::AlwaysActive,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.mu > 0.0 && self.mu < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "mu must lie in (0, 2), got {}",
                self.mu
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be nonnegative, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// Extra per-run instrumentation.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Reference solution for the `dist_ref` trace column.
    pub reference: Option<Vec<f64>>,
    /// Record every this many iterations (0 or 1: every iteration). The last
    /// iteration is always recorded.
    pub record_every: usize,
}

impl RunOptions {
    pub fn with_reference(reference: Vec<f64>) -> Self {
        Self {
            reference: Some(reference),
            record_every: 1,
        }
    }

    fn records(&self, iter: usize) -> bool {
        self.record_every <= 1 || iter % self.record_every == 0
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub w: Vec<f64>,
    /// Concatenated decomposition `(v_1, …, v_m)`; `None` for the gradient
    /// baselines, which work on `w` directly.
    pub v: Option<Vec<f64>>,
    pub trace: RunTrace,
    pub converged: bool,
    pub iterations: usize,
    /// Final objective as recorded in the trace.
    pub objective: f64,
}
