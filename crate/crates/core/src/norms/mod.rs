//! Norms defined by optimal interpolation,
//!
//! `‖w‖ = min { |||(f_1(v_1), …, f_m(v_m))||| : Σ_j B_j v_j = w }`,
//!
//! with closed-form dual norms and a numerical primal evaluator.

mod axioms;
mod catalogue;
mod composite;
mod inner;
mod operator;

pub use axioms::{norm_axiom_check, AxiomReport};
pub use catalogue::{
    chain_groups, k_support, k_support_group_count, latent_group_lasso, latent_nuclear, polyhedral,
    theta_norm, OverlappedNuclear, K_SUPPORT_MAX_GROUPS,
};
pub use inner::{InnerNorm, LpExponent, OuterNorm};
pub use operator::{Block, BlockOperator, RANK_TOL};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2};

/// An interpolation norm: block operator, one inner norm per block, and an
/// outer monotone norm.
#[derive(Debug, Clone)]
pub struct InterpolationNorm {
    op: BlockOperator,
    inner: Vec<InnerNorm>,
    outer: OuterNorm,
}

/// Settings for the interpolation solve behind [`InterpolationNorm::primal_eval`].
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalOptions {
    pub gamma: f64,
    pub relaxation: f64,
    /// Stop when the relative change of the governing iterate drops below this.
    pub change_tol: f64,
    /// Required `‖Bv − w‖₂ / (1 + ‖w‖₂)` of the returned decomposition.
    pub feas_tol: f64,
    /// Stop early once the relative duality gap drops below this.
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            relaxation: 1.5,
            change_tol: 1e-7,
            feas_tol: 1e-8,
            gap_tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    pub value: f64,
    /// Concatenated minimizer `v = (v_1, …, v_m)`.
    pub decomposition: Vec<f64>,
    /// Certified lower bound from the dual iterate.
    pub lower_bound: f64,
    pub feasibility: f64,
    pub iterations: usize,
}

const CHECK_EVERY: usize = 10;

impl InterpolationNorm {
    pub fn new(op: BlockOperator, inner: Vec<InnerNorm>, outer: OuterNorm) -> Result<Self> {
        if inner.len() != op.num_blocks() {
            return Err(Error::DimensionMismatch {
                context: "one inner norm per block",
                expected: op.num_blocks(),
                got: inner.len(),
            });
        }
        for (j, f) in inner.iter().enumerate() {
            f.validate(op.block_dim(j))?;
        }
        Ok(Self { op, inner, outer })
    }

    pub fn operator(&self) -> &BlockOperator {
        &self.op
    }

    pub fn inner(&self) -> &[InnerNorm] {
        &self.inner
    }

    pub fn outer(&self) -> OuterNorm {
        self.outer
    }

    pub fn dim(&self) -> usize {
        self.op.ambient_dim()
    }

    pub fn num_blocks(&self) -> usize {
        self.op.num_blocks()
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "vector length vs norm dimension",
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `(f_{1,*}(B_1ᵀu), …, f_{m,*}(B_mᵀu))`.
    pub fn block_duals(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let mut buf = Vec::new();
        Ok((0..self.num_blocks())
            .map(|j| {
                buf.resize(self.op.block_dim(j), 0.0);
                self.op.adjoint_block_into(j, u, &mut buf);
                self.inner[j].dual(&buf)
            })
            .collect())
    }

    /// Dual norm `|||(f_{j,*}(B_jᵀ u))_j|||_*`.
    pub fn dual_eval(&self, u: &[f64]) -> Result<f64> {
        Ok(self.outer.dual(&self.block_duals(u)?))
    }

    /// `|||F(v)|||` for a concatenated decomposition `v`.
    pub fn decomposition_value(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.op.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "decomposition length",
                expected: self.op.total_dim(),
                got: v.len(),
            });
        }
        let parts: Vec<f64> = (0..self.num_blocks())
            .map(|j| self.inner[j].value(&v[self.op.block_range(j)]))
            .collect();
        Ok(self.outer.value(&parts))
    }

    /// Replaces `x` by `prox_{γ|||F(·)|||}(x)`.
    pub fn prox_decomposition(&self, x: &mut [f64], gamma: f64) {
        composite::prox_composite(&self.op, &self.inner, self.outer, x, gamma);
    }

    /// Euclidean projection onto `{v : B v = w}`; returns the multiplier
    /// `λ = (B Bᵀ)⁻¹ (B v − w)` so that `v_in − v_out = Bᵀ λ`.
    fn project_affine(&self, v: &mut [f64], w: &[f64]) -> Vec<f64> {
        let mut lambda = self.op.apply(v).expect("length checked");
        axpy(-1.0, w, &mut lambda);
        self.op.gram_solve_in_place(&mut lambda);
        let correction = self.op.adjoint(&lambda).expect("length checked");
        axpy(-1.0, &correction, v);
        lambda
    }

    /// Evaluates the norm by Douglas–Rachford on `|||F(v)|||` plus the
    /// indicator of `{v : Bv = w}`.
    pub fn primal_eval(&self, w: &[f64], opts: &PrimalOptions) -> Result<PrimalSolution> {
        self.check_len(w)?;
        if !(opts.gamma > 0.0) || !(opts.relaxation > 0.0 && opts.relaxation < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "need gamma > 0 and relaxation in (0, 2), got {} and {}",
                opts.gamma, opts.relaxation
            )));
        }
        let n_total = self.op.total_dim();
        let scale = norm2(w);
        if scale == 0.0 {
            return Ok(PrimalSolution {
                value: 0.0,
                decomposition: vec![0.0; n_total],
                lower_bound: 0.0,
                feasibility: 0.0,
                iterations: 0,
            });
        }
        // the solve runs on w/‖w‖ so that γ is scale-free
        let target: Vec<f64> = w.iter().map(|v| v / scale).collect();

        let mut y = vec![0.0; n_total];
        self.project_affine(&mut y, &target);
        let mut x = vec![0.0; n_total];
        let mut z = vec![0.0; n_total];
        let mut lower = 0.0f64;
        let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

        for iter in 1..=opts.max_iter {
            x.copy_from_slice(&y);
            let lambda = self.project_affine(&mut x, &target);
            for ((zi, xi), yi) in z.iter_mut().zip(&x).zip(&y) {
                *zi = 2.0 * xi - yi;
            }
            self.prox_decomposition(&mut z, opts.gamma);
            let mut diff2 = 0.0;
            for ((yi, zi), xi) in y.iter_mut().zip(&z).zip(&x) {
                let step = opts.relaxation * (zi - xi);
                *yi += step;
                diff2 += step * step;
            }
            let change = diff2.sqrt() / norm2(&y).max(f64::MIN_POSITIVE);

            if iter % CHECK_EVERY == 0 || change <= opts.change_tol || iter == opts.max_iter {
                let value = self.decomposition_value(&x)?;
                // y − x = Bᵀλ, and at a fixed point −λ/γ certifies optimality
                let u: Vec<f64> = lambda.iter().map(|l| -l).collect();
                let du = self.dual_eval(&u)?;
                if du > 0.0 {
                    lower = lower.max(dot(&target, &u) / du);
                }
                let mut resid = self.op.apply(&x)?;
                axpy(-1.0, &target, &mut resid);
                let feas = norm2(&resid);
                last = (value, feas, change);
                let feasible = feas * scale <= opts.feas_tol * (1.0 + scale);
                let gap_ok = value - lower <= opts.gap_tol * value.max(f64::MIN_POSITIVE);
                if feasible && (gap_ok || change <= opts.change_tol) {
                    return Ok(PrimalSolution {
                        value: value * scale,
                        decomposition: x.iter().map(|v| v * scale).collect(),
                        lower_bound: lower.min(value) * scale,
                        feasibility: feas * scale,
                        iterations: iter,
                    });
                }
            }
        }
        Err(Error::NotConverged {
            iterations: opts.max_iter,
            value: last.0 * scale,
            feasibility: last.1 * scale,
            change: last.2,
            best: x.iter().map(|v| v * scale).collect(),
        })
    }

    /// [`primal_eval`](Self::primal_eval) with default options, value only.
    pub fn norm(&self, w: &[f64]) -> Result<f64> {
        Ok(self.primal_eval(w, &PrimalOptions::default())?.value)
    }
}
