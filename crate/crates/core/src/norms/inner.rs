use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{norm2, svd_small, DenseMatrix, SvdResult};
use crate::prox::{self, ProxDescriptor};

/// Exponent of an ℓp inner norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpExponent {
    One,
    Two,
    Inf,
}

impl LpExponent {
    pub fn conjugate(self) -> Self {
        match self {
            LpExponent::One => LpExponent::Inf,
            LpExponent::Two => LpExponent::Two,
            LpExponent::Inf => LpExponent::One,
        }
    }

    pub fn from_f64(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(LpExponent::One)
        } else if p == 2.0 {
            Ok(LpExponent::Two)
        } else if p.is_infinite() && p > 0.0 {
            Ok(LpExponent::Inf)
        } else {
            Err(Error::Unsupported(format!(
                "inner exponent p = {p}; only 1, 2 and infinity are supported"
            )))
        }
    }

    pub fn norm(self, x: &[f64]) -> f64 {
        match self {
            LpExponent::One => x.iter().map(|v| v.abs()).sum(),
            LpExponent::Two => norm2(x),
            LpExponent::Inf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

impl fmt::Display for LpExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpExponent::One => write!(f, "1"),
            LpExponent::Two => write!(f, "2"),
            LpExponent::Inf => write!(f, "inf"),
        }
    }
}

/// The norm `f_j` applied to one block of the decomposition.
#[derive(Debug, Clone, PartialEq)]
pub enum InnerNorm {
    Lp(LpExponent),
    /// Nuclear norm of a `rows × cols` block stored row-major.
    Nuclear {
        rows: usize,
        cols: usize,
    },
    /// `‖·‖_nuc / alpha`.
    ScaledNuclear {
        rows: usize,
        cols: usize,
        alpha: f64,
    },
}

impl InnerNorm {
    pub fn validate(&self, block_dim: usize) -> Result<()> {
        match *self {
            InnerNorm::Lp(_) => Ok(()),
            InnerNorm::Nuclear { rows, cols } | InnerNorm::ScaledNuclear { rows, cols, .. }
                if rows * cols != block_dim =>
            {
                Err(Error::DimensionMismatch {
                    context: "nuclear block size",
                    expected: rows * cols,
                    got: block_dim,
                })
            }
            InnerNorm::ScaledNuclear { alpha, .. } if !(alpha > 0.0 && alpha.is_finite()) => Err(
                Error::InvalidParameter(format!("nuclear scale must be positive, got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            InnerNorm::Lp(p) => p.norm(x),
            _ => Magnitudes::of(self, x).value(),
        }
    }

    /// The dual norm `f_{j,*}`.
    pub fn dual(&self, x: &[f64]) -> f64 {
        match *self {
            InnerNorm::Lp(p) => p.conjugate().norm(x),
            _ => Magnitudes::of(self, x).dual(),
        }
    }

    /// Replaces `x` by `prox_{t f}(x)`.
    pub fn prox_in_place(&self, x: &mut [f64], t: f64) {
        match *self {
            InnerNorm::Lp(LpExponent::Two) => prox::prox_l2_block_in_place(x, t),
            InnerNorm::Lp(LpExponent::One) => x.iter_mut().for_each(|v| *v = prox::soft_threshold(*v, t)),
            InnerNorm::Lp(LpExponent::Inf) => {
                let out = prox::prox_linf_block(x, t);
                x.copy_from_slice(&out);
            }
            _ => {
                let mut mags = Magnitudes::of(self, x);
                let thr = t / mags.scale;
                mags.values.iter_mut().for_each(|s| *s = (*s - thr).max(0.0));
                mags.write_back(x);
            }
        }
    }

    pub fn prox_descriptor(&self) -> ProxDescriptor {
        match *self {
            InnerNorm::Lp(LpExponent::One) => ProxDescriptor::L1,
            InnerNorm::Lp(LpExponent::Two) => ProxDescriptor::L2Block,
            InnerNorm::Lp(LpExponent::Inf) => ProxDescriptor::LinfBlock,
            InnerNorm::Nuclear { rows, cols } => ProxDescriptor::Nuclear {
                rows,
                cols,
                alpha: 1.0,
            },
            InnerNorm::ScaledNuclear { rows, cols, alpha } => ProxDescriptor::Nuclear { rows, cols, alpha },
        }
    }
}

/// Outer monotone norm `|||·|||` on the vector of block norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterNorm {
    L1,
    L2,
    Linf,
}

impl OuterNorm {
    pub fn dual_tag(self) -> OuterNorm {
        match self {
            OuterNorm::L1 => OuterNorm::Linf,
            OuterNorm::L2 => OuterNorm::L2,
            OuterNorm::Linf => OuterNorm::L1,
        }
    }

    fn exponent(self) -> LpExponent {
        match self {
            OuterNorm::L1 => LpExponent::One,
            OuterNorm::L2 => LpExponent::Two,
            OuterNorm::Linf => LpExponent::Inf,
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        self.exponent().norm(x)
    }

    pub fn dual(self, x: &[f64]) -> f64 {
        self.dual_tag().value(x)
    }
}

/// A block seen through its unitarily invariant "magnitudes": absolute values
/// for ℓp norms, singular values for nuclear norms. Every inner norm is a
/// gauge of these magnitudes, which makes ball projections and dual residuals
/// one-dimensional problems.
pub(crate) struct Magnitudes {
    pub values: Vec<f64>,
    // ℓp norm applied to `values`
    kind: LpExponent,
    // f(x) = kind(values) / scale
    pub scale: f64,
    basis: Basis,
}

enum Basis {
    Signs(Vec<f64>),
    Svd(SvdResult),
}

impl Magnitudes {
    pub fn of(norm: &InnerNorm, x: &[f64]) -> Self {
        match *norm {
            InnerNorm::Lp(p) => Magnitudes {
                values: x.iter().map(|v| v.abs()).collect(),
                kind: p,
                scale: 1.0,
                basis: Basis::Signs(x.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect()),
            },
            InnerNorm::Nuclear { rows, cols } => Self::spectral(x, rows, cols, 1.0),
            InnerNorm::ScaledNuclear { rows, cols, alpha } => Self::spectral(x, rows, cols, alpha),
        }
    }

    fn spectral(x: &[f64], rows: usize, cols: usize, alpha: f64) -> Self {
        let m = DenseMatrix::from_fn(rows, cols, |i, j| x[i * cols + j]);
        let svd = svd_small(&m).expect("finite block entries");
        Magnitudes {
            values: svd.s.clone(),
            kind: LpExponent::One,
            scale: alpha,
            basis: Basis::Svd(svd),
        }
    }

    pub fn value(&self) -> f64 {
        self.kind.norm(&self.values) / self.scale
    }

    pub fn dual(&self) -> f64 {
        self.kind.conjugate().norm(&self.values) * self.scale
    }

    /// Magnitudes of the projection onto `{f ≤ radius}`.
    pub fn project(&self, radius: f64) -> Vec<f64> {
        let r = radius * self.scale;
        match self.kind {
            LpExponent::One => prox::project_l1_ball(&self.values, r),
            LpExponent::Two => prox::project_l2_ball(&self.values, r),
            LpExponent::Inf => prox::project_linf_ball(&self.values, r),
        }
    }

    /// `f_*(x − P_{radius·ball}(x))`, the slope of `½ dist²(x, radius·ball)`
    /// with respect to `radius` (up to sign).
    pub fn residual_dual(&self, radius: f64) -> f64 {
        let p = self.project(radius);
        let resid: Vec<f64> = self.values.iter().zip(&p).map(|(a, b)| a - b).collect();
        self.kind.conjugate().norm(&resid) * self.scale
    }

    /// Writes the block with magnitudes `self.values` back into `out`.
    pub fn write_back(&self, out: &mut [f64]) {
        match &self.basis {
            Basis::Signs(signs) => {
                for ((o, m), s) in out.iter_mut().zip(&self.values).zip(signs) {
                    *o = m * s;
                }
            }
            Basis::Svd(svd) => out.copy_from_slice(svd.reconstruct_with(&self.values).data()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_dual_pairs() {
        assert_eq!(OuterNorm::L1.dual_tag(), OuterNorm::Linf);
        assert_eq!(OuterNorm::L2.dual_tag(), OuterNorm::L2);
        assert_eq!(OuterNorm::Linf.dual_tag(), OuterNorm::L1);
    }

    #[test]
    fn outer_monotone_on_positive_orthant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for tag in [OuterNorm::L1, OuterNorm::L2, OuterNorm::Linf] {
            for _ in 0..200 {
                let x: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
                let y: Vec<f64> = x.iter().map(|v| v + rng.random_range(0.0..1.0)).collect();
                assert!(tag.value(&x) <= tag.value(&y));
            }
        }
    }

    #[test]
    fn nuclear_value_and_dual() {
        let x = [3.0, 0.0, 0.0, 1.0];
        let n = InnerNorm::Nuclear { rows: 2, cols: 2 };
        assert!((n.value(&x) - 4.0).abs() < 1e-12);
        assert!((n.dual(&x) - 3.0).abs() < 1e-12);
        let s = InnerNorm::ScaledNuclear {
            rows: 2,
            cols: 2,
            alpha: 2.0,
        };
        assert!((s.value(&x) - 2.0).abs() < 1e-12);
        assert!((s.dual(&x) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn magnitude_projection_matches_direct() {
        let x = [3.0, -1.0, 0.5];
        for p in [LpExponent::One, LpExponent::Two, LpExponent::Inf] {
            let n = InnerNorm::Lp(p);
            let mut mags = Magnitudes::of(&n, &x);
            mags.values = mags.project(1.0);
            let mut out = [0.0; 3];
            mags.write_back(&mut out);
            assert!(n.value(&out) <= 1.0 + 1e-12);
            let direct = match p {
                LpExponent::One => prox::project_l1_ball(&x, 1.0),
                LpExponent::Two => prox::project_l2_ball(&x, 1.0),
                LpExponent::Inf => prox::project_linf_ball(&x, 1.0),
            };
            for (a, b) in out.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(InnerNorm::Nuclear { rows: 2, cols: 3 }.validate(5).is_err());
        assert!(InnerNorm::ScaledNuclear {
            rows: 1,
            cols: 1,
            alpha: -1.0
        }
        .validate(1)
        .is_err());
        assert!(LpExponent::from_f64(3.0).is_err());
        assert_eq!(LpExponent::from_f64(f64::INFINITY).unwrap(), LpExponent::Inf);
    }
}
