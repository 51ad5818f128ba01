//! Proximity operator of `v ↦ |||(f_1(v_1), …, f_m(v_m))|||`.
//!
//! For ℓ1 the prox separates over blocks. For ℓ∞ and ℓ2 the problem reduces
//! to choosing block radii `r_j` and projecting each block onto `{f_j ≤ r_j}`:
//!
//! `min_r γ|||r||| + Σ_j ½ dist²(x_j, r_j·ball_j)`,
//!
//! where `−d/dr ½ dist²(x_j, r·ball_j) = f_{j,*}(x_j − P_{r·ball_j} x_j)`.
//! The radii are then found by bisection.

use super::inner::{InnerNorm, Magnitudes, OuterNorm};
use super::operator::BlockOperator;

const BISECT_ITERS: usize = 100;

/// Replaces `x` by `prox_{γ |||F(·)|||}(x)`.
pub(crate) fn prox_composite(
    op: &BlockOperator,
    inner: &[InnerNorm],
    outer: OuterNorm,
    x: &mut [f64],
    gamma: f64,
) {
    match outer {
        OuterNorm::L1 => {
            for (j, f) in inner.iter().enumerate() {
                f.prox_in_place(&mut x[op.block_range(j)], gamma);
            }
        }
        OuterNorm::Linf => {
            let mut mags: Vec<Magnitudes> = inner
                .iter()
                .enumerate()
                .map(|(j, f)| Magnitudes::of(f, &x[op.block_range(j)]))
                .collect();
            let dual_sum: f64 = mags.iter().map(|m| m.dual()).sum();
            if dual_sum <= gamma {
                x.iter_mut().for_each(|v| *v = 0.0);
                return;
            }
            // Σ_j g_j(t) is nonincreasing in t; find Σ g_j(t) = γ
            let mut lo = 0.0;
            let mut hi = mags.iter().fold(0.0f64, |m, b| m.max(b.value()));
            for _ in 0..BISECT_ITERS {
                let mid = 0.5 * (lo + hi);
                let slope: f64 = mags.iter().map(|m| m.residual_dual(mid)).sum();
                if slope > gamma {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            for (j, m) in mags.iter_mut().enumerate() {
                m.values = m.project(t);
                m.write_back(&mut x[op.block_range(j)]);
            }
        }
        OuterNorm::L2 => {
            let mut mags: Vec<Magnitudes> = inner
                .iter()
                .enumerate()
                .map(|(j, f)| Magnitudes::of(f, &x[op.block_range(j)]))
                .collect();
            let dual_norm = mags.iter().map(|m| m.dual().powi(2)).sum::<f64>().sqrt();
            if dual_norm <= gamma {
                x.iter_mut().for_each(|v| *v = 0.0);
                return;
            }
            let values: Vec<f64> = mags.iter().map(|m| m.value()).collect();
            // radius of block j given the outer value ρ = ‖r‖₂:
            // g_j(r) = γ r / ρ, with g_j decreasing and the right side increasing
            let radius = |m: &Magnitudes, a: f64, rho: f64| {
                let (mut lo, mut hi) = (0.0, a);
                for _ in 0..BISECT_ITERS {
                    let mid = 0.5 * (lo + hi);
                    if m.residual_dual(mid) > gamma * mid / rho {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let total = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            let (mut lo, mut hi) = (0.0, total);
            for _ in 0..BISECT_ITERS {
                let rho = 0.5 * (lo + hi);
                if rho == 0.0 {
                    break;
                }
                let norm: f64 = mags
                    .iter()
                    .zip(&values)
                    .map(|(m, &a)| radius(m, a, rho).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if norm > rho {
                    lo = rho;
                } else {
                    hi = rho;
                }
            }
            let rho = 0.5 * (lo + hi);
            for (j, (m, &a)) in mags.iter_mut().zip(&values).enumerate() {
                let r = radius(m, a, rho);
                m.values = m.project(r);
                m.write_back(&mut x[op.block_range(j)]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use crate::norms::inner::LpExponent;
    use crate::norms::operator::Block;

    fn singletons(d: usize) -> BlockOperator {
        BlockOperator::new(d, (0..d).map(|i| Block::group(vec![i])).collect()).unwrap()
    }

    #[test]
    fn singleton_linf_outer_is_prox_of_linf() {
        let op = singletons(3);
        let inner = vec![InnerNorm::Lp(LpExponent::Two); 3];
        let mut x = vec![3.0, -1.0, 0.5];
        prox_composite(&op, &inner, OuterNorm::Linf, &mut x, 1.0);
        let direct = crate::prox::prox_linf_block(&[3.0, -1.0, 0.5], 1.0);
        for (a, b) in x.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12, "{x:?} vs {direct:?}");
        }
    }

    #[test]
    fn singleton_l2_outer_is_block_soft_threshold() {
        let op = singletons(3);
        let inner = vec![InnerNorm::Lp(LpExponent::One); 3];
        let mut x = vec![3.0, -4.0, 0.0];
        prox_composite(&op, &inner, OuterNorm::L2, &mut x, 1.0);
        let direct = crate::prox::prox_l2_block(&[3.0, -4.0, 0.0], 1.0);
        for (a, b) in x.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10, "{x:?} vs {direct:?}");
        }
    }

    #[test]
    fn small_input_goes_to_zero() {
        let op = singletons(2);
        let inner = vec![InnerNorm::Lp(LpExponent::Two); 2];
        for outer in [OuterNorm::L1, OuterNorm::L2, OuterNorm::Linf] {
            let mut x = vec![0.1, -0.1];
            prox_composite(&op, &inner, outer, &mut x, 1.0);
            assert!(norm2(&x) == 0.0);
        }
    }
}
