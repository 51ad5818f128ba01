//! Constructors for the standard members of the family. Index sets are
//! 0-based here; the JSON format uses 1-based indices.

use super::inner::{InnerNorm, LpExponent, OuterNorm};
use super::operator::{Block, BlockOperator};
use super::InterpolationNorm;
use crate::error::{Error, Result};
use crate::linalg::{matricize, svd_small, DenseMatrix, TensorShape};

/// Largest number of groups `k_support` will enumerate.
pub const K_SUPPORT_MAX_GROUPS: u128 = 1_000_000;

const LATENT_NUCLEAR_MAX_ELEMENTS: usize = 10_000;
const OVERLAPPED_NUCLEAR_MAX_ELEMENTS: usize = 100_000;

/// Latent group lasso: group selectors, ℓp inner norms, ℓ1 outer norm.
pub fn latent_group_lasso(d: usize, groups: &[Vec<usize>], p: LpExponent) -> Result<InterpolationNorm> {
    let blocks = groups.iter().cloned().map(Block::group).collect();
    let op = BlockOperator::new(d, blocks)?;
    let inner = vec![InnerNorm::Lp(p); groups.len()];
    InterpolationNorm::new(op, inner, OuterNorm::L1)
}

/// Contiguous windows of `length` indices overlapping by `overlap`.
///
/// Windows start every `length − overlap` indices. When the last regular
/// window stops short of `d`, it is shifted right to end at `d` if that keeps
/// the chain contiguous; otherwise one more window ending at `d` is appended.
/// All windows have the same length.
pub fn chain_groups(d: usize, length: usize, overlap: usize) -> Result<Vec<Vec<usize>>> {
    if !(1 <= overlap && overlap < length && length <= d) {
        return Err(Error::InvalidGroups(format!(
            "chain needs 1 <= overlap < length <= d, got overlap={overlap}, length={length}, d={d}"
        )));
    }
    let stride = length - overlap;
    let count = (d - length) / stride + 1;
    let mut starts: Vec<usize> = (0..count).map(|k| k * stride).collect();
    let last_start = d - length;
    let rem = last_start - starts[count - 1];
    if rem > 0 {
        if count >= 2 && rem <= overlap {
            starts[count - 1] = last_start;
        } else {
            starts.push(last_start);
        }
    }
    Ok(starts.into_iter().map(|s| (s..s + length).collect()).collect())
}

/// `C(d, k)` without overflow for the sizes we care about.
pub fn k_support_group_count(d: usize, k: usize) -> u128 {
    if k > d {
        return 0;
    }
    let k = k.min(d - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (d - i) as u128 / (i + 1) as u128;
    }
    c
}

/// The (k, p)-support norm: one group per subset of exactly `k` indices.
/// Smaller supports sit inside some size-`k` group, so this matches the
/// "cardinality at most k" definition.
pub fn k_support(d: usize, k: usize, p: LpExponent) -> Result<InterpolationNorm> {
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "k-support needs 1 <= k <= d, got k={k}, d={d}"
        )));
    }
    let count = k_support_group_count(d, k);
    if count > K_SUPPORT_MAX_GROUPS {
        return Err(Error::InvalidParameter(format!(
            "k-support with d={d}, k={k} has {count} groups (cap {K_SUPPORT_MAX_GROUPS}); \
             pass an explicit group list instead"
        )));
    }
    let mut groups = Vec::with_capacity(count as usize);
    let mut comb: Vec<usize> = (0..k).collect();
    loop {
        groups.push(comb.clone());
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return latent_group_lasso(d, &groups, p);
            }
            i -= 1;
            if comb[i] < d - k + i {
                comb[i] += 1;
                for t in i + 1..k {
                    comb[t] = comb[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Θ-norm for a polyhedral Θ given by its vertices: blocks `diag(√θ^{(j)})`,
/// ℓ2 inner norms, ℓ1 outer norm.
pub fn theta_norm(vertices: &[Vec<f64>]) -> Result<InterpolationNorm> {
    let d = vertices
        .first()
        .map(|v| v.len())
        .ok_or_else(|| Error::InvalidParameter("at least one vertex is required".into()))?;
    let blocks = vertices.iter().cloned().map(Block::diag_sqrt).collect();
    let op = BlockOperator::new(d, blocks)?;
    InterpolationNorm::new(
        op,
        vec![InnerNorm::Lp(LpExponent::Two); vertices.len()],
        OuterNorm::L1,
    )
}

/// Polyhedral norm whose unit ball is the convex hull of `atoms`, which must
/// span `R^d` and be closed under negation.
pub fn polyhedral(atoms: &[Vec<f64>]) -> Result<InterpolationNorm> {
    let d = atoms
        .first()
        .map(|v| v.len())
        .ok_or_else(|| Error::InvalidParameter("at least one atom is required".into()))?;
    for (j, a) in atoms.iter().enumerate() {
        if a.len() != d {
            return Err(Error::DimensionMismatch {
                context: "atom length",
                expected: d,
                got: a.len(),
            });
        }
        let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let has_negation = atoms
            .iter()
            .any(|b| a.iter().zip(b).all(|(x, y)| (x + y).abs() <= 1e-12 * scale));
        if !has_negation {
            return Err(Error::InvalidParameter(format!(
                "atom {} has no negated counterpart in the set",
                j + 1
            )));
        }
    }
    let blocks = atoms
        .iter()
        .map(|a| DenseMatrix::new(d, 1, a.clone()).map(Block::ExplicitMatrix))
        .collect::<Result<Vec<_>>>()?;
    let op = BlockOperator::new(d, blocks)?;
    InterpolationNorm::new(
        op,
        vec![InnerNorm::Lp(LpExponent::One); atoms.len()],
        OuterNorm::L1,
    )
}

/// Scaled latent nuclear norm `inf Σ_j ‖V_j‖_nuc / α_j` over `Σ_j M_jᵀ V_j = W`.
pub fn latent_nuclear(shape: &TensorShape, alphas: &[f64]) -> Result<InterpolationNorm> {
    if alphas.len() != shape.order() {
        return Err(Error::DimensionMismatch {
            context: "one scale per tensor mode",
            expected: shape.order(),
            got: alphas.len(),
        });
    }
    if shape.numel() > LATENT_NUCLEAR_MAX_ELEMENTS {
        return Err(Error::InvalidParameter(format!(
            "latent nuclear norm limited to {LATENT_NUCLEAR_MAX_ELEMENTS} elements, got {}",
            shape.numel()
        )));
    }
    let blocks = (0..shape.order())
        .map(|j| Block::mode_adjoint(shape.clone(), j))
        .collect::<Result<Vec<_>>>()?;
    let inner = alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| InnerNorm::ScaledNuclear {
            rows: shape.dims()[j],
            cols: shape.complement(j),
            alpha,
        })
        .collect();
    InterpolationNorm::new(BlockOperator::new(shape.numel(), blocks)?, inner, OuterNorm::L1)
}

/// Overlapped nuclear norm `Σ_j ‖M_j(W)‖_nuc`, evaluated directly.
#[derive(Debug, Clone)]
pub struct OverlappedNuclear {
    shape: TensorShape,
}

impl OverlappedNuclear {
    pub fn new(shape: TensorShape) -> Result<Self> {
        if shape.numel() > OVERLAPPED_NUCLEAR_MAX_ELEMENTS {
            return Err(Error::InvalidParameter(format!(
                "overlapped nuclear norm limited to {OVERLAPPED_NUCLEAR_MAX_ELEMENTS} elements"
            )));
        }
        Ok(Self { shape })
    }

    pub fn value(&self, tensor: &[f64]) -> Result<f64> {
        (0..self.shape.order())
            .map(|j| Ok(svd_small(&matricize(tensor, &self.shape, j)?)?.nuclear_norm()))
            .sum()
    }
}
