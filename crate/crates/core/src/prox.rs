//! Closed-form proximity operators, ball projections, and the projection onto
//! the graph of a block linear operator.
//!
//! `prox_{tφ}(x)` is the unique minimizer of `t φ(u) + ½‖u − x‖²`.

use crate::error::{Error, Result};
use crate::linalg::{norm2, spd_factor, svd_small, DenseMatrix, SpdFactor};

/// Block soft-thresholding, `prox` of `t‖·‖₂`.
pub fn prox_l2_block(x: &[f64], t: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    prox_l2_block_in_place(&mut out, t);
    out
}

pub fn prox_l2_block_in_place(x: &mut [f64], t: f64) {
    let nrm = norm2(x);
    if nrm <= t {
        x.iter_mut().for_each(|v| *v = 0.0);
    } else {
        let scale = 1.0 - t / nrm;
        x.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Componentwise soft-thresholding, `prox` of `t‖·‖₁`.
pub fn prox_l1(x: &[f64], t: f64) -> Vec<f64> {
    x.iter().map(|&v| soft_threshold(v, t)).collect()
}

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Euclidean projection onto `{u : ‖u‖₁ ≤ radius}` by sort-then-threshold.
pub fn project_l1_ball(x: &[f64], radius: f64) -> Vec<f64> {
    let theta = l1_ball_threshold(x, radius);
    if theta == 0.0 {
        return x.to_vec();
    }
    x.iter().map(|&v| soft_threshold(v, theta)).collect()
}

// Threshold θ ≥ 0 such that soft_threshold(x, θ) lies on the ℓ1 ball boundary,
// or 0 when x is already inside.
fn l1_ball_threshold(x: &[f64], radius: f64) -> f64 {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return 0.0;
    }
    if radius <= 0.0 {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in mags.iter().enumerate() {
        cumsum += u;
        let cand = (cumsum - radius) / (k + 1) as f64;
        if u - cand > 0.0 {
            theta = cand;
        } else {
            break;
        }
    }
    theta.max(0.0)
}

/// `prox` of `t‖·‖∞` via the Moreau decomposition.
pub fn prox_linf_block(x: &[f64], t: f64) -> Vec<f64> {
    let p = project_l1_ball(x, t);
    x.iter().zip(&p).map(|(a, b)| a - b).collect()
}

pub fn project_l2_ball(x: &[f64], radius: f64) -> Vec<f64> {
    let nrm = norm2(x);
    if nrm <= radius {
        x.to_vec()
    } else {
        let s = radius / nrm;
        x.iter().map(|v| v * s).collect()
    }
}

pub fn project_linf_ball(x: &[f64], radius: f64) -> Vec<f64> {
    x.iter().map(|v| v.clamp(-radius, radius)).collect()
}

/// `prox` of `t·max(0, 1 − βη)` for a label `β ∈ {−1, +1}`.
pub fn prox_hinge(eta: f64, beta: f64, t: f64) -> f64 {
    let margin = beta * eta;
    if margin + t < 1.0 {
        eta + t * beta
    } else if margin > 1.0 {
        eta
    } else {
        beta
    }
}

/// `prox` of `t·½(η − β)²`.
pub fn prox_square(eta: f64, beta: f64, t: f64) -> f64 {
    (eta + t * beta) / (1.0 + t)
}

/// `prox` of `(t/α)‖·‖_nuc`: singular values soft-thresholded by `t/α`.
pub fn prox_nuclear(x: &DenseMatrix, t: f64, alpha: f64) -> Result<DenseMatrix> {
    let svd = svd_small(x)?;
    let thr = t / alpha;
    let s: Vec<f64> = svd.s.iter().map(|&s| (s - thr).max(0.0)).collect();
    Ok(svd.reconstruct_with(&s))
}

/// The proximable pieces used by the splitting solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxDescriptor {
    L2Block,
    L1,
    LinfBlock,
    Hinge { label: f64 },
    Square { target: f64 },
    Nuclear { rows: usize, cols: usize, alpha: f64 },
}

impl ProxDescriptor {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProxDescriptor::Hinge { label } if *label != 1.0 && *label != -1.0 => Err(
                Error::InvalidParameter(format!("hinge label must be ±1, got {label}")),
            ),
            ProxDescriptor::Nuclear { alpha, .. } if !(*alpha > 0.0) => Err(Error::InvalidParameter(
                format!("nuclear scale must be positive, got {alpha}"),
            )),
            _ => Ok(()),
        }
    }

    /// Applies `prox_{scale·φ}` to `x` in place.
    pub fn apply(&self, x: &mut [f64], scale: f64) -> Result<()> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "prox scale must be positive, got {scale}"
            )));
        }
        match *self {
            ProxDescriptor::L2Block => prox_l2_block_in_place(x, scale),
            ProxDescriptor::L1 => x.iter_mut().for_each(|v| *v = soft_threshold(*v, scale)),
            ProxDescriptor::LinfBlock => {
                let out = prox_linf_block(x, scale);
                x.copy_from_slice(&out);
            }
            ProxDescriptor::Hinge { label } => x.iter_mut().for_each(|v| *v = prox_hinge(*v, label, scale)),
            ProxDescriptor::Square { target } => {
                x.iter_mut().for_each(|v| *v = prox_square(*v, target, scale))
            }
            ProxDescriptor::Nuclear { rows, cols, alpha } => {
                let m = DenseMatrix::new(rows, cols, x.to_vec())?;
                let out = prox_nuclear(&m, scale, alpha)?;
                x.copy_from_slice(out.data());
            }
        }
        Ok(())
    }
}

/// Projection onto the graph `{(v, s) : L v = s}` of `L = [L_1 ⋯ L_m]`,
/// using `R_j = L_jᵀ (Id + L Lᵀ)⁻¹`.
pub fn project_graph(
    x: &[f64],
    y: &[f64],
    l_blocks: &[DenseMatrix],
    r_blocks: &[DenseMatrix],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if r_blocks.len() != l_blocks.len() {
        return Err(Error::InvalidParameter(format!(
            "graph projection needs one precomputed R block per L block ({} vs {})",
            r_blocks.len(),
            l_blocks.len()
        )));
    }
    let n = y.len();
    let total: usize = l_blocks.iter().map(|l| l.cols()).sum();
    if x.len() != total {
        return Err(Error::DimensionMismatch {
            context: "graph projection block vector",
            expected: total,
            got: x.len(),
        });
    }
    for (l, r) in l_blocks.iter().zip(r_blocks) {
        if l.rows() != n || r.rows() != l.cols() || r.cols() != n {
            return Err(Error::DimensionMismatch {
                context: "graph projection block shape",
                expected: n,
                got: l.rows(),
            });
        }
    }
    // residual Lx − y
    let mut resid: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut off = 0;
    for l in l_blocks {
        l.matvec_add(&x[off..off + l.cols()], &mut resid);
        off += l.cols();
    }
    let mut v = x.to_vec();
    let mut s = vec![0.0; n];
    let mut off = 0;
    for (l, r) in l_blocks.iter().zip(r_blocks) {
        let p = l.cols();
        let corr = r.matvec(&resid)?;
        let vj = &mut v[off..off + p];
        vj.iter_mut().zip(&corr).for_each(|(a, c)| *a -= c);
        l.matvec_add(vj, &mut s);
        off += p;
    }
    Ok((v, s))
}

/// Computes `R_j = L_jᵀ (Id + Σ L_i L_iᵀ)⁻¹` for every block.
pub fn graph_r_blocks(l_blocks: &[DenseMatrix], n: usize) -> Result<Vec<DenseMatrix>> {
    let factor = graph_factor(l_blocks, n)?;
    Ok(graph_r_blocks_with(&factor, l_blocks))
}

/// Cholesky factor of `Id + Σ_j L_j L_jᵀ`.
pub fn graph_factor(l_blocks: &[DenseMatrix], n: usize) -> Result<SpdFactor> {
    let mut m = DenseMatrix::identity(n);
    for l in l_blocks {
        if l.rows() != n {
            return Err(Error::DimensionMismatch {
                context: "L block rows",
                expected: n,
                got: l.rows(),
            });
        }
        m.add_assign(&l.gram_rows())?;
    }
    spd_factor(&m)
}

/// `R_j` from an existing factor of `Id + Σ_j L_j L_jᵀ`.
pub fn graph_r_blocks_with(factor: &SpdFactor, l_blocks: &[DenseMatrix]) -> Vec<DenseMatrix> {
    let n = factor.dim();
    l_blocks
        .iter()
        .map(|l| {
            // R_jᵀ = M⁻¹ L_j, solved column by column
            let p = l.cols();
            let mut r = DenseMatrix::zeros(p, n);
            for c in 0..p {
                let mut col = l.column(c);
                factor.solve_in_place(&mut col);
                for (i, v) in col.into_iter().enumerate() {
                    r.set(c, i, v);
                }
            }
            r
        })
        .collect()
}
