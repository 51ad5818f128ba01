use super::matrix::{dot, norm2, DenseMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const ROTATION_TOL: f64 = 1e-15;

/// Thin singular value decomposition `M = U diag(s) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub s: Vec<f64>,
    /// `cols × k` with orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.s)
    }

    /// `U diag(sigma) Vᵀ` for replacement singular values.
    pub fn reconstruct_with(&self, sigma: &[f64]) -> DenseMatrix {
        let (m, n, k) = (self.u.rows(), self.v.rows(), sigma.len());
        let mut out = DenseMatrix::zeros(m, n);
        for r in 0..k {
            let sr = sigma[r];
            if sr == 0.0 {
                continue;
            }
            for i in 0..m {
                let a = sr * self.u.get(i, r);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + a * self.v.get(j, r));
                }
            }
        }
        out
    }

    pub fn spectral_norm(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.s.iter().sum()
    }
}

/// One-sided (Hestenes) Jacobi SVD with cyclic sweeps.
pub fn svd_small(m: &DenseMatrix) -> Result<SvdResult> {
    if m.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svd input"));
    }
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose());
        return Ok(SvdResult {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    Ok(svd_tall(m))
}

// rows >= cols
fn svd_tall(m: &DenseMatrix) -> SvdResult {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || gamma.abs() <= ROTATION_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = a.iter().enumerate().map(|(j, c)| (norm2(c), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let smax = order.first().map_or(0.0, |o| o.0);
    let null_tol = (rows.max(1) as f64) * f64::EPSILON * smax;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut pending = Vec::new();
    let mut s = Vec::with_capacity(cols);
    let mut v_sorted = Vec::with_capacity(cols);
    for (slot, &(sigma, j)) in order.iter().enumerate() {
        s.push(sigma);
        v_sorted.push(v[j].clone());
        if sigma > null_tol && sigma > 0.0 {
            u_cols.push(a[j].iter().map(|x| x / sigma).collect());
        } else {
            u_cols.push(vec![0.0; rows]);
            pending.push(slot);
        }
    }
    complete_orthonormal(&mut u_cols, &pending, rows);

    let u = DenseMatrix::from_fn(rows, cols, |i, k| u_cols[k][i]);
    let vm = DenseMatrix::from_fn(cols, cols, |i, k| v_sorted[k][i]);
    SvdResult { u, s, v: vm }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

// Fills the columns listed in `pending` with unit vectors orthogonal to every
// other column, drawing candidates from the standard basis.
fn complete_orthonormal(cols: &mut [Vec<f64>], pending: &[usize], dim: usize) {
    let mut next_basis = 0;
    for &slot in pending {
        while next_basis < dim {
            let mut cand = vec![0.0; dim];
            cand[next_basis] = 1.0;
            next_basis += 1;
            for _ in 0..2 {
                for (k, c) in cols.iter().enumerate() {
                    if k == slot || c.iter().all(|x| *x == 0.0) {
                        continue;
                    }
                    let proj = dot(c, &cand);
                    cand.iter_mut().zip(c).for_each(|(x, ci)| *x -= proj * ci);
                }
            }
            let nrm = norm2(&cand);
            if nrm > 1e-8 {
                cand.iter_mut().for_each(|x| *x /= nrm);
                cols[slot] = cand;
                break;
            }
        }
    }
}
