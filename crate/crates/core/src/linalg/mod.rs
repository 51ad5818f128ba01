//! Dense kernels: products, Cholesky, a small Jacobi SVD, and tensor
//! matricization.

mod cholesky;
mod matrix;
mod svd;
mod tensor;

pub use cholesky::{spd_factor, SpdFactor};
pub use matrix::{axpy, dist2, dot, norm2, DenseMatrix};
pub use svd::{svd_small, SvdResult};
pub use tensor::{dematricize, matricize, ModePermutation, TensorShape};

/// Largest eigenvalue of `MᵀM` by power iteration, i.e. `‖M‖²_sp`.
pub fn spectral_norm_sq(m: &DenseMatrix, iters: usize, tol: f64) -> f64 {
    let n = m.cols();
    if n == 0 || m.rows() == 0 {
        return 0.0;
    }
    // deterministic, non-degenerate start
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + (i as f64 * 0.618_033_988_75).fract())
        .collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut est = 0.0;
    for _ in 0..iters {
        let y = m.matvec(&x).expect("dimensions fixed");
        let z = m.tr_matvec(&y).expect("dimensions fixed");
        let nz = norm2(&z);
        if nz == 0.0 {
            return 0.0;
        }
        let next = nz;
        x = z.into_iter().map(|v| v / nz).collect();
        if (next - est).abs() <= tol * next {
            return next;
        }
        est = next;
    }
    est
}
