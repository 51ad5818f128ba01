use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `M = G Gᵀ`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    n: usize,
    // row-major lower triangle, full n×n storage
    lower: Vec<f64>,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> DenseMatrix {
        DenseMatrix::new(self.n, self.n, self.lower.clone()).expect("finite factor")
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "spd solve right-hand side",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let g = &self.lower;
        // forward: G y = b
        for i in 0..n {
            let row = &g[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / g[i * n + i];
        }
        // backward: Gᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= g[k * n + i] * x[k];
            }
            x[i] = s / g[i * n + i];
        }
    }
}

/// Factors a symmetric positive definite matrix.
pub fn spd_factor(m: &DenseMatrix) -> Result<SpdFactor> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "spd_factor expects a square matrix",
            expected: n,
            got: m.cols(),
        });
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (m.get(i, j) - m.get(j, i)).abs() > 1e-12 * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    let mut g = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= g[j * n + k] * g[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        g[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= g[i * n + k] * g[j * n + k];
            }
            g[i * n + j] = s / djj;
        }
    }
    Ok(SpdFactor { n, lower: g })
}
