//! Tensors are stored as flat vectors with the first index varying fastest.
//! The mode-`j` matricization is the `d_j × q_j` matrix whose columns are the
//! mode-`j` fibers, enumerated with the remaining indices varying fastest-first
//! in ascending mode order. Modes are 0-based in this API.

use serde::{Deserialize, Serialize};

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TensorShape {
    dims: Vec<usize>,
}

impl TryFrom<Vec<usize>> for TensorShape {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<TensorShape> for Vec<usize> {
    fn from(s: TensorShape) -> Self {
        s.dims
    }
}

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("a tensor needs at least one mode".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidShape(format!("zero-length mode in {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn numel(&self) -> usize {
        self.dims.iter().product()
    }

    /// `q_j`: product of all dimensions except mode `j`.
    pub fn complement(&self, mode: usize) -> usize {
        self.numel() / self.dims[mode]
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    // For every flat tensor index, the row-major offset inside the mode-j
    // matricization.
    fn matricization_offsets(&self, mode: usize) -> Vec<usize> {
        let q = self.complement(mode);
        let mut col_stride = vec![0; self.order()];
        let mut acc = 1;
        for (k, &d) in self.dims.iter().enumerate() {
            if k != mode {
                col_stride[k] = acc;
                acc *= d;
            }
        }
        let mut idx = vec![0usize; self.order()];
        let mut out = Vec::with_capacity(self.numel());
        for _ in 0..self.numel() {
            let row = idx[mode];
            let col: usize = idx
                .iter()
                .zip(&col_stride)
                .enumerate()
                .filter(|(k, _)| *k != mode)
                .map(|(_, (i, s))| i * s)
                .sum();
            out.push(row * q + col);
            for (k, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < self.dims[k] {
                    break;
                }
                *i = 0;
            }
        }
        out
    }
}

/// Mode-`mode` matricization of a flat tensor.
pub fn matricize(tensor: &[f64], shape: &TensorShape, mode: usize) -> Result<DenseMatrix> {
    shape.check_mode(mode)?;
    if tensor.len() != shape.numel() {
        return Err(Error::DimensionMismatch {
            context: "tensor element count",
            expected: shape.numel(),
            got: tensor.len(),
        });
    }
    let offsets = shape.matricization_offsets(mode);
    let mut data = vec![0.0; tensor.len()];
    for (&off, &x) in offsets.iter().zip(tensor) {
        data[off] = x;
    }
    DenseMatrix::new(shape.dims()[mode], shape.complement(mode), data)
}

/// Inverse of [`matricize`] (also its adjoint, since it is a permutation).
pub fn dematricize(m: &DenseMatrix, shape: &TensorShape, mode: usize) -> Result<Vec<f64>> {
    shape.check_mode(mode)?;
    if m.rows() != shape.dims()[mode] || m.cols() != shape.complement(mode) {
        return Err(Error::InvalidShape(format!(
            "{}x{} matrix is not a mode-{mode} matricization of {:?}",
            m.rows(),
            m.cols(),
            shape.dims()
        )));
    }
    let offsets = shape.matricization_offsets(mode);
    Ok(offsets.iter().map(|&off| m.data()[off]).collect())
}

/// Precomputed index map for repeated (de)matricization along one mode.
#[derive(Debug, Clone)]
pub struct ModePermutation {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
}

impl ModePermutation {
    pub fn new(shape: &TensorShape, mode: usize) -> Result<Self> {
        shape.check_mode(mode)?;
        Ok(Self {
            rows: shape.dims()[mode],
            cols: shape.complement(mode),
            offsets: shape.matricization_offsets(mode),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Tensor → row-major matricization entries.
    pub fn matricize_into(&self, tensor: &[f64], out: &mut [f64]) {
        for (&off, &x) in self.offsets.iter().zip(tensor) {
            out[off] = x;
        }
    }

    /// Row-major matricization entries → tensor, accumulated into `out`.
    pub fn dematricize_add(&self, entries: &[f64], out: &mut [f64]) {
        for (o, &off) in out.iter_mut().zip(&self.offsets) {
            *o += entries[off];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matricization_shapes_of_3x4x2() {
        let shape = TensorShape::new(vec![3, 4, 2]).unwrap();
        let t: Vec<f64> = (0..24).map(|i| i as f64).collect();
        let dims: Vec<(usize, usize)> = (0..3)
            .map(|j| {
                let m = matricize(&t, &shape, j).unwrap();
                (m.rows(), m.cols())
            })
            .collect();
        assert_eq!(dims, vec![(3, 8), (4, 6), (2, 12)]);
    }

    #[test]
    fn matrix_mode_one_is_itself() {
        let shape = TensorShape::new(vec![2, 2]).unwrap();
        // first index fastest: W[0,0], W[1,0], W[0,1], W[1,1]
        let t = vec![1.0, 3.0, 2.0, 4.0];
        let m = matricize(&t, &shape, 0).unwrap();
        assert_eq!(m.data(), &[1.0, 2.0, 3.0, 4.0]);
        let m2 = matricize(&t, &shape, 1).unwrap();
        assert_eq!(m2, m.transpose());
    }

    #[test]
    fn index_arithmetic_oracle() {
        let shape = TensorShape::new(vec![2, 3, 4]).unwrap();
        let t: Vec<f64> = (0..24).map(|i| (i * 7 % 24) as f64).collect();
        let (d1, d2, d3) = (2, 3, 4);
        let at = |i: usize, j: usize, k: usize| t[i + d1 * j + d1 * d2 * k];
        let m1 = matricize(&t, &shape, 0).unwrap();
        let m2 = matricize(&t, &shape, 1).unwrap();
        let m3 = matricize(&t, &shape, 2).unwrap();
        for i in 0..d1 {
            for j in 0..d2 {
                for k in 0..d3 {
                    assert_eq!(m1.get(i, j + d2 * k), at(i, j, k));
                    assert_eq!(m2.get(j, i + d1 * k), at(i, j, k));
                    assert_eq!(m3.get(k, i + d1 * j), at(i, j, k));
                }
            }
        }
        for mode in 0..3 {
            let m = matricize(&t, &shape, mode).unwrap();
            assert_eq!(dematricize(&m, &shape, mode).unwrap(), t);
        }
    }

    #[test]
    fn mode_out_of_range() {
        let shape = TensorShape::new(vec![2, 2]).unwrap();
        assert!(matches!(
            matricize(&[0.0; 4], &shape, 2),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_zero_dims() {
        assert!(TensorShape::new(vec![2, 0]).is_err());
        assert!(TensorShape::new(vec![]).is_err());
    }
}
