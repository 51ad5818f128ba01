use crate::error::{Error, Result};
use crate::linalg::{spd_factor, svd_small, DenseMatrix, ModePermutation, SpdFactor, TensorShape};

/// Relative eigenvalue floor of `B Bᵀ` below which `B` counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// One block `B_j ∈ R^{d × p_j}`.
#[derive(Debug, Clone)]
pub enum Block {
    /// `[e_i | i ∈ G_j]`, with 0-based distinct indices.
    GroupSelector(Vec<usize>),
    /// A dense `d × p_j` matrix.
    ExplicitMatrix(DenseMatrix),
    /// `diag(√θ)` for a nonnegative `θ ∈ R^d`.
    DiagSqrt { theta: Vec<f64>, sqrt: Vec<f64> },
    /// Adjoint of the mode-`mode` matricization (0-based mode).
    ModeMatricizationAdjoint {
        shape: TensorShape,
        mode: usize,
        perm: ModePermutation,
    },
}

impl Block {
    pub fn group(indices: Vec<usize>) -> Self {
        Block::GroupSelector(indices)
    }

    pub fn diag_sqrt(theta: Vec<f64>) -> Self {
        let sqrt = theta.iter().map(|t| t.sqrt()).collect();
        Block::DiagSqrt { theta, sqrt }
    }

    pub fn mode_adjoint(shape: TensorShape, mode: usize) -> Result<Self> {
        let perm = ModePermutation::new(&shape, mode)?;
        Ok(Block::ModeMatricizationAdjoint { shape, mode, perm })
    }

    fn dim(&self, d: usize) -> usize {
        match self {
            Block::GroupSelector(g) => g.len(),
            Block::ExplicitMatrix(m) => m.cols(),
            Block::DiagSqrt { .. } => d,
            Block::ModeMatricizationAdjoint { shape, .. } => shape.numel(),
        }
    }
}

#[derive(Debug, Clone)]
enum Gram {
    Diagonal(Vec<f64>),
    Dense(SpdFactor),
}

/// `B = [B_1 ⋯ B_m]` with full row rank; `B Bᵀ` is factored once.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    d: usize,
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    gram: Gram,
}

impl BlockOperator {
    pub fn new(d: usize, blocks: Vec<Block>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter(
                "ambient dimension must be positive".into(),
            ));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("at least one block is required".into()));
        }
        for (j, b) in blocks.iter().enumerate() {
            validate_block(j, b, d)?;
        }
        if blocks.iter().all(|b| matches!(b, Block::GroupSelector(_))) {
            let mut covered = vec![false; d];
            for b in &blocks {
                if let Block::GroupSelector(g) = b {
                    g.iter().for_each(|&i| covered[i] = true);
                }
            }
            if let Some(i) = covered.iter().position(|c| !c) {
                return Err(Error::RankDeficient(format!(
                    "index {} is not covered by any group",
                    i + 1
                )));
            }
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.dim(d));
        }
        let gram = build_gram(d, &blocks)?;
        Ok(Self {
            d,
            blocks,
            offsets,
            gram,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// `N = Σ p_j`.
    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_dim(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    /// `max_j p_j`.
    pub fn block_dim_max(&self) -> usize {
        (0..self.blocks.len())
            .map(|j| self.block_dim(j))
            .max()
            .unwrap_or(0)
    }

    pub fn block_range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// `out += B_j v_j`.
    pub fn apply_block_add(&self, j: usize, vj: &[f64], out: &mut [f64]) {
        match &self.blocks[j] {
            Block::GroupSelector(g) => {
                for (&i, &x) in g.iter().zip(vj) {
                    out[i] += x;
                }
            }
            Block::ExplicitMatrix(m) => m.matvec_add(vj, out),
            Block::DiagSqrt { sqrt, .. } => {
                for ((o, s), x) in out.iter_mut().zip(sqrt).zip(vj) {
                    *o += s * x;
                }
            }
            Block::ModeMatricizationAdjoint { perm, .. } => perm.dematricize_add(vj, out),
        }
    }

    /// `B v` for a concatenated `v ∈ R^N`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "block vector length",
                expected: self.total_dim(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.d];
        for j in 0..self.blocks.len() {
            self.apply_block_add(j, &v[self.block_range(j)], &mut out);
        }
        Ok(out)
    }

    /// `B_jᵀ u`, written into `out` (length `p_j`).
    pub fn adjoint_block_into(&self, j: usize, u: &[f64], out: &mut [f64]) {
        match &self.blocks[j] {
            Block::GroupSelector(g) => {
                for (o, &i) in out.iter_mut().zip(g) {
                    *o = u[i];
                }
            }
            Block::ExplicitMatrix(m) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (i, &ui) in u.iter().enumerate() {
                    if ui != 0.0 {
                        for (o, b) in out.iter_mut().zip(m.row(i)) {
                            *o += ui * b;
                        }
                    }
                }
            }
            Block::DiagSqrt { sqrt, .. } => {
                for ((o, s), x) in out.iter_mut().zip(sqrt).zip(u) {
                    *o = s * x;
                }
            }
            Block::ModeMatricizationAdjoint { perm, .. } => perm.matricize_into(u, out),
        }
    }

    pub fn adjoint_block(&self, j: usize, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.block_dim(j)];
        self.adjoint_block_into(j, u, &mut out);
        out
    }

    /// `Bᵀ u` for every block, concatenated.
    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.d {
            return Err(Error::DimensionMismatch {
                context: "adjoint operand",
                expected: self.d,
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.total_dim()];
        for j in 0..self.blocks.len() {
            let r = self.block_range(j);
            self.adjoint_block_into(j, u, &mut out[r]);
        }
        Ok(out)
    }

    /// `(B Bᵀ)⁻¹ r` in place.
    pub fn gram_solve_in_place(&self, r: &mut [f64]) {
        match &self.gram {
            Gram::Diagonal(diag) => r.iter_mut().zip(diag).for_each(|(x, g)| *x /= g),
            Gram::Dense(f) => f.solve_in_place(r),
        }
    }

    /// `A B_j` for a data matrix `A ∈ R^{n × d}`.
    pub fn left_multiply_block(&self, a: &DenseMatrix, j: usize) -> Result<DenseMatrix> {
        if a.cols() != self.d {
            return Err(Error::DimensionMismatch {
                context: "data matrix columns vs norm dimension",
                expected: self.d,
                got: a.cols(),
            });
        }
        let p = self.block_dim(j);
        let mut data = vec![0.0; a.rows() * p];
        for (i, chunk) in data.chunks_exact_mut(p.max(1)).enumerate().take(a.rows()) {
            // row i of A B_j is (B_jᵀ a_i)ᵀ
            self.adjoint_block_into(j, a.row(i), chunk);
        }
        DenseMatrix::new(a.rows(), p, data)
    }
}

fn validate_block(j: usize, b: &Block, d: usize) -> Result<()> {
    match b {
        Block::GroupSelector(g) => {
            if g.is_empty() {
                return Err(Error::InvalidGroups(format!("group {} is empty", j + 1)));
            }
            let mut seen = vec![false; d];
            for &i in g {
                if i >= d {
                    return Err(Error::InvalidGroups(format!(
                        "group {} has index {} outside 1..{d}",
                        j + 1,
                        i + 1
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidGroups(format!(
                        "group {} repeats index {}",
                        j + 1,
                        i + 1
                    )));
                }
                seen[i] = true;
            }
        }
        Block::ExplicitMatrix(m) => {
            if m.rows() != d || m.cols() == 0 {
                return Err(Error::DimensionMismatch {
                    context: "explicit block rows",
                    expected: d,
                    got: m.rows(),
                });
            }
        }
        Block::DiagSqrt { theta, .. } => {
            if theta.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "theta vertex length",
                    expected: d,
                    got: theta.len(),
                });
            }
            if theta.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "theta vertex {} must be componentwise nonnegative",
                    j + 1
                )));
            }
        }
        Block::ModeMatricizationAdjoint { shape, .. } => {
            if shape.numel() != d {
                return Err(Error::DimensionMismatch {
                    context: "tensor element count",
                    expected: d,
                    got: shape.numel(),
                });
            }
        }
    }
    Ok(())
}

fn build_gram(d: usize, blocks: &[Block]) -> Result<Gram> {
    let has_dense = blocks.iter().any(|b| matches!(b, Block::ExplicitMatrix(_)));
    if !has_dense {
        let mut diag = vec![0.0; d];
        for b in blocks {
            match b {
                Block::GroupSelector(g) => g.iter().for_each(|&i| diag[i] += 1.0),
                Block::DiagSqrt { theta, .. } => diag.iter_mut().zip(theta).for_each(|(g, t)| *g += t),
                Block::ModeMatricizationAdjoint { .. } => diag.iter_mut().for_each(|g| *g += 1.0),
                Block::ExplicitMatrix(_) => unreachable!(),
            }
        }
        let max = diag.iter().fold(0.0f64, |m, v| m.max(*v));
        if let Some(i) = diag.iter().position(|&g| !(g > RANK_TOL * max)) {
            return Err(Error::RankDeficient(format!(
                "coordinate {} is not reached by any block",
                i + 1
            )));
        }
        return Ok(Gram::Diagonal(diag));
    }
    let mut gram = DenseMatrix::zeros(d, d);
    for b in blocks {
        match b {
            Block::GroupSelector(g) => g.iter().for_each(|&i| gram.set(i, i, gram.get(i, i) + 1.0)),
            Block::DiagSqrt { theta, .. } => theta
                .iter()
                .enumerate()
                .for_each(|(i, t)| gram.set(i, i, gram.get(i, i) + t)),
            Block::ModeMatricizationAdjoint { .. } => gram.add_identity(1.0),
            Block::ExplicitMatrix(m) => gram.add_assign(&m.gram_rows())?,
        }
    }
    let eig = svd_small(&gram)?.s;
    let (max, min) = (eig[0], *eig.last().unwrap());
    if !(min > RANK_TOL * max) {
        return Err(Error::RankDeficient(format!(
            "smallest eigenvalue of B Bᵀ is {min:e} against largest {max:e}"
        )));
    }
    Ok(Gram::Dense(spd_factor(&gram)?))
}
