use serde::{Deserialize, Serialize};

use super::data::{generate, DataGenSpec, Dataset};
use crate::error::Result;
use crate::norms::{chain_groups, latent_group_lasso, InterpolationNorm, LpExponent};
use crate::solver::{DrConfig, Loss, ProblemSpec};

/// Regularizer used by a benchmark preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PresetNorm {
    /// Latent group lasso over overlapping chains with ℓ2 inner norms.
    Chain { length: usize, overlap: usize },
    /// ℓ1, as singleton groups.
    Lasso,
}

impl PresetNorm {
    pub fn build(self, d: usize) -> Result<InterpolationNorm> {
        match self {
            PresetNorm::Chain { length, overlap } => {
                latent_group_lasso(d, &chain_groups(d, length, overlap)?, LpExponent::Two)
            }
            PresetNorm::Lasso => {
                let groups: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
                latent_group_lasso(d, &groups, LpExponent::One)
            }
        }
    }
}

/// A reproducible problem instance plus the solver settings used on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub data: DataGenSpec,
    pub norm: PresetNorm,
    pub loss: Loss,
    pub lambda: f64,
    pub config: DrConfig,
}

impl Benchmark {
    /// Hinge loss, chain groups (length 10, overlap 3) on `d = 200`, `n = 50`:
    /// 28 groups. `μ = 1.99`, `γ = 0.01`, `λ = 0.1`.
    pub fn desk_hinge(seed: u64) -> Self {
        Self {
            data: DataGenSpec {
                n: 50,
                d: 200,
                ..DataGenSpec::classification(seed)
            },
            ..Self::paper_hinge(seed)
        }
    }

    /// The 100 × 1000 hinge setting with 142 chain groups.
    pub fn paper_hinge(seed: u64) -> Self {
        Self {
            data: DataGenSpec::classification(seed),
            norm: PresetNorm::Chain {
                length: 10,
                overlap: 3,
            },
            loss: Loss::Hinge,
            lambda: 0.1,
            config: DrConfig::new(0.01, 1.99),
        }
    }

    /// Square loss with ℓ1 on the 200 × 500 regression data, `λ = γ = 0.1`.
    pub fn paper_lasso(seed: u64) -> Self {
        Self {
            data: DataGenSpec::regression(seed),
            norm: PresetNorm::Lasso,
            loss: Loss::Square,
            lambda: 0.1,
            config: DrConfig::new(0.1, 1.99),
        }
    }

    pub fn dataset(&self) -> Result<Dataset> {
        generate(&self.data)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let data = self.dataset()?;
        ProblemSpec::new(
            data.a,
            data.targets,
            self.loss,
            self.lambda,
            self.norm.build(self.data.d)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_shapes() {
        let p = Benchmark::desk_hinge(0).problem().unwrap();
        assert_eq!((p.n(), p.d(), p.norm().num_blocks()), (50, 200, 28));
        let b = Benchmark::paper_hinge(0);
        assert_eq!(b.norm.build(b.data.d).unwrap().num_blocks(), 142);
        let l = Benchmark::paper_lasso(0);
        assert_eq!(l.norm.build(l.data.d).unwrap().num_blocks(), 500);
    }
}
