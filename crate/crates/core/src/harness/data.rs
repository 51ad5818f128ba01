use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix};
use crate::rng::data_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    #[default]
    Classification,
    Regression,
}

/// Synthetic data recipe: Gaussian design with unit-norm rows and a sparse
/// unit-norm generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataGenSpec {
    #[serde(default)]
    pub kind: DataKind,
    pub n: usize,
    pub d: usize,
    /// Fraction of nonzero generator entries.
    pub sparsity: f64,
    /// Fraction of flipped labels (classification).
    #[serde(default)]
    pub label_noise: f64,
    /// Standard deviation of additive target noise (regression).
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl DataGenSpec {
    /// 100 × 1000, 5% sparsity, 25% flipped labels.
    pub fn classification(seed: u64) -> Self {
        Self {
            kind: DataKind::Classification,
            n: 100,
            d: 1000,
            sparsity: 0.05,
            label_noise: 0.25,
            noise_std: 0.0,
            seed,
        }
    }

    /// 200 × 500, 5% sparsity, noise standard deviation 0.25.
    pub fn regression(seed: u64) -> Self {
        Self {
            kind: DataKind::Regression,
            n: 200,
            d: 500,
            sparsity: 0.05,
            label_noise: 0.0,
            noise_std: 0.25,
            seed,
        }
    }

    /// `⌈sparsity · d⌉`, tolerant of products like `0.05 × 1000` landing a
    /// hair above an integer.
    pub fn support_size(&self) -> usize {
        let raw = self.sparsity * self.d as f64;
        (raw * (1.0 - 1e-12)).ceil() as usize
    }

    /// `round(label_noise · n)`.
    pub fn flip_count(&self) -> usize {
        (self.label_noise * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("n and d must be positive".to_string()));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sparsity must lie in (0, 1], got {}",
                self.sparsity
            )));
        }
        if self.support_size() == 0 {
            return Err(Error::InvalidParameter(
                "sparsity selects no coordinate".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::InvalidParameter(format!(
                "label_noise must lie in [0, 1), got {}",
                self.label_noise
            )));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_std must be nonnegative, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// Design matrix, targets, and the generator used to produce them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub a: DenseMatrix,
    pub targets: Vec<f64>,
    pub w_true: Vec<f64>,
}

pub fn generate(spec: &DataGenSpec) -> Result<Dataset> {
    match spec.kind {
        DataKind::Classification => gen_classification(spec),
        DataKind::Regression => gen_regression(spec),
    }
}

/// Labels `sign(⟨a_i, w⟩)` (zero counts as `+1`), then a uniformly chosen
/// subset of `round(label_noise · n)` labels reversed.
pub fn gen_classification(spec: &DataGenSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = data_stream(spec.seed);
    let (a, w_true) = design(spec, &mut rng)?;
    let mut targets: Vec<f64> = (0..spec.n)
        .map(|i| if dot(a.row(i), &w_true) >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    for i in sample(&mut rng, spec.n, spec.flip_count()) {
        targets[i] = -targets[i];
    }
    Ok(Dataset { a, targets, w_true })
}

/// Targets `b = A w + r` with `r_i ~ N(0, noise_std²)`.
pub fn gen_regression(spec: &DataGenSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = data_stream(spec.seed);
    let (a, w_true) = design(spec, &mut rng)?;
    let mut targets = a.matvec(&w_true)?;
    if spec.noise_std > 0.0 {
        for t in &mut targets {
            let r: f64 = rng.sample(StandardNormal);
            *t += spec.noise_std * r;
        }
    }
    Ok(Dataset { a, targets, w_true })
}

fn design<R: Rng>(spec: &DataGenSpec, rng: &mut R) -> Result<(DenseMatrix, Vec<f64>)> {
    let mut data: Vec<f64> = (0..spec.n * spec.d).map(|_| rng.sample(StandardNormal)).collect();
    for row in data.chunks_exact_mut(spec.d) {
        let nr = norm2(row);
        if nr == 0.0 {
            return Err(Error::InvalidParameter("generated a zero row".to_string()));
        }
        row.iter_mut().for_each(|v| *v /= nr);
    }
    let a = DenseMatrix::new(spec.n, spec.d, data)?;

    let mut w = vec![0.0; spec.d];
    let mut support = sample(rng, spec.d, spec.support_size()).into_vec();
    support.sort_unstable();
    for i in support {
        // redraw the (measure-zero) exact zero so the support size is exact
        let mut x: f64 = 0.0;
        while x == 0.0 {
            x = rng.sample(StandardNormal);
        }
        w[i] = x;
    }
    let nw = norm2(&w);
    w.iter_mut().for_each(|v| *v /= nw);
    Ok((a, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_classification_counts() {
        let spec = DataGenSpec::classification(5);
        let noiseless = DataGenSpec {
            label_noise: 0.0,
            ..spec.clone()
        };
        let data = gen_classification(&spec).unwrap();
        let clean = gen_classification(&noiseless).unwrap();
        assert_eq!(data.w_true.iter().filter(|&&v| v != 0.0).count(), 50);
        assert!((norm2(&data.w_true) - 1.0).abs() < 1e-12);
        // same design and generator, only the flips differ
        assert_eq!(data.a, clean.a);
        let flipped = data
            .targets
            .iter()
            .zip(&clean.targets)
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(flipped, 25);
        for i in 0..spec.n {
            assert!((norm2(data.a.row(i)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_labels_are_signs() {
        let spec = DataGenSpec {
            label_noise: 0.0,
            ..DataGenSpec::classification(1)
        };
        let data = gen_classification(&spec).unwrap();
        for i in 0..spec.n {
            let m = dot(data.a.row(i), &data.w_true);
            assert_eq!(data.targets[i], if m >= 0.0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn regression_defaults_and_noise() {
        let spec = DataGenSpec::regression(2);
        assert_eq!((spec.n, spec.d, spec.noise_std), (200, 500, 0.25));
        let data = gen_regression(&spec).unwrap();
        let clean = data.a.matvec(&data.w_true).unwrap();
        let r: Vec<f64> = data.targets.iter().zip(&clean).map(|(b, c)| b - c).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let std = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r.len() - 1) as f64).sqrt();
        assert!((std - 0.25).abs() <= 0.15 * 0.25, "{std}");

        let exact = gen_regression(&DataGenSpec {
            noise_std: 0.0,
            ..spec
        })
        .unwrap();
        assert_eq!(exact.targets, exact.a.matvec(&exact.w_true).unwrap());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = DataGenSpec {
            n: 20,
            d: 30,
            ..DataGenSpec::classification(9)
        };
        assert_eq!(
            gen_classification(&spec).unwrap(),
            gen_classification(&spec).unwrap()
        );
        let other = DataGenSpec {
            seed: 10,
            ..spec.clone()
        };
        assert_ne!(
            gen_classification(&spec).unwrap().a,
            gen_classification(&other).unwrap().a
        );
    }

    #[test]
    fn empty_support_is_an_error() {
        let spec = DataGenSpec {
            d: 10,
            sparsity: 0.0,
            ..DataGenSpec::classification(0)
        };
        assert!(gen_classification(&spec).is_err());
        assert_eq!(
            DataGenSpec {
                d: 10,
                sparsity: 0.01,
                ..spec
            }
            .support_size(),
            1
        );
    }
}
