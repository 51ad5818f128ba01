use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::InterpolationNorm;
use crate::error::Result;

/// Outcome of a randomized homogeneity/triangle-inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub trials: usize,
    /// Largest `|‖αw‖ − |α|‖w‖| / (|α|‖w‖)`.
    pub max_homogeneity: f64,
    /// Largest `(‖w+t‖ − ‖w‖ − ‖t‖)₊ / (‖w‖ + ‖t‖)`.
    pub max_triangle: f64,
    /// `‖0‖`.
    pub zero_value: f64,
    /// Trials exceeding the tolerance in either check.
    pub violations: usize,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.zero_value == 0.0
    }
}

/// Checks the norm axioms of `eval` on `trials` random Gaussian pairs in `R^d`.
pub fn norm_axiom_check<F>(eval: F, d: usize, trials: usize, tol: f64, seed: u64) -> Result<AxiomReport>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        trials,
        max_homogeneity: 0.0,
        max_triangle: 0.0,
        zero_value: eval(&vec![0.0; d])?,
        violations: 0,
    };
    for _ in 0..trials {
        let w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let t: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let alpha: f64 = rng.random_range(-3.0..3.0);

        let nw = eval(&w)?;
        let nt = eval(&t)?;
        let scaled: Vec<f64> = w.iter().map(|v| alpha * v).collect();
        let sum: Vec<f64> = w.iter().zip(&t).map(|(a, b)| a + b).collect();
        let nscaled = eval(&scaled)?;
        let nsum = eval(&sum)?;

        let hom_scale = (alpha.abs() * nw).max(f64::MIN_POSITIVE);
        let hom = (nscaled - alpha.abs() * nw).abs() / hom_scale;
        let tri = (nsum - nw - nt).max(0.0) / (nw + nt).max(f64::MIN_POSITIVE);
        report.max_homogeneity = report.max_homogeneity.max(hom);
        report.max_triangle = report.max_triangle.max(tri);
        if hom > tol || tri > tol {
            report.violations += 1;
        }
    }
    Ok(report)
}

impl InterpolationNorm {
    /// [`norm_axiom_check`] against [`InterpolationNorm::norm`].
    pub fn axiom_check(&self, trials: usize, tol: f64, seed: u64) -> Result<AxiomReport> {
        norm_axiom_check(|w| self.norm(w), self.dim(), trials, tol, seed)
    }
}
