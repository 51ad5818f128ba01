//! Proximal-gradient baselines for the square loss: FISTA and plain
//! forward–backward, on norms whose prox separates over a partition.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{DrConfig, Loss, ProblemSpec, RunOptions, RunTrace, SolveResult, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{dist2, norm2, spectral_norm_sq};
use crate::norms::{Block, InnerNorm, InterpolationNorm, OuterNorm};

/// Stopping rule for the gradient methods: relative change of `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl From<&DrConfig> for GradientConfig {
    fn from(c: &DrConfig) -> Self {
        Self {
            tol: c.tol,
            max_iter: c.max_iter,
        }
    }
}

/// `w ↦ Σ_j f_j(w_{G_j})` for disjoint groups covering every coordinate,
/// where the interpolation has a single feasible point.
#[derive(Debug, Clone)]
pub struct PartitionProx {
    groups: Vec<Vec<usize>>,
    inner: Vec<InnerNorm>,
}

impl PartitionProx {
    pub fn new(norm: &InterpolationNorm) -> Result<Self> {
        if norm.outer() != OuterNorm::L1 {
            return Err(Error::Unsupported(
                "separable prox needs an l1 outer norm".to_string(),
            ));
        }
        let mut seen = vec![false; norm.dim()];
        let mut groups = Vec::with_capacity(norm.num_blocks());
        for (b, f) in norm.operator().blocks().iter().zip(norm.inner()) {
            let Block::GroupSelector(g) = b else {
                return Err(Error::Unsupported(
                    "separable prox needs group-selector blocks".to_string(),
                ));
            };
            if !matches!(f, InnerNorm::Lp(_)) {
                return Err(Error::Unsupported(
                    "separable prox needs lp inner norms".to_string(),
                ));
            }
            for &i in g {
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Unsupported(format!(
                        "separable prox needs disjoint groups; index {} repeats",
                        i + 1
                    )));
                }
            }
            groups.push(g.clone());
        }
        Ok(Self {
            groups,
            inner: norm.inner().to_vec(),
        })
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.groups
            .iter()
            .zip(&self.inner)
            .map(|(g, f)| {
                buf.clear();
                buf.extend(g.iter().map(|&i| w[i]));
                f.value(&buf)
            })
            .sum()
    }

    /// `w ← prox_{t‖·‖}(w)`.
    pub fn prox_in_place(&self, w: &mut [f64], t: f64) {
        let mut buf = Vec::new();
        for (g, f) in self.groups.iter().zip(&self.inner) {
            buf.clear();
            buf.extend(g.iter().map(|&i| w[i]));
            f.prox_in_place(&mut buf, t);
            for (&i, &v) in g.iter().zip(&buf) {
                w[i] = v;
            }
        }
    }
}

/// Accelerated proximal gradient with step `1/‖AᵀA‖` and function restart:
/// whenever the objective would increase, momentum is reset and a plain
/// step is taken instead, so the objective sequence is monotone.
pub fn fista(problem: &ProblemSpec, config: &GradientConfig, opts: &RunOptions) -> Result<SolveResult> {
    proximal_gradient(problem, config, opts, true)
}

/// Unaccelerated proximal gradient with step `1/‖AᵀA‖`.
pub fn forward_backward(
    problem: &ProblemSpec,
    config: &GradientConfig,
    opts: &RunOptions,
) -> Result<SolveResult> {
    proximal_gradient(problem, config, opts, false)
}

fn proximal_gradient(
    problem: &ProblemSpec,
    config: &GradientConfig,
    opts: &RunOptions,
    accelerate: bool,
) -> Result<SolveResult> {
    if problem.loss() != Loss::Square {
        return Err(Error::Unsupported(
            "gradient methods need a differentiable loss; use the square loss".to_string(),
        ));
    }
    if config.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".to_string()));
    }
    let sep = PartitionProx::new(problem.norm())?;
    let a = problem.data();
    let b = problem.targets();
    let lambda = problem.lambda();
    // power iteration approaches ‖A‖² from below; a small margin keeps the
    // step inside the stable range
    let lip = spectral_norm_sq(a, 10_000, 1e-12) * 1.001;
    if lip == 0.0 {
        return Err(Error::InvalidParameter("data matrix is zero".to_string()));
    }
    let step = 1.0 / lip;
    let d = problem.d();
    let m = problem.norm().num_blocks();

    let objective = |w: &[f64]| -> Result<f64> {
        let eta = a.matvec(w)?;
        Ok(problem.loss_sum(&eta) + lambda * sep.value(w))
    };
    let prox_step = |from: &[f64]| -> Result<Vec<f64>> {
        let mut r = a.matvec(from)?;
        r.iter_mut().zip(b).for_each(|(r, b)| *r -= b);
        let grad = a.tr_matvec(&r)?;
        let mut out: Vec<f64> = from.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
        sep.prox_in_place(&mut out, step * lambda);
        Ok(out)
    };

    let mut w = vec![0.0; d];
    let mut y = w.clone();
    let mut t = 1.0f64;
    let mut f_w = objective(&w)?;
    let mut trace = RunTrace::new();
    let mut converged = false;
    let mut iterations = 0;
    let start = Instant::now();

    for k in 1..=config.max_iter {
        let mut next = prox_step(&y)?;
        let mut f_next = objective(&next)?;
        if accelerate && f_next > f_w {
            t = 1.0;
            next = prox_step(&w)?;
            f_next = objective(&next)?;
        }
        if !f_next.is_finite() {
            return Err(Error::NonFinite("proximal gradient iterate"));
        }
        let change = dist2(&next, &w);
        let size = norm2(&next);
        let rel_change = if size > 0.0 { change / size } else { change };
        if accelerate {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = next.iter().zip(&w).map(|(n, o)| n + beta * (n - o)).collect();
            t = t_next;
        } else {
            y.copy_from_slice(&next);
        }
        w = next;
        f_w = f_next;
        iterations = k;
        converged = rel_change <= config.tol;

        let is_last = converged || k == config.max_iter;
        if opts.records(k) || is_last {
            trace.push(TraceRecord {
                iter: k,
                norm_iter: k as f64,
                objective: f_w,
                rel_change,
                dist_ref: opts.reference.as_ref().map(|r| dist2(&w, r)),
                ms: start.elapsed().as_secs_f64() * 1e3,
                active_blocks: m,
            });
        }
        if converged {
            break;
        }
    }

    Ok(SolveResult {
        w,
        v: None,
        trace,
        converged,
        iterations,
        objective: f_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spd_factor, DenseMatrix};
    use crate::norms::{chain_groups, latent_group_lasso, LpExponent};
    use crate::solver::dr_full;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn lasso(d: usize) -> InterpolationNorm {
        let groups: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
        latent_group_lasso(d, &groups, LpExponent::One).unwrap()
    }

    #[test]
    fn tiny_lambda_recovers_least_squares() {
        let a = random_matrix(12, 5, 1);
        let b = random_matrix(12, 1, 2).into_data();
        let p = ProblemSpec::new(a.clone(), b.clone(), Loss::Square, 1e-12, lasso(5)).unwrap();
        let cfg = GradientConfig {
            tol: 1e-14,
            max_iter: 100_000,
        };
        let res = fista(&p, &cfg, &RunOptions::default()).unwrap();
        // normal equations AᵀA w = Aᵀb
        let ata = a.transpose().matmul(&a).unwrap();
        let w_ls = spd_factor(&ata)
            .unwrap()
            .solve(&a.tr_matvec(&b).unwrap())
            .unwrap();
        assert!(dist2(&res.w, &w_ls) <= 1e-6, "{:?} vs {:?}", res.w, w_ls);
    }

    #[test]
    fn huge_lambda_gives_zero() {
        let a = random_matrix(6, 4, 3);
        let b = random_matrix(6, 1, 4).into_data();
        let p = ProblemSpec::new(a, b, Loss::Square, 1e6, lasso(4)).unwrap();
        let cfg = GradientConfig {
            tol: 1e-10,
            max_iter: 1000,
        };
        for res in [
            fista(&p, &cfg, &RunOptions::default()).unwrap(),
            forward_backward(&p, &cfg, &RunOptions::default()).unwrap(),
        ] {
            assert!(res.converged);
            assert_eq!(norm2(&res.w), 0.0);
        }
    }

    #[test]
    fn fista_objective_is_monotone() {
        let a = random_matrix(15, 30, 5);
        let b = random_matrix(15, 1, 6).into_data();
        let p = ProblemSpec::new(a, b, Loss::Square, 0.1, lasso(30)).unwrap();
        let res = fista(
            &p,
            &GradientConfig {
                tol: 1e-12,
                max_iter: 3000,
            },
            &RunOptions::default(),
        )
        .unwrap();
        for pair in res.trace.records().windows(2) {
            assert!(pair[1].objective <= pair[0].objective + 1e-12);
        }
    }

    #[test]
    fn lasso_agrees_with_dr() {
        let a = random_matrix(10, 20, 7);
        let b = random_matrix(10, 1, 8).into_data();
        let p = ProblemSpec::new(a, b, Loss::Square, 0.2, lasso(20)).unwrap();
        let g = GradientConfig {
            tol: 1e-12,
            max_iter: 200_000,
        };
        let f = fista(&p, &g, &RunOptions::default()).unwrap();
        let fb = forward_backward(&p, &g, &RunOptions::default()).unwrap();
        let dr = dr_full(
            &p,
            &DrConfig::new(1.0, 1.5).with_tol(1e-12).with_max_iter(200_000),
        )
        .unwrap();
        let reference = f.objective;
        for other in [fb.objective, dr.objective] {
            assert!(
                (other - reference).abs() <= 1e-4 * reference,
                "{other} vs {reference}"
            );
        }
    }

    #[test]
    fn rejects_hinge_and_overlap() {
        let a = random_matrix(4, 6, 9);
        let hinge =
            ProblemSpec::new(a.clone(), vec![1.0, -1.0, 1.0, -1.0], Loss::Hinge, 0.1, lasso(6)).unwrap();
        let cfg = GradientConfig {
            tol: 1e-6,
            max_iter: 10,
        };
        assert!(matches!(
            fista(&hinge, &cfg, &RunOptions::default()),
            Err(Error::Unsupported(_))
        ));
        let overlap = latent_group_lasso(6, &chain_groups(6, 3, 2).unwrap(), LpExponent::Two).unwrap();
        let p = ProblemSpec::new(a, vec![0.0; 4], Loss::Square, 0.1, overlap).unwrap();
        assert!(matches!(
            forward_backward(&p, &cfg, &RunOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn partition_prox_matches_group_soft_threshold() {
        let norm = latent_group_lasso(4, &[vec![2, 0], vec![1, 3]], LpExponent::Two).unwrap();
        let sep = PartitionProx::new(&norm).unwrap();
        let mut w = vec![3.0, 0.1, 4.0, 0.0];
        assert!((sep.value(&w) - 5.1).abs() < 1e-12);
        sep.prox_in_place(&mut w, 1.0);
        let expect = [3.0 * 0.8, 0.0, 4.0 * 0.8, 0.0];
        assert!(dist2(&w, &expect) < 1e-12);
    }
}
