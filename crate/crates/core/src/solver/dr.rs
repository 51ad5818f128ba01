use std::time::Instant;

use rand::Rng;

use super::{DrConfig, LossActivation, ProblemSpec, RunOptions, RunTrace, SolveResult, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{dist2, DenseMatrix, SpdFactor};
use crate::prox::{graph_factor, graph_r_blocks_with};
use crate::rng::{block_stream, blocks_per_iteration, loss_stream, sample_without_replacement};

const LX_REFRESH: usize = 1000;

/// `L_j = A B_j` and `R_j = L_jᵀ (Id + L Lᵀ)⁻¹` for every block, with the
/// factor of `Id + L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Precomputed {
    pub l_blocks: Vec<DenseMatrix>,
    pub r_blocks: Vec<DenseMatrix>,
    pub factor: SpdFactor,
}

pub fn precompute(problem: &ProblemSpec) -> Result<Precomputed> {
    let op = problem.norm().operator();
    let l_blocks = (0..op.num_blocks())
        .map(|j| op.left_multiply_block(problem.data(), j))
        .collect::<Result<Vec<_>>>()?;
    let factor = graph_factor(&l_blocks, problem.n())?;
    let r_blocks = graph_r_blocks_with(&factor, &l_blocks);
    Ok(Precomputed {
        l_blocks,
        r_blocks,
        factor,
    })
}

/// Douglas–Rachford iterate: decomposition `v`, its governing sequence `x`,
/// loss-side `y = (η_i)`, and `s = (σ_i)`, the loss-space part of the graph
/// projection of `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrState {
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub iteration: usize,
}

/// A problem with its graph-projection matrices factored once; runs with
/// different configurations share it read-only.
#[derive(Debug, Clone)]
pub struct DrSolver<'a> {
    problem: &'a ProblemSpec,
    pre: Precomputed,
}

impl<'a> DrSolver<'a> {
    pub fn new(problem: &'a ProblemSpec) -> Result<Self> {
        Ok(Self {
            problem,
            pre: precompute(problem)?,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn precomputed(&self) -> &Precomputed {
        &self.pre
    }

    /// Every block active at every iteration; `config.alpha` is ignored.
    pub fn run_full(&self, config: &DrConfig, opts: &RunOptions) -> Result<(SolveResult, DrState)> {
        let mut full = config.clone();
        full.alpha = 1.0;
        self.run(&full, opts)
    }

    /// Random block-coordinate iteration: `⌊mα⌋` blocks drawn uniformly
    /// without replacement per iteration; with `α = 1` no draws are made and
    /// the run coincides with [`DrSolver::run_full`].
    ///
    /// Returns the final state alongside the result. When `max_iter` is hit
    /// first, the result carries the lowest-objective iterate and
    /// `converged == false`.
    pub fn run(&self, config: &DrConfig, opts: &RunOptions) -> Result<(SolveResult, DrState)> {
        config.validate()?;
        let problem = self.problem;
        let norm = problem.norm();
        let op = norm.operator();
        let m = op.num_blocks();
        let n = problem.n();
        let loss = problem.loss();
        let targets = problem.targets();
        let gl = config.gamma * problem.lambda();
        let mu = config.mu;

        let per_iter = blocks_per_iteration(m, config.alpha);
        if per_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "activation rate {} selects no block out of {m}",
                config.alpha
            )));
        }
        if let Some(r) = &opts.reference {
            if r.len() != problem.d() {
                return Err(Error::DimensionMismatch {
                    context: "reference solution",
                    expected: problem.d(),
                    got: r.len(),
                });
            }
        }
        let sampled_blocks = per_iter < m;
        let sampled_loss = config.loss_activation == LossActivation::Sampled && config.alpha < 1.0;
        let mut block_rng = block_stream(config.seed);
        let mut loss_rng = loss_stream(config.seed);
        let mut pool: Vec<usize> = (0..m).collect();
        let mut active = vec![true; m];

        let total = op.total_dim();
        let mut st = DrState {
            v: vec![0.0; total],
            x: vec![0.0; total],
            y: vec![0.0; n],
            s: vec![0.0; n],
            iteration: 0,
        };
        // stop on the change over one sweep, ⌈m / ⌊mα⌋⌉ iterations, so that
        // every block has had about one update; a single iteration at α = 1
        let window = m.div_ceil(per_iter);
        let mut history = vec![vec![0.0; total + n]; window];
        let mut resid = vec![0.0; n];
        let mut lx = vec![0.0; n];
        let mut corr = vec![0.0; op.block_dim_max()];
        let mut z = vec![0.0; op.block_dim_max()];

        let mut trace = RunTrace::new();
        let mut best_obj = f64::INFINITY;
        let mut best_v = st.v.clone();
        let mut last_obj = f64::NAN;
        let mut converged = false;
        let start = Instant::now();

        for k in 1..=config.max_iter {
            if sampled_blocks {
                sample_without_replacement(&mut block_rng, &mut pool, per_iter);
                active.iter_mut().for_each(|a| *a = false);
                for &j in &pool[..per_iter] {
                    active[j] = true;
                }
            }

            // r = L x_k − y_k; with sampling, L x is carried forward and
            // rebuilt every LX_REFRESH iterations to shed rounding drift
            if !sampled_blocks || k % LX_REFRESH == 1 {
                lx.iter_mut().for_each(|v| *v = 0.0);
                for (j, l) in self.pre.l_blocks.iter().enumerate() {
                    l.matvec_add(&st.x[op.block_range(j)], &mut lx);
                }
            }
            for i in 0..n {
                resid[i] = lx[i] - st.y[i];
            }

            for j in (0..m).filter(|&j| active[j]) {
                let range = op.block_range(j);
                let p = range.len();
                let corr = &mut corr[..p];
                let z = &mut z[..p];
                self.pre.r_blocks[j].matvec_into(&resid, corr);
                let vj = &mut st.v[range.clone()];
                let xj = &mut st.x[range];
                for i in 0..p {
                    let new = xj[i] - corr[i];
                    vj[i] = new;
                    z[i] = 2.0 * new - xj[i];
                }
                norm.inner()[j].prox_in_place(z, gl);
                for i in 0..p {
                    // z now holds the step applied to x_j
                    z[i] = mu * (z[i] - vj[i]);
                    xj[i] += z[i];
                }
                if sampled_blocks {
                    self.pre.l_blocks[j].matvec_add(z, &mut lx);
                }
            }

            // s = L v̂ for the full projection v̂ = x − R(Lx − y), i.e.
            // y + (Id + LLᵀ)⁻¹(Lx − y); equal to Σ_j L_j v_j when every
            // block was updated
            self.pre.factor.solve_in_place(&mut resid);
            for i in 0..n {
                st.s[i] = st.y[i] + resid[i];
            }

            for i in 0..n {
                if sampled_loss && !loss_rng.random_bool(config.alpha) {
                    continue;
                }
                let sigma = st.s[i];
                let eta = st.y[i];
                let t = loss.prox(2.0 * sigma - eta, targets[i], config.gamma);
                st.y[i] = eta + mu * (t - sigma);
            }
            st.iteration = k;

            let past = &mut history[k % window];
            let mut change_sq = 0.0;
            let mut size_sq = 0.0;
            for (old, &new) in past.iter_mut().zip(st.v.iter().chain(&st.y)) {
                change_sq += (new - *old) * (new - *old);
                size_sq += new * new;
                *old = new;
            }
            let rel_change = if size_sq > 0.0 {
                (change_sq / size_sq).sqrt()
            } else {
                change_sq.sqrt()
            };
            let objective = problem.loss_sum(&st.s) + problem.lambda() * norm.decomposition_value(&st.v)?;
            if !objective.is_finite() || !rel_change.is_finite() {
                return Err(Error::NonFinite("Douglas–Rachford iterate"));
            }
            if objective < best_obj {
                best_obj = objective;
                best_v.copy_from_slice(&st.v);
            }
            last_obj = objective;
            converged = rel_change <= config.tol;

            let is_last = converged || k == config.max_iter;
            if opts.records(k) || is_last {
                let dist_ref = match &opts.reference {
                    Some(r) => Some(dist2(&op.apply(&st.v)?, r)),
                    None => None,
                };
                trace.push(TraceRecord {
                    iter: k,
                    norm_iter: k as f64 * config.alpha,
                    objective,
                    rel_change,
                    dist_ref,
                    ms: start.elapsed().as_secs_f64() * 1e3,
                    active_blocks: per_iter,
                });
            }
            if converged {
                break;
            }
        }

        let (v, objective) = if converged {
            (st.v.clone(), last_obj)
        } else {
            (best_v, best_obj)
        };
        let w = op.apply(&v)?;
        let result = SolveResult {
            w,
            v: Some(v),
            trace,
            converged,
            iterations: st.iteration,
            objective,
        };
        Ok((result, st))
    }

    /// `max_j ‖prox_{γλ f_j}(2v_j − x_j) − v_j‖₂`, zero exactly at a
    /// Douglas–Rachford fixed point.
    pub fn fixed_point_residual(&self, state: &DrState, config: &DrConfig) -> f64 {
        let norm = self.problem.norm();
        let op = norm.operator();
        let gl = config.gamma * self.problem.lambda();
        (0..op.num_blocks())
            .map(|j| {
                let r = op.block_range(j);
                let v = &state.v[r.clone()];
                let mut z: Vec<f64> = v.iter().zip(&state.x[r]).map(|(v, x)| 2.0 * v - x).collect();
                norm.inner()[j].prox_in_place(&mut z, gl);
                dist2(&z, v)
            })
            .fold(0.0, f64::max)
    }
}

/// Douglas–Rachford with every block active at every iteration.
pub fn dr_full(problem: &ProblemSpec, config: &DrConfig) -> Result<SolveResult> {
    Ok(DrSolver::new(problem)?
        .run_full(config, &RunOptions::default())?
        .0)
}

/// Random block-coordinate Douglas–Rachford at rate `config.alpha`.
pub fn dr_random_block(problem: &ProblemSpec, config: &DrConfig) -> Result<SolveResult> {
    Ok(DrSolver::new(problem)?.run(config, &RunOptions::default())?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm2, DenseMatrix};
    use crate::norms::{chain_groups, latent_group_lasso, LpExponent};
    use crate::solver::Loss;

    fn single_group(d: usize) -> crate::norms::InterpolationNorm {
        latent_group_lasso(d, &[(0..d).collect()], LpExponent::Two).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        use rand::SeedableRng;
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn identity_single_group_gives_half_identity() {
        let p = ProblemSpec::new(
            DenseMatrix::identity(2),
            vec![0.0; 2],
            Loss::Square,
            1.0,
            single_group(2),
        )
        .unwrap();
        let pre = precompute(&p).unwrap();
        assert_eq!(pre.l_blocks[0], DenseMatrix::identity(2));
        let half = DenseMatrix::from_diag(&[0.5, 0.5]);
        for (a, b) in pre.r_blocks[0].data().iter().zip(half.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn r_blocks_satisfy_residual_identity() {
        let a = random_matrix(5, 8, 1);
        let groups = vec![vec![0, 1, 2], vec![2, 3, 4, 5], vec![5, 6, 7]];
        let norm = latent_group_lasso(8, &groups, LpExponent::Two).unwrap();
        let p = ProblemSpec::new(a, vec![0.0; 5], Loss::Square, 1.0, norm).unwrap();
        let pre = precompute(&p).unwrap();
        // (Id + L Lᵀ) R_jᵀ = L_j
        let mut m = DenseMatrix::identity(5);
        for l in &pre.l_blocks {
            m.add_assign(&l.gram_rows()).unwrap();
        }
        let mut sq = 0.0;
        for (l, r) in pre.l_blocks.iter().zip(&pre.r_blocks) {
            let lhs = m.matmul(&r.transpose()).unwrap();
            for (x, y) in lhs.data().iter().zip(l.data()) {
                sq += (x - y) * (x - y);
            }
        }
        assert!(sq.sqrt() <= 1e-9);
    }

    #[test]
    fn disjoint_blocks_stack() {
        let a = random_matrix(4, 5, 2);
        let split = latent_group_lasso(5, &[vec![0, 1], vec![2, 3, 4]], LpExponent::Two).unwrap();
        let p = ProblemSpec::new(a.clone(), vec![0.0; 4], Loss::Square, 1.0, split).unwrap();
        let pre = precompute(&p).unwrap();
        let whole = ProblemSpec::new(a, vec![0.0; 4], Loss::Square, 1.0, single_group(5)).unwrap();
        let r = &precompute(&whole).unwrap().r_blocks[0];
        for i in 0..2 {
            for (x, y) in pre.r_blocks[0].row(i).iter().zip(r.row(i)) {
                assert!((x - y).abs() < 1e-14);
            }
        }
        for i in 0..3 {
            for (x, y) in pre.r_blocks[1].row(i).iter().zip(r.row(i + 2)) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn heavy_penalty_gives_zero() {
        let a = random_matrix(6, 4, 3);
        let norm = latent_group_lasso(4, &[vec![0, 1], vec![2, 3]], LpExponent::Two).unwrap();
        let p = ProblemSpec::new(a, vec![0.0; 6], Loss::Square, 1e3, norm).unwrap();
        let res = dr_full(&p, &DrConfig::new(1.0, 1.5)).unwrap();
        assert!(res.converged);
        assert_eq!(norm2(&res.w), 0.0);
    }

    #[test]
    fn separable_hinge_toy_is_fit() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.2], vec![0.8, -0.3], vec![-1.0, 0.1], vec![-0.7, -0.4]])
            .unwrap();
        let labels = vec![1.0, 1.0, -1.0, -1.0];
        let p = ProblemSpec::new(a, labels, Loss::Hinge, 1e-3, single_group(2)).unwrap();
        let res = dr_full(&p, &DrConfig::new(1.0, 1.5).with_tol(1e-8)).unwrap();
        assert!(res.converged);
        assert_eq!(p.training_error(&res.w).unwrap(), 0.0);
    }

    #[test]
    fn alpha_one_matches_full_and_seed_is_irrelevant() {
        let a = random_matrix(10, 20, 4);
        let groups = chain_groups(20, 5, 2).unwrap();
        let norm = latent_group_lasso(20, &groups, LpExponent::Two).unwrap();
        let b = random_matrix(10, 1, 5).into_data();
        let p = ProblemSpec::new(a, b, Loss::Square, 0.1, norm).unwrap();
        let cfg = DrConfig::new(0.5, 1.9).with_max_iter(300);
        let full = dr_full(&p, &cfg).unwrap();
        let rand1 = dr_random_block(&p, &cfg.clone().with_seed(99)).unwrap();
        assert_eq!(full.w, rand1.w);
        assert_eq!(full.trace.without_timing(), rand1.trace.without_timing());
    }

    #[test]
    fn random_runs_are_deterministic_and_converge() {
        let a = random_matrix(10, 20, 6);
        let groups = chain_groups(20, 5, 2).unwrap();
        let norm = latent_group_lasso(20, &groups, LpExponent::Two).unwrap();
        let b = random_matrix(10, 1, 7).into_data();
        let p = ProblemSpec::new(a, b, Loss::Square, 0.1, norm).unwrap();
        let solver = DrSolver::new(&p).unwrap();
        let cfg = DrConfig::new(0.5, 1.9)
            .with_alpha(0.4)
            .with_seed(3)
            .with_tol(1e-10);
        let (r1, s1) = solver.run(&cfg, &RunOptions::default()).unwrap();
        let (r2, _) = solver.run(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(r1.trace.without_timing(), r2.trace.without_timing());
        assert!(r1.converged);
        assert_eq!(r1.trace.last().unwrap().active_blocks, 2);
        let (full, sf) = solver.run_full(&cfg, &RunOptions::default()).unwrap();
        assert!(dist2(&r1.w, &full.w) < 1e-6);
        // stationarity at both limits
        assert!(solver.fixed_point_residual(&s1, &cfg) < 1e-7);
        assert!(solver.fixed_point_residual(&sf, &cfg) < 1e-7);
        // split objective agrees with the evaluated one at the solution
        let direct = p.objective(&full.w).unwrap();
        assert!((direct - full.objective).abs() <= 1e-4 * direct.abs());
    }

    #[test]
    fn full_state_keeps_s_equal_to_lv() {
        let a = random_matrix(6, 9, 8);
        let norm = latent_group_lasso(9, &chain_groups(9, 4, 2).unwrap(), LpExponent::Two).unwrap();
        let p = ProblemSpec::new(a, vec![1.0, -1.0, 1.0, -1.0, 1.0, 1.0], Loss::Hinge, 0.1, norm).unwrap();
        let solver = DrSolver::new(&p).unwrap();
        let cfg = DrConfig::new(0.1, 1.99).with_max_iter(37);
        let (_, st) = solver.run(&cfg, &RunOptions::default()).unwrap();
        let w = p.norm().operator().apply(&st.v).unwrap();
        let lv = p.data().matvec(&w).unwrap();
        assert!(dist2(&lv, &st.s) < 1e-10);
    }

    #[test]
    fn max_iter_returns_best_iterate_flagged() {
        let a = random_matrix(8, 6, 9);
        let norm = latent_group_lasso(6, &[vec![0, 1, 2], vec![3, 4, 5]], LpExponent::Two).unwrap();
        let b = random_matrix(8, 1, 10).into_data();
        let p = ProblemSpec::new(a, b, Loss::Square, 0.1, norm).unwrap();
        let res = dr_full(&p, &DrConfig::new(0.01, 1.0).with_max_iter(5).with_tol(0.0)).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 5);
        assert_eq!(res.trace.len(), 5);
        let min = res
            .trace
            .records()
            .iter()
            .map(|r| r.objective)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(res.objective, min);
    }

    #[test]
    fn too_small_alpha_is_rejected() {
        let p = ProblemSpec::new(
            DenseMatrix::identity(2),
            vec![0.0; 2],
            Loss::Square,
            1.0,
            single_group(2),
        )
        .unwrap();
        let err = dr_random_block(&p, &DrConfig::new(1.0, 1.0).with_alpha(0.5)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn reference_distance_and_thinning() {
        let a = random_matrix(5, 4, 11);
        let norm = latent_group_lasso(4, &[vec![0, 1], vec![2, 3]], LpExponent::Two).unwrap();
        let p = ProblemSpec::new(a, vec![0.5; 5], Loss::Square, 0.1, norm).unwrap();
        let solver = DrSolver::new(&p).unwrap();
        let cfg = DrConfig::new(1.0, 1.5).with_max_iter(25).with_tol(0.0);
        let opts = RunOptions {
            reference: Some(vec![0.0; 4]),
            record_every: 10,
        };
        let (res, st) = solver.run(&cfg, &opts).unwrap();
        let iters: Vec<usize> = res.trace.records().iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![10, 20, 25]);
        let final_w = p.norm().operator().apply(&st.v).unwrap();
        assert_eq!(res.trace.last().unwrap().dist_ref, Some(norm2(&final_w)));
    }
}
