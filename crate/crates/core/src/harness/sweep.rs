use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::blocks_per_iteration;
use crate::solver::{format_real, DrConfig, DrSolver, ProblemSpec, RunOptions};

pub const THREADS_ENV: &str = "INTERPNORM_THREADS";

fn default_repetitions() -> usize {
    3
}

/// Activation-rate sweep over one problem: every run shares the data and
/// `base` configuration; only `α` and the seed vary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub rates: Vec<f64>,
    pub base: DrConfig,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Run `(i, r)` uses seed `base_seed + 1000 i + r` for rate index `i`.
    #[serde(default)]
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn new(rates: Vec<f64>, base: DrConfig) -> Self {
        Self {
            rates,
            base,
            repetitions: default_repetitions(),
            base_seed: 0,
        }
    }

    /// Sorts the rates in decreasing order and checks them.
    pub fn normalized(&self) -> Result<SweepSpec> {
        let mut s = self.clone();
        if s.rates.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs at least one rate".to_string(),
            ));
        }
        if let Some(r) = s.rates.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "activation rate {r} outside (0, 1]"
            )));
        }
        s.rates.sort_by(|a, b| b.total_cmp(a));
        if s.rates.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "activation rates must be distinct".to_string(),
            ));
        }
        if s.repetitions == 0 {
            return Err(Error::InvalidParameter(
                "repetitions must be at least 1".to_string(),
            ));
        }
        s.base.validate()?;
        Ok(s)
    }

    pub fn seed(&self, rate_index: usize, repetition: usize) -> u64 {
        self.base_seed
            .wrapping_add(rate_index as u64 * 1000)
            .wrapping_add(repetition as u64)
    }
}

/// One solver run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub alpha: f64,
    pub repetition: usize,
    pub seed: u64,
    pub blocks: usize,
    pub iterations: usize,
    pub normalized_iterations: f64,
    pub ms: f64,
    pub objective: f64,
    pub converged: bool,
}

/// Medians over the repetitions of one rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub blocks: usize,
    pub ms: f64,
    pub iterations: f64,
    /// `iterations × α`.
    pub normalized_iterations: f64,
    pub all_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub runs: Vec<SweepRun>,
    pub rows: Vec<SweepRow>,
}

/// Thread count from `INTERPNORM_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs every `(rate, repetition)` pair, in parallel on at most `threads`
/// workers (all cores when `None`). Results come back in spec order.
pub fn run_sweep(problem: &ProblemSpec, spec: &SweepSpec, threads: Option<usize>) -> Result<SweepReport> {
    let spec = spec.normalized()?;
    let m = problem.norm().num_blocks();
    for &r in &spec.rates {
        if blocks_per_iteration(m, r) == 0 {
            return Err(Error::InvalidParameter(format!(
                "activation rate {r} selects no block out of {m}"
            )));
        }
    }
    let solver = DrSolver::new(problem)?;
    let jobs: Vec<(usize, usize)> = (0..spec.rates.len())
        .flat_map(|i| (0..spec.repetitions).map(move |r| (i, r)))
        .collect();

    let run_one = |&(i, rep): &(usize, usize)| -> Result<SweepRun> {
        let alpha = spec.rates[i];
        let seed = spec.seed(i, rep);
        let config = DrConfig {
            alpha,
            seed,
            ..spec.base.clone()
        };
        let opts = RunOptions {
            reference: None,
            record_every: usize::MAX,
        };
        let start = Instant::now();
        let (res, _) = solver.run(&config, &opts)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(SweepRun {
            alpha,
            repetition: rep,
            seed,
            blocks: blocks_per_iteration(m, alpha),
            iterations: res.iterations,
            normalized_iterations: res.iterations as f64 * alpha,
            ms,
            objective: res.objective,
            converged: res.converged,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let runs: Vec<SweepRun> = pool.install(|| jobs.par_iter().map(run_one).collect::<Result<Vec<_>>>())?;

    let rows = spec
        .rates
        .iter()
        .map(|&alpha| {
            let group: Vec<&SweepRun> = runs.iter().filter(|r| r.alpha == alpha).collect();
            let iterations = median(group.iter().map(|r| r.iterations as f64).collect());
            SweepRow {
                alpha,
                blocks: blocks_per_iteration(m, alpha),
                ms: median(group.iter().map(|r| r.ms).collect()),
                iterations,
                normalized_iterations: iterations * alpha,
                all_converged: group.iter().all(|r| r.converged),
            }
        })
        .collect();
    Ok(SweepReport { runs, rows })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

impl SweepReport {
    /// `max / min` of the normalized-iteration medians.
    pub fn normalized_spread(&self) -> f64 {
        let (lo, hi) = self.rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
            (lo.min(r.normalized_iterations), hi.max(r.normalized_iterations))
        });
        hi / lo
    }

    /// One line per run.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "alpha",
            "repetition",
            "seed",
            "blocks",
            "iterations",
            "normalized_iterations",
            "ms",
            "objective",
            "converged",
        ])?;
        for r in &self.runs {
            w.write_record([
                format_real(r.alpha),
                r.repetition.to_string(),
                r.seed.to_string(),
                r.blocks.to_string(),
                r.iterations.to_string(),
                format_real(r.normalized_iterations),
                format!("{:.3}", r.ms),
                format_real(r.objective),
                r.converged.to_string(),
            ])?;
        }
        w.flush().map_err(Error::from)
    }

    /// Markdown table: activation rate, time, iterations, normalized
    /// iterations. Rates with a non-converged run are marked `*`.
    pub fn markdown(&self) -> String {
        let mut s = String::from(
            "| activation rate | time (ms) | iterations | normalized iterations |\n\
             |---:|---:|---:|---:|\n",
        );
        for r in &self.rows {
            let mark = if r.all_converged { "" } else { "*" };
            s.push_str(&format!(
                "| {}{} | {:.1} | {} | {:.1} |\n",
                r.alpha, mark, r.ms, r.iterations, r.normalized_iterations
            ));
        }
        if self.rows.iter().any(|r| !r.all_converged) {
            s.push_str("\n`*` at least one run stopped at the iteration cap.\n");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Benchmark;
    use crate::solver::dr_full;

    fn small() -> (ProblemSpec, DrConfig) {
        let mut b = Benchmark::desk_hinge(4);
        b.data.n = 20;
        b.data.d = 40;
        let p = b.problem().unwrap();
        (p, DrConfig::new(0.5, 1.99).with_tol(1e-6))
    }

    #[test]
    fn spec_normalization() {
        let base = DrConfig::new(0.1, 1.0);
        let s = SweepSpec::new(vec![0.5, 1.0, 0.1], base.clone())
            .normalized()
            .unwrap();
        assert_eq!(s.rates, vec![1.0, 0.5, 0.1]);
        assert!(SweepSpec::new(vec![0.5, 0.5], base.clone()).normalized().is_err());
        assert!(SweepSpec::new(vec![1.5], base.clone()).normalized().is_err());
        assert!(SweepSpec::new(vec![], base).normalized().is_err());
    }

    #[test]
    fn seeds_follow_the_rule() {
        let s = SweepSpec {
            base_seed: 7,
            ..SweepSpec::new(vec![1.0], DrConfig::new(0.1, 1.0))
        };
        assert_eq!(s.seed(0, 0), 7);
        assert_eq!(s.seed(2, 1), 2008);
    }

    #[test]
    fn full_rate_row_matches_dr_full_and_order_is_stable() {
        let (p, base) = small();
        let spec = SweepSpec {
            repetitions: 2,
            ..SweepSpec::new(vec![0.5, 1.0], base.clone())
        };
        let a = run_sweep(&p, &spec, Some(3)).unwrap();
        let b = run_sweep(&p, &spec, Some(1)).unwrap();
        let strip = |r: &SweepReport| -> Vec<(f64, usize, u64, usize, f64)> {
            r.runs
                .iter()
                .map(|x| (x.alpha, x.repetition, x.seed, x.iterations, x.objective))
                .collect()
        };
        assert_eq!(strip(&a), strip(&b));
        let full = dr_full(&p, &base).unwrap();
        assert_eq!(a.runs[0].alpha, 1.0);
        assert_eq!(a.runs[0].iterations, full.iterations);
        assert_eq!(a.runs[0].objective, full.objective);
        for row in &a.rows {
            assert_eq!(row.normalized_iterations, row.iterations * row.alpha);
        }
    }

    #[test]
    fn table_layout() {
        let (p, base) = small();
        let r = run_sweep(
            &p,
            &SweepSpec {
                repetitions: 1,
                ..SweepSpec::new(vec![1.0], base)
            },
            Some(1),
        )
        .unwrap();
        let md = r.markdown();
        assert!(md.starts_with("| activation rate | time (ms) | iterations | normalized iterations |"));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn median_values() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0]), 2.5);
    }
}
