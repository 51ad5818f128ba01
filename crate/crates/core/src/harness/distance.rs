use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{
    fista, format_real, DrConfig, DrSolver, GradientConfig, Loss, PartitionProx, ProblemSpec, RunOptions,
};

/// How the reference solution is computed and which series are produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceOptions {
    pub reference_tol: f64,
    pub reference_max_iter: usize,
    /// Add a FISTA series when the problem admits one.
    pub include_fista: bool,
    pub record_every: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            reference_tol: 1e-10,
            reference_max_iter: 1_000_000,
            include_fista: true,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSeries {
    pub label: String,
    pub alpha: f64,
    pub converged: bool,
    /// `(normalized iteration, ‖w_k − w_ref‖₂)`.
    pub points: Vec<(f64, f64)>,
}

impl DistanceSeries {
    /// Last recorded distance at or before normalized iteration `t`.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.points.iter().take_while(|p| p.0 <= t).last().map(|p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    pub reference: Vec<f64>,
    pub reference_converged: bool,
    pub series: Vec<DistanceSeries>,
}

/// Distance to a high-accuracy full Douglas–Rachford solution along runs
/// of each configuration (and FISTA for separable square-loss problems),
/// indexed by normalized iterations.
pub fn distance_study(
    problem: &ProblemSpec,
    configs: &[DrConfig],
    opts: &DistanceOptions,
) -> Result<DistanceReport> {
    let first = configs
        .first()
        .ok_or_else(|| Error::InvalidParameter("distance study needs a configuration".to_string()))?;
    let solver = DrSolver::new(problem)?;
    let ref_config = first
        .clone()
        .with_tol(opts.reference_tol)
        .with_max_iter(opts.reference_max_iter);
    let silent = RunOptions {
        reference: None,
        record_every: usize::MAX,
    };
    let (reference_run, _) = solver.run_full(&ref_config, &silent)?;
    let reference = reference_run.w;

    let run_opts = RunOptions {
        reference: Some(reference.clone()),
        record_every: opts.record_every,
    };
    let mut series = Vec::new();
    for c in configs {
        let (res, _) = solver.run(c, &run_opts)?;
        series.push(DistanceSeries {
            label: format!("dr alpha={}", c.alpha),
            alpha: c.alpha,
            converged: res.converged,
            points: collect_points(&res.trace),
        });
    }
    if opts.include_fista && problem.loss() == Loss::Square && PartitionProx::new(problem.norm()).is_ok() {
        let res = fista(problem, &GradientConfig::from(first), &run_opts)?;
        series.push(DistanceSeries {
            label: "fista".to_string(),
            alpha: 1.0,
            converged: res.converged,
            points: collect_points(&res.trace),
        });
    }
    Ok(DistanceReport {
        reference,
        reference_converged: reference_run.converged,
        series,
    })
}

fn collect_points(trace: &crate::solver::RunTrace) -> Vec<(f64, f64)> {
    trace
        .records()
        .iter()
        .filter_map(|r| r.dist_ref.map(|d| (r.norm_iter, d)))
        .collect()
}

impl DistanceReport {
    pub fn get(&self, label: &str) -> Option<&DistanceSeries> {
        self.series.iter().find(|s| s.label == label)
    }

    /// First normalized iteration at which series `a` is strictly closer to
    /// the reference than series `b`.
    pub fn crossing(&self, a: &str, b: &str) -> Option<f64> {
        let (sa, sb) = (self.get(a)?, self.get(b)?);
        sa.points
            .iter()
            .find(|&&(t, d)| sb.at(t).is_some_and(|db| d < db))
            .map(|p| p.0)
    }

    /// Long format: `series,alpha,norm_iter,dist`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["series", "alpha", "norm_iter", "dist"])?;
        for s in &self.series {
            for &(t, d) in &s.points {
                w.write_record([
                    s.label.clone(),
                    format_real(s.alpha),
                    format_real(t),
                    format_real(d),
                ])?;
            }
        }
        w.flush().map_err(Error::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Benchmark;
    use crate::solver::dr_full;

    #[test]
    fn series_shrink_and_full_rate_matches_dr_full() {
        let mut b = Benchmark::paper_lasso(3);
        b.data.n = 15;
        b.data.d = 30;
        let p = b.problem().unwrap();
        let base = DrConfig::new(0.5, 1.9).with_tol(1e-9).with_max_iter(50_000);
        let configs = [base.clone(), base.clone().with_alpha(0.5).with_seed(1)];
        let report = distance_study(&p, &configs, &DistanceOptions::default()).unwrap();
        assert!(report.reference_converged);
        assert_eq!(report.series.len(), 3);
        for s in &report.series {
            assert!(s.converged, "{}", s.label);
            assert!(s.points.last().unwrap().1 < 1e-3, "{}", s.label);
        }
        let full = dr_full(&p, &base).unwrap();
        let s = report.get("dr alpha=1").unwrap();
        assert_eq!(s.points.len(), full.trace.len());
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("series,alpha,norm_iter,dist\n"));
    }

    #[test]
    fn crossing_logic() {
        let report = DistanceReport {
            reference: vec![],
            reference_converged: true,
            series: vec![
                DistanceSeries {
                    label: "a".into(),
                    alpha: 1.0,
                    converged: true,
                    points: vec![(1.0, 5.0), (2.0, 1.0)],
                },
                DistanceSeries {
                    label: "b".into(),
                    alpha: 1.0,
                    converged: true,
                    points: vec![(1.0, 3.0), (2.0, 2.0)],
                },
            ],
        };
        assert_eq!(report.crossing("a", "b"), Some(2.0));
        assert_eq!(report.crossing("b", "a"), Some(1.0));
        assert_eq!(report.crossing("a", "missing"), None);
    }
}
