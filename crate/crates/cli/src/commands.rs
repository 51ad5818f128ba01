use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use interpnorm::harness::{
    distance_study, generate, run_sweep, threads_from_env, Benchmark, DataGenSpec, DistanceOptions,
    SweepReport, SweepSpec,
};
use interpnorm::io::{load_problem, read_matrix, write_vector, BuiltNorm, NormSpec};
use interpnorm::linalg::dematricize;
use interpnorm::solver::{fista, forward_backward, DrConfig, DrSolver, GradientConfig, RunOptions};
use interpnorm::{Error, Loss, PrimalOptions, ProblemSpec, SolveResult};

use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::{Algo, BenchArgs, Cli, Command, EvalArgs, GenDataArgs, ReplayArgs, Scale, SolveArgs, SweepArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Invalid,
    NotConverged,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Invalid => 2,
            Status::NotConverged => 3,
        }
    }

    fn from_converged(converged: bool) -> Self {
        if converged {
            Status::Ok
        } else {
            Status::NotConverged
        }
    }
}

pub fn dispatch(command: Command, argv: Vec<String>) -> Result<Status> {
    match command {
        Command::EvalNorm(a) => eval_norm(a, &argv),
        Command::EvalDual(a) => eval_norm(EvalArgs { dual: true, ..a }, &argv),
        Command::Solve(a) => solve(a, &argv),
        Command::Sweep(a) => sweep(a, &argv),
        Command::GenData(a) => gen_data(a, &argv),
        Command::Bench(a) => bench(a, &argv),
        Command::Replay(a) => replay(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

/// Sets `key` in a JSON object when the flag was given; flags win over
/// file values.
fn override_field<T: serde::Serialize>(obj: &mut Value, key: &str, flag: Option<T>) -> Result<()> {
    if let Some(v) = flag {
        let Value::Object(map) = obj else {
            bail!("configuration must be a JSON object")
        };
        map.insert(key.to_string(), serde_json::to_value(v)?);
    }
    Ok(())
}

fn threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(threads_from_env)
}

// ---------------------------------------------------------------- eval-norm

fn read_point(path: &Path, spec: &NormSpec) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.rows() == 1 || m.cols() == 1 {
        return Ok(m.into_data());
    }
    match spec.tensor_shape() {
        Some(shape) => Ok(dematricize(&m, shape, 0)?),
        None => bail!(
            "{}: expected a vector, found a {}x{} matrix",
            path.display(),
            m.rows(),
            m.cols()
        ),
    }
}

fn eval_norm(args: EvalArgs, argv: &[String]) -> Result<Status> {
    let spec = NormSpec::from_path(&args.norm)?;
    let built = spec.build()?;
    let w = read_point(&args.vector, &spec)?;
    if w.len() != built.dim() {
        return Err(Error::DimensionMismatch {
            context: "vector length",
            expected: built.dim(),
            got: w.len(),
        }
        .into());
    }
    if args.dual && args.decompose.is_some() {
        bail!("--decompose applies to the primal norm only");
    }
    let mut opts = PrimalOptions::default();
    if let Some(t) = args.tol {
        opts.gap_tol = t;
    }
    if let Some(n) = args.max_iter {
        opts.max_iter = n;
    }

    let norm = match built {
        BuiltNorm::Overlapped(on, _) => {
            if args.dual || args.decompose.is_some() {
                return Err(Error::Unsupported(
                    "the overlapped nuclear norm supports primal evaluation only".to_string(),
                )
                .into());
            }
            println!("{:?}", on.value(&w)?);
            return Ok(Status::Ok);
        }
        BuiltNorm::Interpolation(n) => n,
    };
    if args.dual {
        println!("{:?}", norm.dual_eval(&w)?);
        return Ok(Status::Ok);
    }
    let (value, decomposition, status) = match norm.primal_eval(&w, &opts) {
        Ok(sol) => (sol.value, sol.decomposition, Status::Ok),
        Err(Error::NotConverged { value, best, .. }) => {
            eprintln!("warning: evaluation stopped at the iteration cap");
            (value, best, Status::NotConverged)
        }
        Err(e) => return Err(e.into()),
    };
    println!("{value:?}");
    if let Some(path) = &args.decompose {
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        create_dir(dir)?;
        write_vector(path, &decomposition)?;
        let params = json!({
            "dual": false,
            "gap_tol": opts.gap_tol,
            "max_iter": opts.max_iter,
            "value": value,
        });
        RunManifest::new(
            "eval-norm",
            argv,
            params,
            None,
            &[args.norm.clone(), args.vector.clone()],
        )?
        .write(dir)?;
    }
    Ok(status)
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Deserialize)]
struct GradientFields {
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
}

fn default_tol() -> f64 {
    DrConfig::new(1.0, 1.0).tol
}

fn default_max_iter() -> usize {
    DrConfig::new(1.0, 1.0).max_iter
}

fn solve(args: SolveArgs, argv: &[String]) -> Result<Status> {
    let loaded = load_problem(&args.problem)?;
    let problem = &loaded.problem;
    let mut config = read_json(&args.config)?;
    override_field(&mut config, "gamma", args.gamma)?;
    override_field(&mut config, "mu", args.mu)?;
    override_field(&mut config, "alpha", args.alpha)?;
    override_field(&mut config, "seed", args.seed)?;
    override_field(&mut config, "tol", args.tol)?;
    override_field(&mut config, "max_iter", args.max_iter)?;

    let opts = RunOptions {
        reference: None,
        record_every: args.record_every,
    };
    let (result, params, seed) = match args.algo {
        Algo::Dr | Algo::DrRandom => {
            let cfg: DrConfig = serde_json::from_value(config)
                .with_context(|| format!("invalid solver configuration {}", args.config.display()))?;
            cfg.validate()?;
            let solver = DrSolver::new(problem)?;
            let (res, _) = if args.algo == Algo::Dr {
                solver.run_full(&cfg, &opts)?
            } else {
                solver.run(&cfg, &opts)?
            };
            (res, serde_json::to_value(&cfg)?, Some(cfg.seed))
        }
        Algo::Fista | Algo::Fb => {
            let f: GradientFields = serde_json::from_value(config)
                .with_context(|| format!("invalid solver configuration {}", args.config.display()))?;
            let g = GradientConfig {
                tol: f.tol,
                max_iter: f.max_iter,
            };
            let res = if args.algo == Algo::Fista {
                fista(problem, &g, &opts)?
            } else {
                forward_backward(problem, &g, &opts)?
            };
            (res, serde_json::to_value(g)?, None)
        }
    };

    create_dir(&args.out)?;
    write_solution(&args.out, problem, &result)?;
    if let Some(path) = &args.trace {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        result.trace.write_csv(file)?;
    }
    let algo = format!("{:?}", args.algo).to_lowercase();
    let params = json!({ "algo": algo, "config": params, "record_every": args.record_every });
    RunManifest::new("solve", argv, params, seed, &loaded.inputs)?.write(&args.out)?;

    println!(
        "objective {:?}, {} iterations, {}",
        result.objective,
        result.iterations,
        if result.converged {
            "converged"
        } else {
            "not converged"
        }
    );
    Ok(Status::from_converged(result.converged))
}

fn write_solution(dir: &Path, problem: &ProblemSpec, result: &SolveResult) -> Result<()> {
    write_vector(&dir.join("solution.csv"), &result.w)?;
    if let Some(v) = &result.v {
        write_vector(&dir.join("decomposition.csv"), v)?;
    }
    let mut summary = json!({
        "objective": result.objective,
        "iterations": result.iterations,
        "converged": result.converged,
    });
    if problem.loss() == Loss::Hinge {
        summary["training_error"] = json!(problem.training_error(&result.w)?);
    }
    write_json(&dir.join("summary.json"), &summary)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PresetName {
    DeskHinge,
    PaperHinge,
    PaperLasso,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ProblemRef {
    Path(PathBuf),
    Preset {
        preset: PresetName,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    problem: ProblemRef,
    rates: Vec<f64>,
    base: Value,
    #[serde(default)]
    repetitions: Option<usize>,
    #[serde(default)]
    base_seed: Option<u64>,
    /// Rates for an additional distance-to-solution study.
    #[serde(default)]
    distance_rates: Option<Vec<f64>>,
}

fn preset(name: PresetName, seed: u64) -> Benchmark {
    match name {
        PresetName::DeskHinge => Benchmark::desk_hinge(seed),
        PresetName::PaperHinge => Benchmark::paper_hinge(seed),
        PresetName::PaperLasso => Benchmark::paper_lasso(seed),
    }
}

fn sweep(args: SweepArgs, argv: &[String]) -> Result<Status> {
    let file: SweepFile = serde_json::from_value(read_json(&args.spec)?)
        .with_context(|| format!("invalid sweep description {}", args.spec.display()))?;
    let mut inputs = vec![args.spec.clone()];
    let problem = match &file.problem {
        ProblemRef::Path(p) => {
            let p = if p.is_absolute() {
                p.clone()
            } else {
                args.spec.parent().unwrap_or(Path::new(".")).join(p)
            };
            let loaded = load_problem(&p)?;
            inputs.extend(loaded.inputs);
            loaded.problem
        }
        ProblemRef::Preset { preset: name, seed } => preset(*name, *seed).problem()?,
    };
    let base: DrConfig = serde_json::from_value(file.base.clone()).context("invalid `base` configuration")?;
    let spec = SweepSpec {
        rates: file.rates.clone(),
        base,
        repetitions: args.repetitions.or(file.repetitions).unwrap_or(3),
        base_seed: args.base_seed.or(file.base_seed).unwrap_or(0),
    }
    .normalized()?;

    create_dir(&args.out)?;
    let report = run_sweep(&problem, &spec, threads(args.threads))?;
    write_sweep(&args.out, &report)?;
    let mut converged = report.runs.iter().all(|r| r.converged);
    if let Some(rates) = &file.distance_rates {
        converged &= write_distance(&args.out, &problem, &spec.base, rates)?;
    }
    let params = json!({ "sweep": spec, "distance_rates": file.distance_rates });
    RunManifest::new("sweep", argv, params, Some(spec.base_seed), &inputs)?.write(&args.out)?;
    print!("{}", report.markdown());
    Ok(Status::from_converged(converged))
}

fn write_sweep(dir: &Path, report: &SweepReport) -> Result<()> {
    let file = fs::File::create(dir.join("sweep.csv"))?;
    report.write_csv(file)?;
    fs::write(dir.join("table.md"), report.markdown())?;
    Ok(())
}

/// Writes `distance.csv`; returns whether every series converged.
fn write_distance(dir: &Path, problem: &ProblemSpec, base: &DrConfig, rates: &[f64]) -> Result<bool> {
    let configs: Vec<DrConfig> = rates.iter().map(|&a| base.clone().with_alpha(a)).collect();
    let report = distance_study(problem, &configs, &DistanceOptions::default())?;
    report.write_csv(fs::File::create(dir.join("distance.csv"))?)?;
    for s in &report.series {
        if let Some(&(t, d)) = s.points.last() {
            println!("{}: distance {d:.3e} after {t} normalized iterations", s.label);
        }
    }
    if report.get("fista").is_some() {
        for s in report.series.iter().filter(|s| s.label != "fista") {
            match report.crossing(&s.label, "fista") {
                Some(t) => println!(
                    "{} is closer to the solution than fista from normalized iteration {t}",
                    s.label
                ),
                None => println!("{} never gets closer to the solution than fista", s.label),
            }
        }
    }
    Ok(report.reference_converged && report.series.iter().all(|s| s.converged))
}

// ---------------------------------------------------------------- gen-data

fn gen_data(args: GenDataArgs, argv: &[String]) -> Result<Status> {
    let mut spec = read_json(&args.spec)?;
    override_field(&mut spec, "seed", args.seed)?;
    let spec: DataGenSpec = serde_json::from_value(spec)
        .with_context(|| format!("invalid data recipe {}", args.spec.display()))?;
    let data = generate(&spec)?;
    create_dir(&args.out)?;
    interpnorm::io::write_matrix(&args.out.join("A.csv"), &data.a)?;
    write_vector(&args.out.join("b.csv"), &data.targets)?;
    write_vector(&args.out.join("w.csv"), &data.w_true)?;
    RunManifest::new(
        "gen-data",
        argv,
        serde_json::to_value(&spec)?,
        Some(spec.seed),
        std::slice::from_ref(&args.spec),
    )?
    .write(&args.out)?;
    println!("{} x {} written to {}", spec.n, spec.d, args.out.display());
    Ok(Status::Ok)
}

// ---------------------------------------------------------------- bench

fn bench(args: BenchArgs, argv: &[String]) -> Result<Status> {
    let hinge = match args.scale {
        Scale::Desk => Benchmark::desk_hinge(args.seed),
        Scale::Paper => Benchmark::paper_hinge(args.seed),
    };
    let problem = hinge.problem()?;
    let base = hinge.config.clone().with_max_iter(2_000_000);
    let spec = SweepSpec {
        repetitions: args.repetitions,
        base_seed: args.seed,
        ..SweepSpec::new(args.rates.clone(), base)
    }
    .normalized()?;
    create_dir(&args.out)?;
    let report = run_sweep(&problem, &spec, threads(args.threads))?;
    write_sweep(&args.out, &report)?;
    print!("{}", report.markdown());
    println!("normalized iterations max/min: {:.3}", report.normalized_spread());
    let mut converged = report.runs.iter().all(|r| r.converged);

    let mut params = Map::new();
    params.insert("hinge".to_string(), serde_json::to_value(&hinge)?);
    params.insert("sweep".to_string(), serde_json::to_value(&spec)?);
    if !args.no_distance {
        let lasso = Benchmark::paper_lasso(args.seed);
        let base = lasso.config.clone().with_tol(1e-9).with_max_iter(200_000);
        converged &= write_distance(&args.out, &lasso.problem()?, &base, &[1.0, 0.5, 0.1])?;
        params.insert("lasso".to_string(), serde_json::to_value(&lasso)?);
    }
    RunManifest::new("bench", argv, Value::Object(params), Some(args.seed), &[])?.write(&args.out)?;
    Ok(Status::from_converged(converged))
}

// ---------------------------------------------------------------- replay

/// Points the output location of a parsed command at `dir`, returning the
/// old and new argument values so the recorded argv can be rewritten.
fn redirect(command: &mut Command, dir: &Path) -> Result<(&'static str, PathBuf)> {
    let out = match command {
        Command::Solve(a) => &mut a.out,
        Command::Sweep(a) => &mut a.out,
        Command::GenData(a) => &mut a.out,
        Command::Bench(a) => &mut a.out,
        Command::EvalNorm(a) | Command::EvalDual(a) => {
            let Some(p) = &mut a.decompose else {
                bail!("this run wrote no output directory")
            };
            let name = p
                .file_name()
                .map(PathBuf::from)
                .unwrap_or_else(|| "decomposition.csv".into());
            *p = dir.join(name);
            return Ok(("--decompose", p.clone()));
        }
        Command::Replay(_) => bail!("cannot replay a replay"),
    };
    *out = dir.to_path_buf();
    Ok(("--out", out.clone()))
}

fn rewrite_argv(argv: &mut [String], flag: &str, value: &Path) {
    let prefix = format!("{flag}=");
    for i in 0..argv.len() {
        if argv[i] == flag && i + 1 < argv.len() {
            argv[i + 1] = value.display().to_string();
        } else if argv[i].starts_with(&prefix) {
            argv[i] = format!("{prefix}{}", value.display());
        }
    }
}

fn replay(args: ReplayArgs) -> Result<Status> {
    let path = if args.manifest.is_dir() {
        args.manifest.join(MANIFEST_FILE)
    } else {
        args.manifest.clone()
    };
    let manifest = RunManifest::read(&path)?;
    let out = args.out.map(std::path::absolute).transpose()?;
    std::env::set_current_dir(&manifest.cwd)
        .with_context(|| format!("entering recorded directory {}", manifest.cwd.display()))?;
    let changed = manifest.changed_inputs()?;
    if !changed.is_empty() {
        bail!(
            "inputs changed since the recorded run: {}",
            changed
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    let mut argv = manifest.argv.clone();
    let mut command = Cli::try_parse_from(&argv)
        .with_context(|| format!("recorded arguments no longer parse: {:?}", manifest.argv))?
        .command;
    if let Some(dir) = out {
        let (flag, value) = redirect(&mut command, &dir)?;
        rewrite_argv(&mut argv, flag, &value);
    }
    if manifest.version != crate::manifest::version() {
        eprintln!(
            "warning: recorded with {}, replaying with {}",
            manifest.version,
            crate::manifest::version()
        );
    }
    dispatch(command, argv)
}
