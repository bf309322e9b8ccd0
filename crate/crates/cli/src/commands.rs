use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};

use surfpinn::bench::{
    heat_content, patch_area, random_cases, relative_error_values, verify_theorem, SolverMode,
    DEFAULT_SMOOTHING, HEAT_RATE,
};
use surfpinn::geometry::SurfaceModel;
use surfpinn::irk::{gauss_legendre_tableau, order_check};
use surfpinn::network::MlpParams;
use surfpinn::sampling::evaluation_points;
use surfpinn::trainer::RunFiles;
use surfpinn::Error;

use crate::config::{RunConfig, RunRecord};
use crate::{EvalArgs, FdCheckArgs, ProblemArgs, TrainArgs, VerifyArgs};

pub const VERIFY_RESOLUTION: usize = 32;
const MANIFEST: &str = "manifest.toml";

/// 2 for aborted training, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::NonFiniteLoss(_) | Error::NonFiniteUpdate | Error::Diverged { .. }) => 2,
        _ => 1,
    }
}

fn run_config(args: &ProblemArgs) -> Result<RunConfig> {
    let mut c = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.problem {
        c.problem = p.clone();
    }
    if c.problem.is_empty() {
        bail!("no problem given: pass --problem or a config file");
    }
    let o = &mut c.overrides;
    o.stages = args.stages.or(o.stages);
    o.solution = args.solution.clone().or(o.solution.take());
    o.reference = args.reference.or(o.reference);
    o.surface_points = args.surface_points.or(o.surface_points);
    o.time_levels = args.time_levels.or(o.time_levels);
    if let Some(l) = &args.layers {
        c.network.layers = Some(l.clone());
    }
    c.run = None;
    Ok(c)
}

pub fn train(args: &TrainArgs, threads: Option<usize>) -> Result<ExitCode> {
    let mut c = run_config(&args.problem)?;
    if let Some(out) = &args.out {
        c.out = Some(out.clone());
    }
    if threads.is_some() {
        c.threads = threads;
    }
    let t = &mut c.training;
    t.iterations = args.iterations.or(t.iterations);
    t.learning_rate = args.learning_rate.or(t.learning_rate);
    t.batch_size = args.batch_size.or(t.batch_size);
    t.seed = args.seed.or(t.seed);
    t.log_every = args.log_every.or(t.log_every);
    if args.deterministic {
        t.deterministic = Some(true);
    }
    let out = c
        .out
        .clone()
        .ok_or_else(|| anyhow!("no output directory: pass --out or set `out`"))?;
    let mut resolved = c.resolved()?;
    let problem = resolved.problem_spec()?;
    let config = resolved.training_config(&problem)?;
    let params = resolved.initial_network(&problem)?;
    let files = RunFiles::new(&out)?;
    let manifest = out.join(MANIFEST);
    std::fs::write(&manifest, resolved.to_toml()?)?;

    info!(
        "training {} ({} parameters, {} iterations)",
        problem.name,
        params.param_count(),
        config.iterations
    );
    let set = problem.collocation()?;
    let outcome = problem.train(&set, params.clone(), &config, Some(&files))?;
    let last = outcome
        .log
        .last()
        .map(|r| r.loss.total)
        .unwrap_or(f64::NAN);
    resolved.run = Some(RunRecord {
        version: env!("CARGO_PKG_VERSION").to_string(),
        parameter_count: params.param_count(),
        iterations_completed: outcome.state.step,
        final_loss: last,
    });
    std::fs::write(&manifest, resolved.to_toml()?)?;
    info!("final loss {last:e}; run written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn default_times(horizon: f64, torus: bool) -> Vec<f64> {
    if torus {
        vec![0.0, 0.75, 1.5, 2.25, 3.0]
    } else {
        (1..=4).map(|k| horizon * k as f64 / 4.0).collect()
    }
}

pub fn eval(args: &EvalArgs) -> Result<ExitCode> {
    let c = run_config(&args.problem)?;
    let problem = c.problem_spec()?;
    let checkpoint = match (&args.checkpoint, &c.out) {
        (Some(p), _) => p.clone(),
        (None, Some(out)) => out.join("checkpoint.txt"),
        (None, None) => bail!("no checkpoint: pass --checkpoint or a run configuration with `out`"),
    };
    let params = MlpParams::load(&checkpoint)
        .with_context(|| format!("cannot load checkpoint {}", checkpoint.display()))?;
    problem.check_network(&params)?;
    let out = match &args.out {
        Some(o) => o.clone(),
        None => checkpoint
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    std::fs::create_dir_all(&out)?;
    let torus = !problem.surface.is_sphere_like();
    let times = args
        .times
        .clone()
        .unwrap_or_else(|| default_times(problem.horizon, torus));
    let n = args.points.unwrap_or(problem.counts.eval);
    let points = evaluation_points(&problem.surface, n, problem.seed)?;

    if problem.exact.is_none() {
        warn!("{} has no exact solution; writing field dumps only", problem.name);
    }
    let mut errors = csv::Writer::from_path(out.join("errors.csv"))?;
    errors.write_record(["t", "err", "n_eval", "seed"])?;
    for &t in &times {
        let pred = problem.predict(&params, &points, t)?;
        let exact: Option<Vec<f64>> = problem
            .exact
            .as_ref()
            .map(|e| points.iter().map(|x| e(x, t)).collect());
        let mut fields = csv::Writer::from_path(out.join(format!("fields_t{t}.csv")))?;
        fields.write_record(["x", "y", "z", "t", "u_pred", "u_exact", "abs_err"])?;
        for (i, x) in points.iter().enumerate() {
            let (ue, ae) = match &exact {
                Some(e) => (e[i].to_string(), (pred[i] - e[i]).abs().to_string()),
                None => (String::new(), String::new()),
            };
            fields.write_record([
                x[0].to_string(),
                x[1].to_string(),
                x[2].to_string(),
                t.to_string(),
                pred[i].to_string(),
                ue,
                ae,
            ])?;
        }
        fields.flush()?;
        if let Some(e) = &exact {
            match relative_error_values(&pred, e) {
                Ok(err) => {
                    println!("t = {t}: Err = {err:e}");
                    errors.write_record([t.to_string(), err.to_string(), n.to_string(), problem.seed.to_string()])?;
                }
                Err(Error::ZeroDenominator(_)) => warn!("t = {t}: exact solution vanishes, no error"),
                Err(e) => return Err(e.into()),
            }
        }
        if torus {
            let heat = heat_content(&params, &problem, t, 256)?;
            let eps = c.overrides.smoothing.unwrap_or(DEFAULT_SMOOTHING);
            let target = HEAT_RATE * patch_area(512, eps)? * t;
            println!("t = {t}: heat content {heat:.6} (source total {target:.6})");
        }
    }
    errors.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    let surface = match args.surface.as_str() {
        "sphere" => SurfaceModel::unit_sphere(),
        "torus" => SurfaceModel::benchmark_torus(),
        s => bail!("unknown surface `{s}` (expected sphere or torus)"),
    };
    let rows = verify_theorem(&surface, &random_cases(args.trials, args.seed), args.resolution)?;
    std::fs::create_dir_all(&args.out)?;
    let mut w = csv::Writer::from_path(args.out.join("theorem.csv"))?;
    w.write_record(["trial", "estimate", "lhs", "rhs", "constant", "margin", "holds"])?;
    for r in &rows {
        w.write_record([
            (r.trial / 3).to_string(),
            r.estimate.index().to_string(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.constant.to_string(),
            r.margin.to_string(),
            r.holds().to_string(),
        ])?;
    }
    w.flush()?;
    let failed = rows.iter().filter(|r| !r.holds()).count();
    let worst = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    println!(
        "{}: {} rows, {} failed, worst margin {worst:e}",
        args.surface,
        rows.len(),
        failed
    );
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

pub fn tableau(stages: usize) -> Result<ExitCode> {
    let t = gauss_legendre_tableau(stages)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "Gauss-Legendre, q = {}", t.q)?;
    for i in 0..t.q {
        write!(out, "{:>22.16} |", t.c[i])?;
        for a in t.row(i) {
            write!(out, " {a:>22.16}")?;
        }
        writeln!(out)?;
    }
    write!(out, "{:>22} |", "")?;
    for b in &t.b {
        write!(out, " {b:>22.16}")?;
    }
    writeln!(out)?;
    writeln!(out, "order residual {:e}", order_check(&t, 2 * t.q))?;
    Ok(ExitCode::SUCCESS)
}

pub fn fd_check(args: &FdCheckArgs) -> Result<ExitCode> {
    let (depth, width) = args
        .shape
        .split_once('x')
        .and_then(|(d, w)| Some((d.parse::<usize>().ok()?, w.parse::<usize>().ok()?)))
        .ok_or_else(|| anyhow!("shape `{}` is not of the form <layers>x<width>", args.shape))?;
    let problem = surfpinn::bench::problem(&args.problem)?;
    let mut layers = vec![problem.input_dim()];
    layers.extend(std::iter::repeat(width).take(depth));
    layers.push(problem.output_dim());
    let params = MlpParams::init(&layers, args.seed)?;
    let set = problem.collocation()?;
    let r = problem.fd_check(&set, &params, args.points, args.step)?;
    let mode = match problem.mode {
        SolverMode::Continuous => "continuous",
        SolverMode::Discrete { .. } => "discrete",
    };
    println!(
        "{mode} loss, layers {layers:?}, {} points: max relative discrepancy {:e} at parameter {} (analytic {:e}, finite difference {:e})",
        args.points, r.max_relative, r.worst_index, r.analytic, r.finite_difference
    );
    Ok(ExitCode::SUCCESS)
}
