//! Benchmark problems, the relative-error metric and derived diagnostics.

mod theorem;

pub use theorem::{
    random_cases, sup_abs_mean_curvature, verify_theorem, Estimate, Extension, TheoremCase,
    TheoremRow, SLACK_ABS, SLACK_REL,
};

use std::fmt;
use std::sync::Arc;

use crate::diffengine::{FdReport, ParamGradient, Reduction};
use crate::error::{Error, Result};
use crate::geometry::{FdOracle, Point, QuadratureRule, SurfaceModel};
use crate::irk::{gauss_legendre_tableau, ButcherTableau};
use crate::network::{continuous_preset, discrete_preset, MlpParams};
use crate::residuals::{
    evaluate_loss, fd_check_loss, rescale_time, ContinuousLoss, DiscreteLoss, LossWeights, PdeRhs, Provenance, TimeRescale,
};
use crate::sampling::{continuous_set, discrete_set, CollocationSet, SampleCounts};
use crate::trainer::{train_loss, AdamState, RunFiles, TrainOutcome, TrainingConfig};

pub type ScalarField = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type SpaceTimeField = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;

/// Step used for the time derivative of manufactured solutions.
const TIME_STEP: f64 = 1e-5;

/// Centre and radius of the heated patch on the torus.
pub const HEAT_CENTRE: Point = [0.0, 1.0, 0.0];
pub const HEAT_RADIUS: f64 = 0.25;
pub const HEAT_RATE: f64 = 100.0;
pub const DEFAULT_SMOOTHING: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverMode {
    Continuous,
    /// One implicit Runge–Kutta step across the whole horizon, optionally
    /// rescaled to a reference horizon `T̃ < 1`.
    Discrete { stages: usize, reference: Option<f64> },
}

/// Closed-form solutions used by the benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactSolution {
    /// `u = x₁x₂x₃eᵗ`
    ProductExp,
    /// `u = x₁ sin(t x₂) + x₃`
    TrigShift,
}

impl ExactSolution {
    pub fn name(self) -> &'static str {
        match self {
            ExactSolution::ProductExp => "product-exp",
            ExactSolution::TrigShift => "trig-shift",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "product-exp" => Ok(ExactSolution::ProductExp),
            "trig-shift" => Ok(ExactSolution::TrigShift),
            _ => Err(Error::InvalidConfig(format!("unknown exact solution `{s}`"))),
        }
    }

    pub fn value(self, x: &Point, t: f64) -> f64 {
        match self {
            ExactSolution::ProductExp => x[0] * x[1] * x[2] * t.exp(),
            ExactSolution::TrigShift => x[0] * (t * x[1]).sin() + x[2],
        }
    }

    pub fn field(self) -> SpaceTimeField {
        Arc::new(move |x, t| self.value(x, t))
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub surface: SurfaceModel,
    pub mode: SolverMode,
    pub horizon: f64,
    pub rhs: PdeRhs,
    pub u0: ScalarField,
    pub exact: Option<SpaceTimeField>,
    pub solution: Option<ExactSolution>,
    pub counts: SampleCounts,
    pub seed: u64,
    /// The network represents `u / output_scale`.
    pub output_scale: f64,
    pub weights: LossWeights,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("surface", &self.surface)
            .field("mode", &self.mode)
            .field("horizon", &self.horizon)
            .field("rhs", &self.rhs)
            .field("solution", &self.solution)
            .field("counts", &self.counts)
            .field("seed", &self.seed)
            .field("output_scale", &self.output_scale)
            .finish()
    }
}

/// `f = ∂ₜu − Δ_Γu` from the operator oracle and a central difference in time.
pub fn manufactured_forcing(surface: &SurfaceModel, exact: SpaceTimeField) -> PdeRhs {
    let surface = surface.clone();
    PdeRhs::new(
        move |x, t| {
            let dt = (exact(x, t + TIME_STEP) - exact(x, t - TIME_STEP)) / (2.0 * TIME_STEP);
            let slice = |y: &Point| exact(y, t);
            match FdOracle::new(&surface).laplace_beltrami(&slice, x) {
                Ok(lb) => dt - lb,
                Err(_) => f64::NAN,
            }
        },
        Provenance::OracleManufactured,
    )
}

/// `100·½(1 + tanh((0.25 − |x − (0,1,0)|)/ε))`; `ε = 0` gives the sharp
/// indicator of the patch.
pub fn torus_forcing(x: &Point, smoothing: f64) -> f64 {
    let d = ((x[0] - HEAT_CENTRE[0]).powi(2)
        + (x[1] - HEAT_CENTRE[1]).powi(2)
        + (x[2] - HEAT_CENTRE[2]).powi(2))
    .sqrt();
    if smoothing == 0.0 {
        if d <= HEAT_RADIUS {
            HEAT_RATE
        } else {
            0.0
        }
    } else {
        HEAT_RATE * 0.5 * (1.0 + ((HEAT_RADIUS - d) / smoothing).tanh())
    }
}

fn exact_problem(
    name: &str,
    mode: SolverMode,
    horizon: f64,
    solution: ExactSolution,
    counts: SampleCounts,
) -> ProblemSpec {
    let surface = SurfaceModel::unit_sphere();
    let exact = solution.field();
    let u0 = {
        let e = exact.clone();
        Arc::new(move |x: &Point| e(x, 0.0)) as ScalarField
    };
    ProblemSpec {
        name: name.to_string(),
        rhs: manufactured_forcing(&surface, exact.clone()),
        surface,
        mode,
        horizon,
        u0,
        exact: Some(exact),
        solution: Some(solution),
        counts,
        seed: 20_200_101,
        output_scale: 1.0,
        weights: LossWeights::default(),
    }
}

pub const PROBLEM_NAMES: [&str; 4] = [
    "sphere-continuous",
    "torus-heating",
    "sphere-discrete-short",
    "sphere-discrete-long",
];

/// The four benchmark problems at their full default sizes.
pub fn registry() -> Vec<ProblemSpec> {
    PROBLEM_NAMES.iter().map(|n| problem(n).unwrap()).collect()
}

pub fn problem(name: &str) -> Result<ProblemSpec> {
    let discrete_counts = SampleCounts {
        surface_points: 500,
        time_levels: 1,
        initial: 500,
        eval: 10_000,
    };
    match name {
        "sphere-continuous" => Ok(exact_problem(
            name,
            SolverMode::Continuous,
            1.0,
            ExactSolution::TrigShift,
            SampleCounts {
                surface_points: 500,
                time_levels: 100,
                initial: 500,
                eval: 10_000,
            },
        )),
        "sphere-discrete-short" => Ok(exact_problem(
            name,
            SolverMode::Discrete {
                stages: 8,
                reference: None,
            },
            0.5,
            ExactSolution::ProductExp,
            discrete_counts,
        )),
        "sphere-discrete-long" => Ok(exact_problem(
            name,
            SolverMode::Discrete {
                stages: 8,
                reference: Some(0.5),
            },
            3.0,
            ExactSolution::ProductExp,
            discrete_counts,
        )),
        "torus-heating" => Ok(torus_heating(DEFAULT_SMOOTHING)),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

pub fn torus_heating(smoothing: f64) -> ProblemSpec {
    ProblemSpec {
        name: "torus-heating".to_string(),
        surface: SurfaceModel::benchmark_torus(),
        mode: SolverMode::Continuous,
        horizon: 3.0,
        rhs: PdeRhs::new(move |x, _| torus_forcing(x, smoothing), Provenance::Analytic),
        u0: Arc::new(|_| 0.0),
        exact: None,
        solution: None,
        counts: SampleCounts {
            surface_points: 50_000,
            time_levels: 1,
            initial: 1_000,
            eval: 10_000,
        },
        seed: 20_200_101,
        output_scale: 1.0,
        weights: LossWeights::default(),
    }
}

impl ProblemSpec {
    /// Swap in another closed-form solution (forcing and initial data follow).
    pub fn with_solution(mut self, solution: ExactSolution) -> Self {
        let exact = solution.field();
        let e = exact.clone();
        self.u0 = Arc::new(move |x| e(x, 0.0));
        self.rhs = manufactured_forcing(&self.surface, exact.clone());
        self.exact = Some(exact);
        self.solution = Some(solution);
        self
    }

    pub fn stages(&self) -> Option<usize> {
        match self.mode {
            SolverMode::Continuous => None,
            SolverMode::Discrete { stages, .. } => Some(stages),
        }
    }

    pub fn default_layers(&self) -> Vec<usize> {
        match self.stages() {
            None => continuous_preset(),
            Some(q) => discrete_preset(q),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.stages().map_or(1, |q| q + 1)
    }

    pub fn input_dim(&self) -> usize {
        if self.stages().is_some() {
            3
        } else {
            4
        }
    }

    pub fn tableau(&self) -> Result<Option<ButcherTableau>> {
        self.stages().map(gauss_legendre_tableau).transpose()
    }

    pub fn time_map(&self) -> Result<TimeRescale> {
        match self.mode {
            SolverMode::Discrete {
                reference: Some(r), ..
            } => rescale_time(self.horizon, r),
            _ => Ok(TimeRescale::identity(self.horizon)),
        }
    }

    pub fn collocation(&self) -> Result<CollocationSet> {
        match self.mode {
            SolverMode::Continuous => continuous_set(&self.surface, self.horizon, self.counts, self.seed),
            SolverMode::Discrete { .. } => discrete_set(&self.surface, self.horizon, self.counts, self.seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.output_scale > 0.0 && self.output_scale.is_finite()) {
            return Err(Error::InvalidConfig("output_scale must be positive".into()));
        }
        self.tableau()?;
        self.time_map()?;
        Ok(())
    }

    pub fn check_network(&self, params: &MlpParams) -> Result<()> {
        if params.input_dim() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim(),
                found: params.input_dim(),
            });
        }
        if params.output_dim() != self.output_dim() {
            return Err(Error::TableauMismatch {
                heads: params.output_dim(),
                expected: self.output_dim(),
            });
        }
        Ok(())
    }

    fn normals(&self, pts: impl Iterator<Item = Point>) -> Result<Vec<Point>> {
        pts.map(|x| self.surface.normal(&x)).collect()
    }

    pub fn continuous_loss(&self, set: &CollocationSet) -> Result<ContinuousLoss> {
        let s = self.output_scale;
        Ok(ContinuousLoss {
            interior_normals: self.normals(set.interior.iter().map(|p| p.0))?,
            forcing: set.interior.iter().map(|(x, t)| self.rhs.eval(x, *t) / s).collect(),
            interior: set.interior.clone(),
            initial_normals: self.normals(set.initial.iter().copied())?,
            initial_values: set.initial.iter().map(|x| (self.u0)(x) / s).collect(),
            initial: set.initial.clone(),
            horizon: self.horizon,
            weights: self.weights,
        })
    }

    pub fn discrete_loss(&self, set: &CollocationSet) -> Result<DiscreteLoss> {
        let tableau = self
            .tableau()?
            .ok_or_else(|| Error::InvalidConfig("problem is not in discrete mode".into()))?;
        let map = self.time_map()?;
        let s = self.output_scale;
        let points: Vec<Point> = set.interior.iter().map(|p| p.0).collect();
        let mut forcing = Vec::with_capacity(points.len() * tableau.q);
        for x in &points {
            for c in &tableau.c {
                forcing.push(self.rhs.eval(x, c * self.horizon) / s);
            }
        }
        Ok(DiscreteLoss {
            normals: self.normals(points.iter().copied())?,
            initial_values: points.iter().map(|x| (self.u0)(x) / s).collect(),
            points,
            forcing,
            dt: map.scaled_time(self.horizon),
            multiplier: map.multiplier(),
            tableau,
            weights: self.weights,
        })
    }

    /// Network prediction of `u(x, t)` at surface points.
    pub fn predict(&self, params: &MlpParams, points: &[Point], t: f64) -> Result<Vec<f64>> {
        self.check_network(params)?;
        let s = self.output_scale;
        match self.mode {
            SolverMode::Continuous => {
                let tau = t / self.horizon;
                let inputs: Vec<f64> = points
                    .iter()
                    .flat_map(|x| [x[0], x[1], x[2], tau])
                    .collect();
                Ok(params.forward_batch(&inputs)?.into_iter().map(|v| v * s).collect())
            }
            SolverMode::Discrete { stages, .. } => {
                let tableau = gauss_legendre_tableau(stages)?;
                let mut times = vec![0.0];
                times.extend(tableau.c.iter().map(|c| c * self.horizon));
                times.push(self.horizon);
                let inputs: Vec<f64> = points.iter().flat_map(|x| *x).collect();
                let heads = params.forward_batch(&inputs)?;
                let m = stages + 1;
                Ok(points
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let mut values = vec![(self.u0)(x)];
                        values.extend(heads[i * m..(i + 1) * m].iter().map(|v| v * s));
                        interpolate(&times, &values, t)
                    })
                    .collect())
            }
        }
    }

    /// Train on `set`, starting from `params`, with a fresh optimizer.
    pub fn train(
        &self,
        set: &CollocationSet,
        params: MlpParams,
        config: &TrainingConfig,
        files: Option<&RunFiles>,
    ) -> Result<TrainOutcome> {
        let state = AdamState::new(params.param_count());
        self.train_from(set, params, state, config, files)
    }

    pub fn train_from(
        &self,
        set: &CollocationSet,
        params: MlpParams,
        state: AdamState,
        config: &TrainingConfig,
        files: Option<&RunFiles>,
    ) -> Result<TrainOutcome> {
        self.validate()?;
        self.check_network(&params)?;
        match self.mode {
            SolverMode::Continuous => {
                train_loss(&self.continuous_loss(set)?, params, state, config, files)
            }
            SolverMode::Discrete { .. } => {
                train_loss(&self.discrete_loss(set)?, params, state, config, files)
            }
        }
    }

    /// Loss gradient over the whole collocation set.
    pub fn full_gradient(&self, set: &CollocationSet, params: &MlpParams) -> Result<ParamGradient> {
        let r = match self.mode {
            SolverMode::Continuous => {
                evaluate_loss(&self.continuous_loss(set)?, params, None, true, Reduction::Ordered)?
            }
            SolverMode::Discrete { .. } => {
                evaluate_loss(&self.discrete_loss(set)?, params, None, true, Reduction::Ordered)?
            }
        };
        Ok(r.1)
    }

    /// Finite-difference check of the full loss gradient at `points`
    /// collocation points spread evenly over the set (all groups included).
    pub fn fd_check(
        &self,
        set: &CollocationSet,
        params: &MlpParams,
        points: usize,
        step: f64,
    ) -> Result<FdReport> {
        self.check_network(params)?;
        let total = set.interior.len() + set.initial.len();
        if points == 0 || points > total {
            return Err(Error::InvalidCount { got: points, min: 1 });
        }
        let ids: Vec<usize> = (0..points).map(|k| k * (total - 1) / (points - 1).max(1)).collect();
        match self.mode {
            SolverMode::Continuous => fd_check_loss(&self.continuous_loss(set)?, params, &ids, step),
            SolverMode::Discrete { .. } => fd_check_loss(&self.discrete_loss(set)?, params, &ids, step),
        }
    }
}

/// Value at `t` from samples at `times`: exact at a node, otherwise the cubic
/// through the four nearest nodes (fewer if fewer exist).
pub fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    if let Some(i) = times.iter().position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs())) {
        return values[i];
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()));
    let nodes = &order[..order.len().min(4)];
    nodes
        .iter()
        .map(|&j| {
            let w: f64 = nodes
                .iter()
                .filter(|&&m| m != j)
                .map(|&m| (t - times[m]) / (times[j] - times[m]))
                .product();
            w * values[j]
        })
        .sum()
}

/// `‖u_h − u‖ / ‖u‖` over the given points.
pub fn relative_error(
    params: &MlpParams,
    problem: &ProblemSpec,
    points: &[Point],
    t: f64,
) -> Result<f64> {
    let exact = problem.exact.as_ref().ok_or(Error::NoExactSolution)?;
    let pred = problem.predict(params, points, t)?;
    let truth: Vec<f64> = points.iter().map(|x| exact(x, t)).collect();
    relative_error_values(&pred, &truth)
}

pub fn relative_error_values(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let den: f64 = truth.iter().map(|u| u * u).sum();
    if den < 1e-30 {
        return Err(Error::ZeroDenominator(den));
    }
    let num: f64 = pred.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((num / den).sqrt())
}

/// `∫_Γ u_h(·, t) dA`.
pub fn heat_content(
    params: &MlpParams,
    problem: &ProblemSpec,
    t: f64,
    resolution: usize,
) -> Result<f64> {
    let rule = QuadratureRule::new(&problem.surface, resolution)?;
    let values = problem.predict(params, &rule.nodes, t)?;
    Ok(rule.integrate_values(&values))
}

/// `|G| = ∫ χ_G dA` for the (regularised) indicator of the heated patch.
///
/// The patch centre lies on the core circle at exactly the tube radius from
/// the surface, so the sharp set is a single meridian circle and its area
/// vanishes; only the regularised indicator has positive mass.
pub fn patch_area(resolution: usize, smoothing: f64) -> Result<f64> {
    let rule = QuadratureRule::new(&SurfaceModel::benchmark_torus(), resolution)?;
    Ok(rule.integrate(|x| torus_forcing(x, smoothing)) / HEAT_RATE)
}

/// Location of the largest prediction over a set of points at time `t`.
pub fn field_maximum(
    params: &MlpParams,
    problem: &ProblemSpec,
    points: &[Point],
    t: f64,
) -> Result<(Point, f64)> {
    let values = problem.predict(params, points, t)?;
    let (i, v) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::InvalidCount { got: 0, min: 1 })?;
    Ok((points[i], *v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::fibonacci_sphere;

    #[test]
    fn registry_contents() {
        let r = registry();
        assert_eq!(r.len(), 4);
        let sc = problem("sphere-continuous").unwrap();
        assert_eq!(sc.counts.surface_points * sc.counts.time_levels, 50_000);
        assert_eq!(sc.mode, SolverMode::Continuous);
        let sd = problem("sphere-discrete-short").unwrap();
        assert_eq!(sd.counts.surface_points, 500);
        assert!(matches!(sd.mode, SolverMode::Discrete { stages: 8, .. }));
        let t = problem("torus-heating").unwrap();
        assert_eq!(t.horizon, 3.0);
        assert!(!t.surface.is_sphere_like());
        assert!(matches!(problem("nope"), Err(Error::UnknownProblem(_))));
        let long = problem("sphere-discrete-long").unwrap();
        assert_eq!(long.time_map().unwrap().multiplier(), 6.0);
    }

    #[test]
    fn initial_data_matches_exact_solution() {
        for p in registry().into_iter().filter(|p| p.exact.is_some()) {
            let e = p.exact.clone().unwrap();
            for x in fibonacci_sphere(50).unwrap() {
                assert!(((p.u0)(&x) - e(&x, 0.0)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn manufactured_forcing_matches_eigenfunction_form() {
        let p = problem("sphere-discrete-short").unwrap();
        for x in fibonacci_sphere(40).unwrap() {
            for t in [0.0, 0.25, 0.5] {
                let f = p.rhs.eval(&x, t);
                let expect = 13.0 * x[0] * x[1] * x[2] * f64::exp(t);
                assert!((f - expect).abs() < 1e-5, "{f} {expect}");
            }
        }
        assert_eq!(p.rhs.provenance, Provenance::OracleManufactured);
    }

    #[test]
    fn mollified_forcing_values() {
        assert!((torus_forcing(&[0.0, 1.25, 0.0], 0.05) - 50.0).abs() < 1e-12);
        assert!((torus_forcing(&[0.0, 0.75, 0.0], 0.05) - 50.0).abs() < 1e-12);
        assert!((torus_forcing(&[0.0, 1.0, 0.25], 0.05) - 50.0).abs() < 1e-12);
        assert!(torus_forcing(&[0.0, -1.25, 0.0], 0.05) <= 1e-10);
        assert_eq!(torus_forcing(&[0.0, 1.1, 0.0], 0.0), 100.0);
        assert_eq!(torus_forcing(&[0.0, 1.26, 0.0], 0.0), 0.0);
    }

    #[test]
    fn interpolation_exact_for_cubics() {
        let times = [0.0, 0.1, 0.4, 0.7, 0.9, 1.0];
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t;
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        for t in [0.05, 0.33, 0.5, 0.95] {
            assert!((interpolate(&times, &values, t) - f(t)).abs() < 1e-13);
        }
        assert_eq!(interpolate(&times, &values, 0.4), values[2]);
    }

    #[test]
    fn error_metric_identities() {
        let truth = [1.0, -2.0, 0.5];
        assert_eq!(relative_error_values(&truth, &truth).unwrap(), 0.0);
        let scaled: Vec<f64> = truth.iter().map(|v| 1.1 * v).collect();
        assert!((relative_error_values(&scaled, &truth).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(
            relative_error_values(&[0.0], &[0.0]),
            Err(Error::ZeroDenominator(_))
        ));
        let torus = problem("torus-heating").unwrap();
        let p = MlpParams::zeros(&[4, 3, 1]).unwrap();
        assert!(matches!(
            relative_error(&p, &torus, &[[0.0, 1.25, 0.0]], 1.0),
            Err(Error::NoExactSolution)
        ));
    }

    #[test]
    fn discrete_prediction_interpolates_heads() {
        let p = problem("sphere-discrete-short").unwrap();
        let net = MlpParams::init(&p.default_layers(), 3).unwrap();
        let x = [[0.0, 0.6, 0.8]];
        let heads = net.forward(&x[0]).unwrap();
        let end = p.predict(&net, &x, 0.5).unwrap()[0];
        assert_eq!(end, heads[8]);
        assert_eq!(p.predict(&net, &x, 0.0).unwrap()[0], 0.0);
        assert!(p.predict(&net, &x, 0.3).unwrap()[0].is_finite());
    }

    #[test]
    fn heat_content_of_zero_network() {
        let p = problem("torus-heating").unwrap();
        let net = MlpParams::zeros(&[4, 5, 1]).unwrap();
        assert_eq!(heat_content(&net, &p, 0.0, 32).unwrap(), 0.0);
        // Bias-only network u ≡ 1: heat content is the torus area.
        let mut one = MlpParams::zeros(&[4, 5, 1]).unwrap();
        let (_, b) = one.layer_mut(1);
        b[0] = 1.0;
        let area = heat_content(&one, &p, 1.0, 64).unwrap();
        assert!((area - std::f64::consts::PI.powi(2)).abs() < 1e-9);
    }

    #[test]
    fn patch_area_converges() {
        let a = patch_area(512, DEFAULT_SMOOTHING).unwrap();
        let b = patch_area(1024, DEFAULT_SMOOTHING).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} {b}");
        assert!((b - 0.196384).abs() < 1e-5, "{b}");
        // Sharp indicator: only nodes on the meridian circle count, so the
        // estimate halves with every doubling of the resolution.
        let s1 = patch_area(1024, 0.0).unwrap();
        let s2 = patch_area(2048, 0.0).unwrap();
        assert!((s1 / s2 - 2.0).abs() < 0.05 && s2 < 5e-3, "{s1} {s2}");
    }

    #[test]
    fn head_count_is_checked() {
        let p = problem("sphere-discrete-short").unwrap();
        let set = p.collocation().unwrap();
        let wrong = MlpParams::init(&[3, 5, 5], 1).unwrap();
        let cfg = TrainingConfig {
            iterations: 1,
            ..TrainingConfig::default()
        };
        assert!(matches!(
            p.train(&set, wrong, &cfg, None),
            Err(Error::TableauMismatch { .. })
        ));
    }
}
