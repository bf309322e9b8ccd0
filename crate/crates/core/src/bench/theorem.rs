//! Numerical check of the a-priori estimates bounding intrinsic operator
//! residuals by ambient ones:
//!
//! 1. `‖∇_Γu − f‖ ≤ ‖∇ū − f‖ + ‖⟨n, ∇ū⟩‖`
//! 2. `‖∇_Γ·v − g‖ ≤ ‖∇·v̄ − g‖ + ‖nᵀ∇v̄ n‖`
//! 3. `‖Δ_Γu − g‖ ≤ C(‖Δū − g‖ + ‖⟨n, ∇ū⟩‖ + ‖nᵀ∇²ū n‖)`, `C = max(1, 2 sup|H|)`
//!
//! Left sides come from the closest-point operator oracle, right sides from
//! plain central differences of the ambient extension.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::oracle::{fd_gradient, fd_hessian, fd_jacobian};
use crate::geometry::{dot, FdOracle, Point, QuadratureRule, SurfaceModel, DEFAULT_FD_STEP};

pub type VectorField = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// Relative and absolute slack allowed for discretisation error.
pub const SLACK_REL: f64 = 1e-6;
pub const SLACK_ABS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimate {
    Gradient,
    Divergence,
    Laplacian,
}

impl Estimate {
    pub fn index(self) -> usize {
        match self {
            Estimate::Gradient => 1,
            Estimate::Divergence => 2,
            Estimate::Laplacian => 3,
        }
    }
}

/// How the ambient extension on the right-hand side is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    /// The field formula itself, generally not constant along normals.
    Ambient,
    /// `ū = u ∘ cp`.
    ClosestPoint,
}

#[derive(Clone)]
pub enum TheoremCase {
    Gradient { u: ScalarField, f: VectorField, extension: Extension },
    Divergence { v: VectorField, g: ScalarField, extension: Extension },
    Laplacian { u: ScalarField, g: ScalarField, extension: Extension },
}

impl TheoremCase {
    pub fn estimate(&self) -> Estimate {
        match self {
            TheoremCase::Gradient { .. } => Estimate::Gradient,
            TheoremCase::Divergence { .. } => Estimate::Divergence,
            TheoremCase::Laplacian { .. } => Estimate::Laplacian,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremRow {
    pub trial: usize,
    pub estimate: Estimate,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    /// `rhs·(1 + SLACK_REL) − lhs`; the estimate holds when this is at least
    /// `−SLACK_ABS`.
    pub margin: f64,
}

impl TheoremRow {
    pub fn holds(&self) -> bool {
        self.margin >= -SLACK_ABS
    }
}

/// `sup 2|H|` is taken over the nodes of the quadrature rule.
pub fn sup_abs_mean_curvature(surface: &SurfaceModel, resolution: usize) -> Result<f64> {
    let rule = QuadratureRule::new(surface, resolution)?;
    rule.nodes
        .iter()
        .try_fold(0.0f64, |m, x| Ok(m.max(surface.mean_curvature(x)?.abs())))
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn len(a: Point) -> f64 {
    dot(&a, &a).sqrt()
}

/// Squared pointwise values of the left side and of each right-side term.
fn pointwise(
    surface: &SurfaceModel,
    case: &TheoremCase,
    x: &Point,
) -> Result<(f64, Vec<f64>)> {
    let oracle = FdOracle::new(surface);
    let h = DEFAULT_FD_STEP;
    let n = surface.normal(x)?;
    let ext = |e: Extension, u: &ScalarField, y: &Point| -> Result<f64> {
        match e {
            Extension::Ambient => Ok(u(y)),
            Extension::ClosestPoint => Ok(u(&surface.project_in_band(y)?)),
        }
    };
    match case {
        TheoremCase::Gradient { u, f, extension } => {
            let fx = f(x);
            let lhs = len(sub(oracle.gradient(&|y| u(y), x)?, fx));
            let g = fd_gradient(|y| ext(*extension, u, y), x, h)?;
            Ok((lhs, vec![len(sub(g, fx)), dot(&n, &g).abs()]))
        }
        TheoremCase::Divergence { v, g, extension } => {
            let gx = g(x);
            let lhs = (oracle.divergence(&|y| v(y), x)? - gx).abs();
            let jac = fd_jacobian(
                |y| match extension {
                    Extension::Ambient => Ok(v(y)),
                    Extension::ClosestPoint => Ok(v(&surface.project_in_band(y)?)),
                },
                x,
                h,
            )?;
            let div = jac[0][0] + jac[1][1] + jac[2][2];
            let mut njn = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    njn += n[i] * jac[i][j] * n[j];
                }
            }
            Ok((lhs, vec![(div - gx).abs(), njn.abs()]))
        }
        TheoremCase::Laplacian { u, g, extension } => {
            let gx = g(x);
            let lhs = (oracle.laplace_beltrami(&|y| u(y), x)? - gx).abs();
            let grad = fd_gradient(|y| ext(*extension, u, y), x, h)?;
            let hess = fd_hessian(|y| ext(*extension, u, y), x, h)?;
            let lap = hess[0][0] + hess[1][1] + hess[2][2];
            let mut nhn = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    nhn += n[i] * hess[i][j] * n[j];
                }
            }
            Ok((lhs, vec![(lap - gx).abs(), dot(&n, &grad).abs(), nhn.abs()]))
        }
    }
}

/// `(‖lhs‖, Σ ‖rhs term‖)` by quadrature, without the constant.
fn sides(surface: &SurfaceModel, case: &TheoremCase, resolution: usize) -> Result<(f64, f64)> {
    let rule = QuadratureRule::new(surface, resolution)?;
    let mut lhs = 0.0;
    let mut rhs: Vec<f64> = Vec::new();
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let (l, r) = pointwise(surface, case, x)?;
        lhs += w * l * l;
        rhs.resize(r.len(), 0.0);
        rhs.iter_mut().zip(&r).for_each(|(acc, v)| *acc += w * v * v);
    }
    Ok((lhs.sqrt(), rhs.iter().map(|v| v.sqrt()).sum()))
}

/// Both sides of each estimate, one row per case.
///
/// Each case is also evaluated at half the resolution; if either side moves
/// by more than 1% (and is not negligibly small) the rule is too coarse.
pub fn verify_theorem(
    surface: &SurfaceModel,
    cases: &[TheoremCase],
    resolution: usize,
) -> Result<Vec<TheoremRow>> {
    let constant = 1f64.max(2.0 * sup_abs_mean_curvature(surface, resolution)?);
    let coarse = (resolution / 2).max(1);
    let mut rows = Vec::with_capacity(cases.len());
    for (trial, case) in cases.iter().enumerate() {
        let (lhs, rhs_sum) = sides(surface, case, resolution)?;
        let (lhs_c, rhs_c) = sides(surface, case, coarse)?;
        for (fine, c) in [(lhs, lhs_c), (rhs_sum, rhs_c)] {
            if fine.abs().max(c.abs()) > 1e-6 && (fine - c).abs() > 0.01 * fine.abs() {
                return Err(Error::QuadratureTooCoarse { fine, coarse: c });
            }
        }
        let scale = if case.estimate() == Estimate::Laplacian {
            constant
        } else {
            1.0
        };
        let rhs = scale * rhs_sum;
        rows.push(TheoremRow {
            trial,
            estimate: case.estimate(),
            lhs,
            rhs,
            constant: scale,
            margin: rhs * (1.0 + SLACK_REL) - lhs,
        });
    }
    Ok(rows)
}

/// `Σ aₘ sin(kₘ·x + φₘ)` with analytic derivatives.
#[derive(Clone, Debug)]
struct TrigPoly {
    terms: Vec<([f64; 3], f64, f64)>,
}

impl TrigPoly {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.random_range(1..=4);
        let terms = (0..n)
            .map(|_| {
                let k = [
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ];
                (k, rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(-1.0..1.0))
            })
            .collect();
        TrigPoly { terms }
    }

    fn value(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(k, p, a)| a * (dot(k, x) + p).sin()).sum()
    }

    fn gradient(&self, x: &Point) -> Point {
        let mut g = [0.0; 3];
        for (k, p, a) in &self.terms {
            let c = a * (dot(k, x) + p).cos();
            for i in 0..3 {
                g[i] += c * k[i];
            }
        }
        g
    }

    fn laplacian(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(k, p, a)| -a * dot(k, k) * (dot(k, x) + p).sin()).sum()
    }

    fn partial(&self, x: &Point, i: usize) -> f64 {
        self.gradient(x)[i]
    }
}

/// Three cases per trial: random trigonometric fields, used directly as
/// their own ambient extensions, paired with right-hand data that blend the
/// exact ambient operator with an unrelated random field.
pub fn random_cases(trials: usize, seed: u64) -> Vec<TheoremCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(3 * trials);
    for _ in 0..trials {
        let u = TrigPoly::random(&mut rng);
        let noise = [
            TrigPoly::random(&mut rng),
            TrigPoly::random(&mut rng),
            TrigPoly::random(&mut rng),
        ];
        let theta: f64 = rng.random();
        let (uu, nn) = (u.clone(), noise.clone());
        cases.push(TheoremCase::Gradient {
            u: Arc::new({
                let u = u.clone();
                move |x| u.value(x)
            }),
            f: Arc::new(move |x| {
                let g = uu.gradient(x);
                [0, 1, 2].map(|i| theta * g[i] + (1.0 - theta) * nn[i].value(x))
            }),
            extension: Extension::Ambient,
        });

        let v = [
            TrigPoly::random(&mut rng),
            TrigPoly::random(&mut rng),
            TrigPoly::random(&mut rng),
        ];
        let gnoise = TrigPoly::random(&mut rng);
        let theta: f64 = rng.random();
        let vv = v.clone();
        cases.push(TheoremCase::Divergence {
            v: Arc::new(move |x| [v[0].value(x), v[1].value(x), v[2].value(x)]),
            g: Arc::new(move |x| {
                let div: f64 = (0..3).map(|i| vv[i].partial(x, i)).sum();
                theta * div + (1.0 - theta) * gnoise.value(x)
            }),
            extension: Extension::Ambient,
        });

        let w = TrigPoly::random(&mut rng);
        let gnoise = TrigPoly::random(&mut rng);
        let theta: f64 = rng.random();
        let ww = w.clone();
        cases.push(TheoremCase::Laplacian {
            u: Arc::new(move |x| w.value(x)),
            g: Arc::new(move |x| theta * ww.laplacian(x) + (1.0 - theta) * gnoise.value(x)),
            extension: Extension::Ambient,
        });
    }
    cases
}
