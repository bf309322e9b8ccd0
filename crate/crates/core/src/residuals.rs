//! Loss functions assembled from network jets: the stationary surface
//! Poisson loss, the space-time heat loss and the implicit Runge–Kutta loss,
//! each with normal-gradient and normal-Hessian penalties.

use std::fmt;
use std::sync::Arc;

use crate::diffengine::{evaluate, fd_check, FdReport, Jet2, JetLoss, ParamGradient, Reduction};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::irk::ButcherTableau;
use crate::network::MlpParams;

const PDE: usize = 0;
const NG: usize = 1;
const HESS: usize = 2;
const INIT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub residual: f64,
    pub normal_grad: f64,
    pub hessian: f64,
    pub initial: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            residual: 1.0,
            normal_grad: 1.0,
            hessian: 1.0,
            initial: 1.0,
        }
    }
}

impl LossWeights {
    fn as_array(&self) -> [f64; 4] {
        [self.residual, self.normal_grad, self.hessian, self.initial]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub pde_residual: f64,
    pub normal_grad_penalty: f64,
    pub hessian_penalty: f64,
    pub initial_misfit: f64,
    pub total: f64,
    pub weights: LossWeights,
}

impl LossBreakdown {
    pub fn from_components(c: [f64; 4], weights: LossWeights) -> Self {
        let w = weights.as_array();
        LossBreakdown {
            pde_residual: c[PDE],
            normal_grad_penalty: c[NG],
            hessian_penalty: c[HESS],
            initial_misfit: c[INIT],
            total: (0..4).map(|k| w[k] * c[k]).sum(),
            weights,
        }
    }

    pub fn components(&self) -> [f64; 4] {
        [
            self.pde_residual,
            self.normal_grad_penalty,
            self.hessian_penalty,
            self.initial_misfit,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    OracleManufactured,
}

/// Right-hand side `f(x, t)` of `∂ₜu = Δ_Γu + f`.
#[derive(Clone)]
pub struct PdeRhs {
    f: Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>,
    pub provenance: Provenance,
}

impl PdeRhs {
    pub fn new(f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static, provenance: Provenance) -> Self {
        PdeRhs {
            f: Arc::new(f),
            provenance,
        }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0, Provenance::Analytic)
    }

    pub fn eval(&self, x: &Point, t: f64) -> f64 {
        (self.f)(x, t)
    }
}

impl fmt::Debug for PdeRhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeRhs").field("provenance", &self.provenance).finish()
    }
}

/// Map between a horizon `T ≥ 1` and a reference horizon `T̃ ∈ (0, 1)`:
/// `t̃ = (t/T)·T̃`, so `∂_t̃ u = (T/T̃)(Δ_Γu + f)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeRescale {
    pub horizon: f64,
    pub reference: f64,
}

impl TimeRescale {
    pub fn identity(horizon: f64) -> Self {
        TimeRescale {
            horizon,
            reference: horizon,
        }
    }

    pub fn multiplier(&self) -> f64 {
        self.horizon / self.reference
    }

    pub fn physical_time(&self, scaled: f64) -> f64 {
        scaled * self.multiplier()
    }

    pub fn scaled_time(&self, physical: f64) -> f64 {
        physical / self.multiplier()
    }
}

/// Rescaling for a long horizon. Horizons below one need none and get the
/// identity map.
pub fn rescale_time(horizon: f64, reference: f64) -> Result<TimeRescale> {
    if !(reference > 0.0 && reference < 1.0) {
        return Err(Error::InvalidReference(reference));
    }
    if horizon < 1.0 {
        return Ok(TimeRescale::identity(horizon));
    }
    Ok(TimeRescale { horizon, reference })
}

// ---------------------------------------------------------------------------
// Point-wise assembly

/// Per-batch normalisation: inverse sizes of each point group and of the
/// whole batch.
#[derive(Clone, Debug)]
pub struct Norms {
    pub group: Vec<f64>,
    pub all: f64,
}

/// A loss made of per-point terms over one or more point groups.
pub trait PointLoss: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn hessian_dim(&self) -> usize {
        3
    }
    /// Sizes of the point groups; global point ids run group by group.
    fn group_sizes(&self) -> Vec<usize>;
    fn weights(&self) -> LossWeights;
    fn write_input(&self, id: usize, out: &mut Vec<f64>);
    /// Add this point's unweighted, normalised components to `terms` and its
    /// weighted seeds to `seed`; return its weighted contribution.
    fn point(&self, id: usize, jets: &[Jet2], seed: &mut [Jet2], terms: &mut [f64], n: &Norms) -> f64;

    fn len(&self) -> usize {
        self.group_sizes().iter().sum()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn group_of(&self, id: usize) -> usize {
        let mut end = 0;
        for (g, size) in self.group_sizes().into_iter().enumerate() {
            end += size;
            if id < end {
                return g;
            }
        }
        panic!("point id {id} out of range")
    }
}

struct Assembled<'a, P: ?Sized> {
    loss: &'a P,
    ids: &'a [usize],
    norms: Norms,
}

impl<P: PointLoss + ?Sized> JetLoss for Assembled<'_, P> {
    fn n_terms(&self) -> usize {
        4
    }

    fn hessian_dim(&self, input_dim: usize) -> usize {
        self.loss.hessian_dim().min(input_dim)
    }

    fn point(&self, index: usize, jets: &[Jet2], seed: &mut [Jet2], terms: &mut [f64]) -> f64 {
        self.loss.point(self.ids[index], jets, seed, terms, &self.norms)
    }
}

fn assemble<'a, P: PointLoss + ?Sized>(
    loss: &'a P,
    params: &MlpParams,
    ids: &'a [usize],
) -> Result<(Assembled<'a, P>, Vec<f64>)> {
    if params.input_dim() != loss.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: loss.input_dim(),
            found: params.input_dim(),
        });
    }
    if params.output_dim() != loss.output_dim() {
        return Err(Error::TableauMismatch {
            heads: params.output_dim(),
            expected: loss.output_dim(),
        });
    }
    let mut counts = vec![0usize; loss.group_sizes().len()];
    let mut inputs = Vec::with_capacity(ids.len() * loss.input_dim());
    for &id in ids {
        counts[loss.group_of(id)] += 1;
        loss.write_input(id, &mut inputs);
    }
    let inv = |n: usize| if n == 0 { 0.0 } else { 1.0 / n as f64 };
    let norms = Norms {
        group: counts.iter().map(|&n| inv(n)).collect(),
        all: inv(ids.len()),
    };
    Ok((Assembled { loss, ids, norms }, inputs))
}

/// Evaluate `loss` over the points `ids` (all points when `None`).
pub fn evaluate_loss<P: PointLoss + ?Sized>(
    loss: &P,
    params: &MlpParams,
    ids: Option<&[usize]>,
    with_gradient: bool,
    reduction: Reduction,
) -> Result<(LossBreakdown, ParamGradient)> {
    let all: Vec<usize>;
    let ids = match ids {
        Some(ids) => ids,
        None => {
            all = (0..loss.len()).collect();
            &all
        }
    };
    let (assembled, inputs) = assemble(loss, params, ids)?;
    let e = evaluate(params, &inputs, &assembled, with_gradient, reduction)?;
    let c = [e.terms[0], e.terms[1], e.terms[2], e.terms[3]];
    Ok((LossBreakdown::from_components(c, loss.weights()), e.gradient))
}

/// Central-difference check of the parameter gradient of `loss` restricted
/// to the points `ids`.
pub fn fd_check_loss<P: PointLoss + ?Sized>(
    loss: &P,
    params: &MlpParams,
    ids: &[usize],
    step: f64,
) -> Result<FdReport> {
    let (assembled, inputs) = assemble(loss, params, ids)?;
    fd_check(params, &inputs, &assembled, step)
}

/// `(⟨g, n⟩, nᵀHn)` over the leading three coordinates.
fn normal_terms(j: &Jet2, n: &Point) -> (f64, f64) {
    let gn = (0..3).map(|k| j.grad[k] * n[k]).sum();
    let mut hn = 0.0;
    for k in 0..3 {
        for l in 0..3 {
            hn += n[k] * j.hess[k][l] * n[l];
        }
    }
    (gn, hn)
}

/// Add both penalties with factor `scale` (already including `1/N`).
fn penalties(
    j: &Jet2,
    n: &Point,
    seed: &mut Jet2,
    terms: &mut [f64],
    w: &LossWeights,
    scale: f64,
) -> f64 {
    let (gn, hn) = normal_terms(j, n);
    terms[NG] += scale * gn * gn;
    terms[HESS] += scale * hn * hn;
    for k in 0..3 {
        seed.grad[k] += 2.0 * w.normal_grad * scale * gn * n[k];
        for l in 0..3 {
            seed.hess[k][l] += 2.0 * w.hessian * scale * hn * n[k] * n[l];
        }
    }
    scale * (w.normal_grad * gn * gn + w.hessian * hn * hn)
}

// ---------------------------------------------------------------------------
// Stationary

/// `Δu = f` on the surface.
#[derive(Clone, Debug)]
pub struct StationaryLoss {
    pub points: Vec<Point>,
    pub normals: Vec<Point>,
    pub forcing: Vec<f64>,
    pub weights: LossWeights,
}

impl PointLoss for StationaryLoss {
    fn input_dim(&self) -> usize {
        3
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn group_sizes(&self) -> Vec<usize> {
        vec![self.points.len()]
    }

    fn weights(&self) -> LossWeights {
        self.weights
    }

    fn write_input(&self, id: usize, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.points[id]);
    }

    fn point(&self, id: usize, jets: &[Jet2], seed: &mut [Jet2], terms: &mut [f64], n: &Norms) -> f64 {
        let j = &jets[0];
        let w = &self.weights;
        let s = n.all;
        let r = j.laplacian(3) - self.forcing[id];
        terms[PDE] += s * r * r;
        for k in 0..3 {
            seed[0].hess[k][k] += 2.0 * w.residual * s * r;
        }
        w.residual * s * r * r + penalties(j, &self.normals[id], &mut seed[0], terms, w, s)
    }
}

pub fn stationary_loss(
    params: &MlpParams,
    points: &[Point],
    normals: &[Point],
    forcing: &[f64],
    weights: LossWeights,
) -> Result<LossBreakdown> {
    check_lengths(points.len(), &[normals.len(), forcing.len()])?;
    let loss = StationaryLoss {
        points: points.to_vec(),
        normals: normals.to_vec(),
        forcing: forcing.to_vec(),
        weights,
    };
    Ok(evaluate_loss(&loss, params, None, false, Reduction::Ordered)?.0)
}

fn check_lengths(expected: usize, others: &[usize]) -> Result<()> {
    match others.iter().find(|&&n| n != expected) {
        Some(&found) => Err(Error::ShapeMismatch { expected, found }),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Continuous time

/// `∂ₜu = Δu + f` on `Γ × [0, T]`, network input `(x, y, z, t/T)`.
///
/// Group 0 holds interior points (residual), group 1 the initial points
/// (misfit). Penalties apply to both groups.
#[derive(Clone, Debug)]
pub struct ContinuousLoss {
    pub interior: Vec<(Point, f64)>,
    pub interior_normals: Vec<Point>,
    pub forcing: Vec<f64>,
    pub initial: Vec<Point>,
    pub initial_normals: Vec<Point>,
    pub initial_values: Vec<f64>,
    pub horizon: f64,
    pub weights: LossWeights,
}

impl PointLoss for ContinuousLoss {
    fn input_dim(&self) -> usize {
        4
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn group_sizes(&self) -> Vec<usize> {
        vec![self.interior.len(), self.initial.len()]
    }

    fn weights(&self) -> LossWeights {
        self.weights
    }

    fn write_input(&self, id: usize, out: &mut Vec<f64>) {
        match id.checked_sub(self.interior.len()) {
            None => {
                let (x, t) = self.interior[id];
                out.extend_from_slice(&[x[0], x[1], x[2], t / self.horizon]);
            }
            Some(k) => {
                let x = self.initial[k];
                out.extend_from_slice(&[x[0], x[1], x[2], 0.0]);
            }
        }
    }

    fn point(&self, id: usize, jets: &[Jet2], seed: &mut [Jet2], terms: &mut [f64], n: &Norms) -> f64 {
        let j = &jets[0];
        let w = &self.weights;
        match id.checked_sub(self.interior.len()) {
            None => {
                let s = n.group[0];
                let r = j.grad[3] / self.horizon - j.laplacian(3) - self.forcing[id];
                terms[PDE] += s * r * r;
                let g = 2.0 * w.residual * s * r;
                seed[0].grad[3] += g / self.horizon;
                for k in 0..3 {
                    seed[0].hess[k][k] -= g;
                }
                w.residual * s * r * r
                    + penalties(j, &self.interior_normals[id], &mut seed[0], terms, w, n.all)
            }
            Some(k) => {
                let s = n.group[1];
                let m = j.value - self.initial_values[k];
                terms[INIT] += s * m * m;
                seed[0].value += 2.0 * w.initial * s * m;
                w.initial * s * m * m
                    + penalties(j, &self.initial_normals[k], &mut seed[0], terms, w, n.all)
            }
        }
    }
}

/// Value-only evaluation of the space-time loss.
pub fn continuous_loss(params: &MlpParams, loss: &ContinuousLoss) -> Result<LossBreakdown> {
    check_lengths(
        loss.interior.len(),
        &[loss.interior_normals.len(), loss.forcing.len()],
    )?;
    check_lengths(
        loss.initial.len(),
        &[loss.initial_normals.len(), loss.initial_values.len()],
    )?;
    Ok(evaluate_loss(loss, params, None, false, Reduction::Ordered)?.0)
}

// ---------------------------------------------------------------------------
// Discrete time

/// One implicit Runge–Kutta step of length `dt` from `u⁰` on the surface,
/// with `q` stage heads followed by the final head.
///
/// `forcing[i * q + k]` holds `f(xᵢ, tⁿ + c_k Δt)` in physical time; the
/// operator is `N[w] = multiplier·(Δw + f)`.
#[derive(Clone, Debug)]
pub struct DiscreteLoss {
    pub points: Vec<Point>,
    pub normals: Vec<Point>,
    pub initial_values: Vec<f64>,
    pub forcing: Vec<f64>,
    pub tableau: ButcherTableau,
    pub dt: f64,
    pub multiplier: f64,
    pub weights: LossWeights,
}

impl DiscreteLoss {
    fn coefficient(&self, row: usize, k: usize) -> f64 {
        if row < self.tableau.q {
            self.tableau.a(row, k)
        } else {
            self.tableau.b[k]
        }
    }

    /// Predicted `uⁿ` from each head: `u^{n+cⱼ} − Δt Σₖ aⱼₖ N[u^{n+cₖ}]`
    /// for the stages and `u^{n+1} − Δt Σₖ bₖ N[u^{n+cₖ}]` for the last head.
    pub fn predictors(&self, id: usize, jets: &[Jet2]) -> Vec<f64> {
        let q = self.tableau.q;
        let ops: Vec<f64> = (0..q)
            .map(|k| self.multiplier * (jets[k].laplacian(3) + self.forcing[id * q + k]))
            .collect();
        (0..=q)
            .map(|row| {
                let s: f64 = (0..q).map(|k| self.coefficient(row, k) * ops[k]).sum();
                jets[row].value - self.dt * s
            })
            .collect()
    }
}

impl PointLoss for DiscreteLoss {
    fn input_dim(&self) -> usize {
        3
    }

    fn output_dim(&self) -> usize {
        self.tableau.q + 1
    }

    fn group_sizes(&self) -> Vec<usize> {
        vec![self.points.len()]
    }

    fn weights(&self) -> LossWeights {
        self.weights
    }

    fn write_input(&self, id: usize, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.points[id]);
    }

    fn point(&self, id: usize, jets: &[Jet2], seed: &mut [Jet2], terms: &mut [f64], n: &Norms) -> f64 {
        let q = self.tableau.q;
        let w = &self.weights;
        let s = n.all / (q + 1) as f64;
        let u0 = self.initial_values[id];
        let mut total = 0.0;
        let mut lap_seed = vec![0.0; q];
        for (row, p) in self.predictors(id, jets).into_iter().enumerate() {
            let e = p - u0;
            terms[PDE] += s * e * e;
            total += w.residual * s * e * e;
            let g = 2.0 * w.residual * s * e;
            seed[row].value += g;
            for (k, ls) in lap_seed.iter_mut().enumerate() {
                *ls -= g * self.dt * self.multiplier * self.coefficient(row, k);
            }
        }
        for (k, ls) in lap_seed.into_iter().enumerate() {
            for d in 0..3 {
                seed[k].hess[d][d] += ls;
            }
        }
        let normal = &self.normals[id];
        for (j, sd) in jets.iter().zip(seed.iter_mut()) {
            total += penalties(j, normal, sd, terms, w, s);
        }
        total
    }
}

pub fn discrete_loss(params: &MlpParams, loss: &DiscreteLoss) -> Result<LossBreakdown> {
    let q = loss.tableau.q;
    check_lengths(
        loss.points.len(),
        &[loss.normals.len(), loss.initial_values.len(), loss.forcing.len() / q.max(1)],
    )?;
    if loss.forcing.len() != loss.points.len() * q {
        return Err(Error::ShapeMismatch {
            expected: loss.points.len() * q,
            found: loss.forcing.len(),
        });
    }
    Ok(evaluate_loss(loss, params, None, false, Reduction::Ordered)?.0)
}
