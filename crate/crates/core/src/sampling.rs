//! Collocation points on Γ and on Γ × [0, T].
//!
//! Sphere-like surfaces use a golden-angle Fibonacci lattice mapped onto the
//! surface, combined with a uniform time partition. Parametric surfaces use
//! Latin hypercube samples in (α, β, t). Randomness comes from ChaCha8, which
//! gives the same stream on every platform for a given seed.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Point, SurfaceModel};

/// Irrational rotation applied to evaluation lattices so they never coincide
/// with training lattices.
const EVAL_ROTATION: f64 = std::f64::consts::SQRT_2;

/// Stream offset separating evaluation samples from training samples.
const EVAL_STREAM: u64 = 0x5eed_e7a1;
const INITIAL_STREAM: u64 = 0x1a17_1a15;

#[derive(Clone, Debug, PartialEq)]
pub struct CollocationSet {
    /// PDE collocation points `(x, t)`.
    pub interior: Vec<(Point, f64)>,
    /// Initial-data points (at t = 0).
    pub initial: Vec<Point>,
    /// Held-out evaluation points `(x, t)`.
    pub eval: Vec<(Point, f64)>,
    pub seed: u64,
}

impl CollocationSet {
    /// Write every point as `set,x,y,z,t` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "set,x,y,z,t")?;
        for (x, t) in &self.interior {
            writeln!(out, "interior,{},{},{},{}", x[0], x[1], x[2], t)?;
        }
        for x in &self.initial {
            writeln!(out, "initial,{},{},{},0", x[0], x[1], x[2])?;
        }
        for (x, t) in &self.eval {
            writeln!(out, "eval,{},{},{},{}", x[0], x[1], x[2], t)?;
        }
        Ok(())
    }
}

/// Golden-angle Fibonacci lattice of `n` unit vectors:
/// `zᵢ = 1 − (2i+1)/n`, azimuth `2πi/φ`.
pub fn fibonacci_sphere(n: usize) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::InvalidCount { got: 0, min: 1 });
    }
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    Ok((0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let theta = 2.0 * PI * i as f64 / golden;
            [rho * theta.cos(), rho * theta.sin(), z]
        })
        .collect())
}

/// Map unit vectors onto a sphere-like surface by axis scaling.
pub fn map_to_surface(points: &[Point], surface: &SurfaceModel) -> Result<Vec<Point>> {
    let axes = match *surface {
        SurfaceModel::Sphere { radius } => [radius; 3],
        SurfaceModel::Ellipsoid { semi_axes } => semi_axes,
        _ => return Err(Error::NotSphereHomeomorphic),
    };
    Ok(points
        .iter()
        .map(|p| {
            // Renormalize so rounding in the lattice does not leak into φ.
            let r = crate::geometry::norm(p);
            [axes[0] * p[0] / r, axes[1] * p[1] / r, axes[2] * p[2] / r]
        })
        .collect())
}

/// `t_k = kT/(M−1)`, k = 0..M.
pub fn time_partition(horizon: f64, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidCount { got: m, min: 2 });
    }
    Ok((0..m)
        .map(|k| {
            if k == m - 1 {
                horizon
            } else {
                horizon * k as f64 / (m - 1) as f64
            }
        })
        .collect())
}

/// Tensor product of surface points with a uniform partition of `[0, T]`.
pub fn tensor_time(points: &[Point], horizon: f64, m: usize) -> Result<Vec<(Point, f64)>> {
    let times = time_partition(horizon, m)?;
    Ok(points
        .iter()
        .flat_map(|x| times.iter().map(move |&t| (*x, t)))
        .collect())
}

/// Latin hypercube in `[0,1]^dims`: each coordinate places exactly one sample
/// in each stratum `[k/n, (k+1)/n)`.
pub fn latin_hypercube(n: usize, dims: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dims);
    for _ in 0..dims {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        columns.push(
            strata
                .into_iter()
                // Keep the jitter off the upper stratum edge so rounding never
                // moves a sample into the next stratum.
                .map(|k| (k as f64 + rng.random::<f64>() * (1.0 - 1e-9)) / n as f64)
                .collect(),
        );
    }
    (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
}

/// LHS samples `(α, β, t)` mapped through the surface chart, with `t ∈ [0, T]`.
pub fn lhs_parametric(
    n: usize,
    surface: &SurfaceModel,
    horizon: f64,
    seed: u64,
) -> Result<Vec<(Point, f64)>> {
    if n == 0 {
        return Err(Error::InvalidCount { got: 0, min: 1 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(latin_hypercube(n, 3, &mut rng)
        .into_iter()
        .map(|s| (surface.chart(s[0], s[1]), s[2] * horizon))
        .collect())
}

/// LHS samples `(α, β)` mapped through the chart (no time coordinate).
pub fn lhs_surface(n: usize, surface: &SurfaceModel, seed: u64) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::InvalidCount { got: 0, min: 1 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(latin_hypercube(n, 2, &mut rng)
        .into_iter()
        .map(|s| surface.chart(s[0], s[1]))
        .collect())
}

fn rotate_z(p: &Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

/// Held-out surface points: a rotated Fibonacci lattice on sphere-like
/// surfaces, an independent LHS stream otherwise.
pub fn evaluation_points(surface: &SurfaceModel, n: usize, seed: u64) -> Result<Vec<Point>> {
    if surface.is_sphere_like() {
        let lattice: Vec<Point> = fibonacci_sphere(n)?
            .iter()
            .map(|p| rotate_z(p, EVAL_ROTATION))
            .collect();
        map_to_surface(&lattice, surface)
    } else {
        lhs_surface(n, surface, seed ^ EVAL_STREAM)
    }
}

/// Counts for a collocation set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleCounts {
    /// Surface points for the PDE residual.
    pub surface_points: usize,
    /// Time levels (tensor-product sampling only).
    pub time_levels: usize,
    /// Initial-data points.
    pub initial: usize,
    /// Evaluation points.
    pub eval: usize,
}

/// Build a continuous-time collocation set: Fibonacci × time partition on
/// sphere-like surfaces, LHS in (α, β, t) on parametric ones. Evaluation
/// points are paired with `t = T`.
pub fn continuous_set(
    surface: &SurfaceModel,
    horizon: f64,
    counts: SampleCounts,
    seed: u64,
) -> Result<CollocationSet> {
    let (interior, initial) = if surface.is_sphere_like() {
        let pts = map_to_surface(&fibonacci_sphere(counts.surface_points)?, surface)?;
        let initial = map_to_surface(&fibonacci_sphere(counts.initial)?, surface)?;
        (tensor_time(&pts, horizon, counts.time_levels)?, initial)
    } else {
        let n = counts.surface_points * counts.time_levels.max(1);
        (
            lhs_parametric(n, surface, horizon, seed)?,
            lhs_surface(counts.initial, surface, seed ^ INITIAL_STREAM)?,
        )
    };
    let eval = evaluation_points(surface, counts.eval, seed)?
        .into_iter()
        .map(|x| (x, horizon))
        .collect();
    Ok(CollocationSet {
        interior,
        initial,
        eval,
        seed,
    })
}

/// Collocation set for the discrete-time scheme: surface points only (all
/// carry `t = 0`), initial data on the same points.
pub fn discrete_set(
    surface: &SurfaceModel,
    horizon: f64,
    counts: SampleCounts,
    seed: u64,
) -> Result<CollocationSet> {
    let pts = if surface.is_sphere_like() {
        map_to_surface(&fibonacci_sphere(counts.surface_points)?, surface)?
    } else {
        lhs_surface(counts.surface_points, surface, seed)?
    };
    let eval = evaluation_points(surface, counts.eval, seed)?
        .into_iter()
        .map(|x| (x, horizon))
        .collect();
    Ok(CollocationSet {
        interior: pts.iter().map(|x| (*x, 0.0)).collect(),
        initial: pts,
        eval,
        seed,
    })
}
