//! Closed surfaces in R³: level sets, normals, mean curvature, closest-point
//! maps and charts.
//!
//! Mean curvature follows the convention `∇·n = −2H`, so the unit sphere has
//! `H = −1`. Textbooks often use the opposite sign; only `|H|` enters the
//! estimate constant `C = max(1, 2|H|)`.

pub mod oracle;
mod quadrature;

use std::f64::consts::PI;

pub use oracle::{surface_operator_oracle, Field, FdOracle, OperatorValue, SurfaceOp};
pub use quadrature::{quadrature, QuadratureRule};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Finite-difference step used by the operator oracles.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Below this gradient norm the level set has no usable normal.
const DEGENERATE_GRAD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurfaceModel {
    /// `|x| = radius`, centered at the origin.
    Sphere { radius: f64 },
    /// `Σ xᵢ²/aᵢ² = 1` with semi-axes `aᵢ`.
    Ellipsoid { semi_axes: [f64; 3] },
    /// `(√(x²+y²) − major)² + z² = minor²`.
    ImplicitTorus { major: f64, minor: f64 },
    /// Same torus, with normals and curvature taken from the chart.
    ParametricTorus { major: f64, minor: f64 },
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

impl SurfaceModel {
    pub fn unit_sphere() -> Self {
        SurfaceModel::Sphere { radius: 1.0 }
    }

    /// The heated torus `(√(x²+y²) − 1)² + z² = 1/16`.
    pub fn benchmark_torus() -> Self {
        SurfaceModel::ParametricTorus {
            major: 1.0,
            minor: 0.25,
        }
    }

    /// Parse a surface from a kind string and its numeric parameters.
    pub fn from_parts(kind: &str, params: &[f64]) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidConfig(format!("surface `{kind}`: {msg}"));
        let positive = |v: &[f64]| v.iter().all(|p| p.is_finite() && *p > 0.0);
        let surface = match (kind, params.len()) {
            ("sphere", 0) => SurfaceModel::unit_sphere(),
            ("sphere", 1) => SurfaceModel::Sphere { radius: params[0] },
            ("ellipsoid", 3) => SurfaceModel::Ellipsoid {
                semi_axes: [params[0], params[1], params[2]],
            },
            ("torus" | "parametric-torus", 2) => SurfaceModel::ParametricTorus {
                major: params[0],
                minor: params[1],
            },
            ("torus" | "parametric-torus", 0) => SurfaceModel::benchmark_torus(),
            ("implicit-torus", 2) => SurfaceModel::ImplicitTorus {
                major: params[0],
                minor: params[1],
            },
            ("sphere" | "ellipsoid" | "torus" | "parametric-torus" | "implicit-torus", n) => {
                return Err(bad(&format!("wrong number of parameters ({n})")))
            }
            _ => return Err(bad("unknown kind")),
        };
        if !positive(params) {
            return Err(bad("parameters must be positive"));
        }
        if let Some((major, minor)) = surface.torus_radii() {
            if minor >= major {
                return Err(bad("minor radius must be smaller than the major radius"));
            }
        }
        Ok(surface)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SurfaceModel::Sphere { .. } => "sphere",
            SurfaceModel::Ellipsoid { .. } => "ellipsoid",
            SurfaceModel::ImplicitTorus { .. } => "implicit-torus",
            SurfaceModel::ParametricTorus { .. } => "parametric-torus",
        }
    }

    pub fn parameters(&self) -> Vec<f64> {
        match *self {
            SurfaceModel::Sphere { radius } => vec![radius],
            SurfaceModel::Ellipsoid { semi_axes } => semi_axes.to_vec(),
            SurfaceModel::ImplicitTorus { major, minor }
            | SurfaceModel::ParametricTorus { major, minor } => vec![major, minor],
        }
    }

    fn torus_radii(&self) -> Option<(f64, f64)> {
        match *self {
            SurfaceModel::ImplicitTorus { major, minor }
            | SurfaceModel::ParametricTorus { major, minor } => Some((major, minor)),
            _ => None,
        }
    }

    pub fn is_sphere_like(&self) -> bool {
        matches!(self, SurfaceModel::Sphere { .. } | SurfaceModel::Ellipsoid { .. })
    }

    /// Smallest length scale of the surface (sphere radius, torus tube radius,
    /// smallest curvature radius of the ellipsoid).
    pub fn feature_size(&self) -> f64 {
        match *self {
            SurfaceModel::Sphere { radius } => radius,
            SurfaceModel::Ellipsoid { semi_axes: a } => {
                let max = a.iter().cloned().fold(f64::MIN, f64::max);
                let min = a.iter().cloned().fold(f64::MAX, f64::min);
                min * min / max
            }
            SurfaceModel::ImplicitTorus { minor, .. }
            | SurfaceModel::ParametricTorus { minor, .. } => minor,
        }
    }

    /// Half-width of the tubular neighbourhood where the closest-point map is
    /// used.
    pub fn band_width(&self) -> f64 {
        0.1 * self.feature_size()
    }

    /// Level function `φ` with `Γ = {φ = 0}`. Sphere and torus use forms that
    /// are O(1) near the surface; the torus uses the `(ρ − R)² + z² − r²` form.
    pub fn level(&self, x: &Point) -> f64 {
        match *self {
            SurfaceModel::Sphere { radius } => norm(x) - radius,
            SurfaceModel::Ellipsoid { semi_axes: a } => {
                (0..3).map(|i| (x[i] / a[i]).powi(2)).sum::<f64>() - 1.0
            }
            SurfaceModel::ImplicitTorus { major, minor }
            | SurfaceModel::ParametricTorus { major, minor } => {
                let rho = x[0].hypot(x[1]);
                (rho - major).powi(2) + x[2] * x[2] - minor * minor
            }
        }
    }

    /// Gradient of [`level`](Self::level).
    pub fn level_gradient(&self, x: &Point) -> Point {
        match *self {
            SurfaceModel::Sphere { .. } => {
                let r = norm(x);
                if r == 0.0 {
                    [0.0; 3]
                } else {
                    scale(x, 1.0 / r)
                }
            }
            SurfaceModel::Ellipsoid { semi_axes: a } => {
                [2.0 * x[0] / (a[0] * a[0]), 2.0 * x[1] / (a[1] * a[1]), 2.0 * x[2] / (a[2] * a[2])]
            }
            SurfaceModel::ImplicitTorus { major, .. } | SurfaceModel::ParametricTorus { major, .. } => {
                let rho = x[0].hypot(x[1]);
                if rho == 0.0 {
                    return [0.0, 0.0, 2.0 * x[2]];
                }
                let q = rho - major;
                [2.0 * q * x[0] / rho, 2.0 * q * x[1] / rho, 2.0 * x[2]]
            }
        }
    }

    /// Hessian of [`level`](Self::level).
    pub fn level_hessian(&self, x: &Point) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        match *self {
            SurfaceModel::Sphere { .. } => {
                let r = norm(x);
                for i in 0..3 {
                    for j in 0..3 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i][j] = (delta - x[i] * x[j] / (r * r)) / r;
                    }
                }
            }
            SurfaceModel::Ellipsoid { semi_axes: a } => {
                for i in 0..3 {
                    h[i][i] = 2.0 / (a[i] * a[i]);
                }
            }
            SurfaceModel::ImplicitTorus { major, .. } | SurfaceModel::ParametricTorus { major, .. } => {
                let rho = x[0].hypot(x[1]);
                let q = rho - major;
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        let xx = x[i] * x[j];
                        h[i][j] = 2.0 * (xx / (rho * rho) + q * (delta / rho - xx / rho.powi(3)));
                    }
                }
                h[2][2] = 2.0;
            }
        }
        h
    }

    /// Outward unit normal at a surface point.
    pub fn normal(&self, x: &Point) -> Result<Point> {
        if let SurfaceModel::ParametricTorus { .. } = self {
            let (alpha, beta) = self.chart_coordinates(x)?;
            let (du, dv) = self.chart_partials(alpha, beta);
            // du × dv points away from the core circle.
            let n = cross(&du, &dv);
            let len = norm(&n);
            if len < DEGENERATE_GRAD {
                return Err(Error::DegenerateNormal(len));
            }
            return Ok(scale(&n, 1.0 / len));
        }
        let g = self.level_gradient(x);
        let len = norm(&g);
        if len < DEGENERATE_GRAD {
            return Err(Error::DegenerateNormal(len));
        }
        Ok(scale(&g, 1.0 / len))
    }

    /// Mean curvature `H = −½ ∇·n`.
    pub fn mean_curvature(&self, x: &Point) -> Result<f64> {
        match *self {
            SurfaceModel::ParametricTorus { major, minor } => {
                let (_, beta) = self.chart_coordinates(x)?;
                let cos_v = (2.0 * PI * beta).cos();
                let k_tube = 1.0 / minor;
                let k_ring = cos_v / (major + minor * cos_v);
                Ok(-0.5 * (k_tube + k_ring))
            }
            _ => {
                let g = self.level_gradient(x);
                let len = norm(&g);
                if len < DEGENERATE_GRAD {
                    return Err(Error::DegenerateNormal(len));
                }
                let n = scale(&g, 1.0 / len);
                let h = self.level_hessian(x);
                let trace = h[0][0] + h[1][1] + h[2][2];
                let mut nhn = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        nhn += n[i] * h[i][j] * n[j];
                    }
                }
                Ok(-0.5 * (trace - nhn) / len)
            }
        }
    }

    /// Closest point on the surface. Fails where the projection is not unique.
    pub fn closest_point(&self, x: &Point) -> Result<Point> {
        match *self {
            SurfaceModel::Sphere { radius } => {
                let r = norm(x);
                if r == 0.0 {
                    return Err(Error::AmbiguousProjection(*x));
                }
                Ok(scale(x, radius / r))
            }
            SurfaceModel::Ellipsoid { semi_axes } => Ok(ellipsoid_closest_point(semi_axes, x)),
            SurfaceModel::ImplicitTorus { major, minor }
            | SurfaceModel::ParametricTorus { major, minor } => {
                let rho = x[0].hypot(x[1]);
                if rho == 0.0 {
                    return Err(Error::AmbiguousProjection(*x));
                }
                let core = [major * x[0] / rho, major * x[1] / rho, 0.0];
                let off = sub(x, &core);
                let d = norm(&off);
                if d == 0.0 {
                    return Err(Error::AmbiguousProjection(*x));
                }
                let p = scale(&off, minor / d);
                Ok([core[0] + p[0], core[1] + p[1], core[2] + p[2]])
            }
        }
    }

    /// Closest point, after checking that `x` lies in the extension band.
    pub fn project_in_band(&self, x: &Point) -> Result<Point> {
        let cp = self.closest_point(x)?;
        let distance = norm(&sub(x, &cp));
        let band = self.band_width();
        if distance > band * (1.0 + 1e-12) {
            return Err(Error::OutsideBand { distance, band });
        }
        Ok(cp)
    }

    /// Chart `(α, β) ∈ [0,1]² → Γ`. Spheres and ellipsoids use polar angle
    /// `πα` and azimuth `2πβ`; tori use ring angle `2πα` and tube angle `2πβ`.
    pub fn chart(&self, alpha: f64, beta: f64) -> Point {
        match *self {
            SurfaceModel::Sphere { radius } => {
                let (theta, phi) = (PI * alpha, 2.0 * PI * beta);
                [
                    radius * theta.sin() * phi.cos(),
                    radius * theta.sin() * phi.sin(),
                    radius * theta.cos(),
                ]
            }
            SurfaceModel::Ellipsoid { semi_axes: a } => {
                let (theta, phi) = (PI * alpha, 2.0 * PI * beta);
                [
                    a[0] * theta.sin() * phi.cos(),
                    a[1] * theta.sin() * phi.sin(),
                    a[2] * theta.cos(),
                ]
            }
            SurfaceModel::ImplicitTorus { major, minor }
            | SurfaceModel::ParametricTorus { major, minor } => {
                let (u, v) = (2.0 * PI * alpha, 2.0 * PI * beta);
                let ring = major + minor * v.cos();
                [ring * u.cos(), ring * u.sin(), minor * v.sin()]
            }
        }
    }

    /// Partial derivatives of [`chart`](Self::chart) with respect to α and β.
    pub fn chart_partials(&self, alpha: f64, beta: f64) -> (Point, Point) {
        match *self {
            SurfaceModel::Sphere { radius } => {
                Self::Ellipsoid { semi_axes: [radius; 3] }.chart_partials(alpha, beta)
            }
            SurfaceModel::Ellipsoid { semi_axes: a } => {
                let (theta, phi) = (PI * alpha, 2.0 * PI * beta);
                let (st, ct, sp, cp) = (theta.sin(), theta.cos(), phi.sin(), phi.cos());
                (
                    [PI * a[0] * ct * cp, PI * a[1] * ct * sp, -PI * a[2] * st],
                    [-2.0 * PI * a[0] * st * sp, 2.0 * PI * a[1] * st * cp, 0.0],
                )
            }
            SurfaceModel::ImplicitTorus { major, minor }
            | SurfaceModel::ParametricTorus { major, minor } => {
                let (u, v) = (2.0 * PI * alpha, 2.0 * PI * beta);
                let ring = major + minor * v.cos();
                (
                    [-2.0 * PI * ring * u.sin(), 2.0 * PI * ring * u.cos(), 0.0],
                    [
                        -2.0 * PI * minor * v.sin() * u.cos(),
                        -2.0 * PI * minor * v.sin() * u.sin(),
                        2.0 * PI * minor * v.cos(),
                    ],
                )
            }
        }
    }

    /// Inverse of the chart for a point on (or near) the surface, with
    /// `(α, β) ∈ [0, 1)²`.
    pub fn chart_coordinates(&self, x: &Point) -> Result<(f64, f64)> {
        let wrap = |a: f64| {
            let t = a / (2.0 * PI);
            t - t.floor()
        };
        match *self {
            SurfaceModel::Sphere { .. } | SurfaceModel::Ellipsoid { .. } => {
                let a = match *self {
                    SurfaceModel::Sphere { radius } => [radius; 3],
                    SurfaceModel::Ellipsoid { semi_axes } => semi_axes,
                    _ => unreachable!(),
                };
                let y = [x[0] / a[0], x[1] / a[1], x[2] / a[2]];
                let r = norm(&y);
                if r == 0.0 {
                    return Err(Error::AmbiguousProjection(*x));
                }
                let theta = (y[2] / r).clamp(-1.0, 1.0).acos();
                Ok((theta / PI, wrap(y[1].atan2(y[0]))))
            }
            SurfaceModel::ImplicitTorus { major, .. }
            | SurfaceModel::ParametricTorus { major, .. } => {
                let rho = x[0].hypot(x[1]);
                if rho == 0.0 {
                    return Err(Error::AmbiguousProjection(*x));
                }
                Ok((wrap(x[1].atan2(x[0])), wrap(x[2].atan2(rho - major))))
            }
        }
    }

    /// Area element `|∂chart/∂α × ∂chart/∂β|`.
    pub fn area_element(&self, alpha: f64, beta: f64) -> f64 {
        match *self {
            SurfaceModel::Sphere { radius } => 2.0 * PI * PI * radius * radius * (PI * alpha).sin(),
            SurfaceModel::ImplicitTorus { major, minor }
            | SurfaceModel::ParametricTorus { major, minor } => {
                4.0 * PI * PI * minor * (major + minor * (2.0 * PI * beta).cos())
            }
            SurfaceModel::Ellipsoid { .. } => {
                let (da, db) = self.chart_partials(alpha, beta);
                norm(&cross(&da, &db))
            }
        }
    }
}

/// Closest point on an axis-aligned ellipsoid: `yᵢ = aᵢ² xᵢ / (aᵢ² + t)` with
/// `t` the root of the monotone secular equation, found by bisection.
fn ellipsoid_closest_point(a: [f64; 3], x: &Point) -> Point {
    let a2 = [a[0] * a[0], a[1] * a[1], a[2] * a[2]];
    let secular = |t: f64| -> f64 {
        (0..3).map(|i| a2[i] * x[i] * x[i] / (a2[i] + t).powi(2)).sum::<f64>() - 1.0
    };
    let min_a2 = a2.iter().cloned().fold(f64::MAX, f64::min);
    let mut lo = -min_a2 * (1.0 - 1e-12);
    let mut hi = norm(x) * a.iter().cloned().fold(0.0, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if secular(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1e-300) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    [a2[0] * x[0] / (a2[0] + t), a2[1] * x[1] / (a2[1] + t), a2[2] * x[2] / (a2[2] + t)]
}

/// `ū(x) = u(cp(x))`, constant along normal lines.
pub fn closest_point_extend<F>(surface: &SurfaceModel, u: F, x: &Point) -> Result<f64>
where
    F: Fn(&Point) -> f64,
{
    Ok(u(&surface.project_in_band(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> SurfaceModel {
        SurfaceModel::ImplicitTorus {
            major: 1.0,
            minor: 0.25,
        }
    }

    /// Divergence of the normalized level-set gradient by central differences.
    fn fd_normal_divergence(surface: &SurfaceModel, x: &Point) -> f64 {
        let h = 1e-5;
        let unit = |y: &Point| {
            let g = surface.level_gradient(y);
            scale(&g, 1.0 / norm(&g))
        };
        (0..3)
            .map(|i| {
                let mut p = *x;
                let mut m = *x;
                p[i] += h;
                m[i] -= h;
                (unit(&p)[i] - unit(&m)[i]) / (2.0 * h)
            })
            .sum()
    }

    fn assert_vec(a: Point, b: Point, tol: f64) {
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn normals_at_axis_points() {
        let n = SurfaceModel::unit_sphere().normal(&[0.0, 0.0, 1.0]).unwrap();
        assert_vec(n, [0.0, 0.0, 1.0], 1e-15);
        for t in [torus(), SurfaceModel::benchmark_torus()] {
            assert_vec(t.normal(&[0.0, 1.25, 0.0]).unwrap(), [0.0, 1.0, 0.0], 1e-12);
            assert_vec(t.normal(&[0.0, 0.75, 0.0]).unwrap(), [0.0, -1.0, 0.0], 1e-12);
            assert_vec(t.normal(&[0.0, 1.0, 0.25]).unwrap(), [0.0, 0.0, 1.0], 1e-12);
        }
        let e = SurfaceModel::Ellipsoid {
            semi_axes: [2f64.sqrt(), 1.0, 1.0],
        };
        assert_vec(e.normal(&[2f64.sqrt(), 0.0, 0.0]).unwrap(), [1.0, 0.0, 0.0], 1e-15);
    }

    #[test]
    fn degenerate_normal_is_reported() {
        let e = SurfaceModel::Ellipsoid {
            semi_axes: [1.0, 2.0, 3.0],
        };
        assert!(matches!(e.normal(&[0.0; 3]), Err(Error::DegenerateNormal(_))));
    }

    #[test]
    fn mean_curvature_matches_fd_divergence() {
        let sphere = SurfaceModel::unit_sphere();
        let x = [0.48, -0.6, 0.64];
        let h = sphere.mean_curvature(&x).unwrap();
        assert!((h + 1.0).abs() < 1e-12);
        assert!((-0.5 * fd_normal_divergence(&sphere, &x) - h).abs() < 1e-8);

        let t = torus();
        let p = [0.0, 1.25, 0.0];
        let h = t.mean_curvature(&p).unwrap();
        assert!((h.abs() - 2.4).abs() < 1e-12);
        assert!((-0.5 * fd_normal_divergence(&t, &p) - h).abs() < 1e-7);
        let hp = SurfaceModel::benchmark_torus().mean_curvature(&p).unwrap();
        assert!((hp - h).abs() < 1e-12);

        let big = SurfaceModel::Sphere { radius: 1e3 };
        let h = big.mean_curvature(&[0.0, 0.0, 1e3]).unwrap();
        assert!(h.abs() <= 1.1e-3);
    }

    #[test]
    fn torus_curvature_agrees_between_kinds() {
        let (imp, par) = (torus(), SurfaceModel::benchmark_torus());
        for k in 0..40 {
            let p = par.chart(0.137 * k as f64 % 1.0, 0.025 * k as f64);
            let a = imp.mean_curvature(&p).unwrap();
            let b = par.mean_curvature(&p).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} {b}");
            assert_vec(imp.normal(&p).unwrap(), par.normal(&p).unwrap(), 1e-12);
        }
    }

    #[test]
    fn closest_point_extension() {
        let sphere = SurfaceModel::unit_sphere();
        let u = |x: &Point| x[2];
        assert_eq!(closest_point_extend(&sphere, u, &[0.0, 0.0, 1.05]).unwrap(), 1.0);
        assert_eq!(closest_point_extend(&sphere, u, &[0.0, 0.0, 0.9]).unwrap(), 1.0);
        assert!(matches!(
            closest_point_extend(&sphere, u, &[0.0, 0.0, 1.2]),
            Err(Error::OutsideBand { .. })
        ));
        let t = torus();
        for p in [[0.0, 1.27, 0.01], [0.8, 0.6, -0.24], [-0.3, -0.9, 0.24]] {
            assert_eq!(closest_point_extend(&t, |_| 1.0, &p).unwrap(), 1.0);
        }
        assert!(matches!(
            t.closest_point(&[0.0, 0.0, 0.1]),
            Err(Error::AmbiguousProjection(_))
        ));
        assert!(matches!(
            t.closest_point(&[1.0, 0.0, 0.0]),
            Err(Error::AmbiguousProjection(_))
        ));
    }

    #[test]
    fn ellipsoid_projection_lands_on_surface() {
        let e = SurfaceModel::Ellipsoid {
            semi_axes: [2f64.sqrt(), 1.0, 1.0],
        };
        let x = [1.0, 0.5, 0.6];
        let cp = e.closest_point(&x).unwrap();
        assert!(e.level(&cp).abs() < 1e-12);
        // x − cp is parallel to the normal at cp.
        let n = e.normal(&cp).unwrap();
        let d = sub(&x, &cp);
        let c = cross(&d, &n);
        assert!(norm(&c) < 1e-12);
    }

    #[test]
    fn chart_is_periodic_and_on_surface() {
        let t = SurfaceModel::benchmark_torus();
        for k in 0..10 {
            let b = k as f64 / 10.0;
            assert_vec(t.chart(0.0, b), t.chart(1.0, b), 1e-14);
            assert_vec(t.chart(b, 0.0), t.chart(b, 1.0), 1e-14);
            assert!(t.level(&t.chart(b, 0.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_is_orthogonal_to_chart_partials() {
        let surfaces = [
            SurfaceModel::unit_sphere(),
            SurfaceModel::Ellipsoid {
                semi_axes: [2f64.sqrt(), 1.0, 1.0],
            },
            torus(),
            SurfaceModel::benchmark_torus(),
        ];
        for s in surfaces {
            for k in 1..30 {
                let (a, b) = ((k as f64 * 0.618) % 1.0, (k as f64 * 0.414) % 1.0);
                let a = 0.02 + 0.96 * a;
                let x = s.chart(a, b);
                let n = s.normal(&x).unwrap();
                assert!((norm(&n) - 1.0).abs() < 1e-12);
                let (da, db) = s.chart_partials(a, b);
                assert!(dot(&n, &da).abs() < 1e-9 && dot(&n, &db).abs() < 1e-9, "{s:?}");
                let (ra, rb) = s.chart_coordinates(&x).unwrap();
                assert_vec(s.chart(ra, rb), x, 1e-12);
            }
        }
    }

    #[test]
    fn parses_surface_descriptions() {
        assert_eq!(SurfaceModel::from_parts("sphere", &[]).unwrap(), SurfaceModel::unit_sphere());
        assert_eq!(
            SurfaceModel::from_parts("torus", &[1.0, 0.25]).unwrap(),
            SurfaceModel::benchmark_torus()
        );
        assert!(SurfaceModel::from_parts("torus", &[0.2, 0.25]).is_err());
        assert!(SurfaceModel::from_parts("klein", &[]).is_err());
        assert!(SurfaceModel::from_parts("sphere", &[-1.0]).is_err());
    }
}
