//! Brute-force intrinsic operators: central differences of closest-point
//! extensions, projected onto the tangent plane.

use super::{dot, Point, SurfaceModel, DEFAULT_FD_STEP};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceOp {
    Grad,
    Div,
    LB,
}

#[derive(Clone, Copy)]
pub enum Field<'a> {
    Scalar(&'a dyn Fn(&Point) -> f64),
    Vector(&'a dyn Fn(&Point) -> Point),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorValue {
    Scalar(f64),
    Vector(Point),
}

impl OperatorValue {
    pub fn scalar(self) -> Option<f64> {
        match self {
            OperatorValue::Scalar(v) => Some(v),
            OperatorValue::Vector(_) => None,
        }
    }

    pub fn vector(self) -> Option<Point> {
        match self {
            OperatorValue::Vector(v) => Some(v),
            OperatorValue::Scalar(_) => None,
        }
    }
}

/// Finite-difference operator oracle with step `h` (O(h²) truncation).
#[derive(Clone, Copy, Debug)]
pub struct FdOracle<'a> {
    surface: &'a SurfaceModel,
    step: f64,
}

fn offsets(x: &Point, i: usize, h: f64) -> (Point, Point) {
    let mut p = *x;
    let mut m = *x;
    p[i] += h;
    m[i] -= h;
    (p, m)
}

fn project(g: Point, n: &Point) -> Point {
    let gn = dot(&g, n);
    [g[0] - gn * n[0], g[1] - gn * n[1], g[2] - gn * n[2]]
}

/// Central-difference gradient of an ambient field.
pub fn fd_gradient<F>(f: F, x: &Point, h: f64) -> Result<Point>
where
    F: Fn(&Point) -> Result<f64>,
{
    let mut g = [0.0; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let (p, m) = offsets(x, i, h);
        *gi = (f(&p)? - f(&m)?) / (2.0 * h);
    }
    Ok(g)
}

/// Central-difference Jacobian `J[i][j] = ∂vᵢ/∂xⱼ` of an ambient vector field.
pub fn fd_jacobian<F>(v: F, x: &Point, h: f64) -> Result<[[f64; 3]; 3]>
where
    F: Fn(&Point) -> Result<Point>,
{
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let (p, m) = offsets(x, j, h);
        let (vp, vm) = (v(&p)?, v(&m)?);
        for i in 0..3 {
            jac[i][j] = (vp[i] - vm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Central-difference Hessian of an ambient scalar field.
pub fn fd_hessian<F>(f: F, x: &Point, h: f64) -> Result<[[f64; 3]; 3]>
where
    F: Fn(&Point) -> Result<f64>,
{
    let f0 = f(x)?;
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        let (p, m) = offsets(x, i, h);
        hess[i][i] = (f(&p)? - 2.0 * f0 + f(&m)?) / (h * h);
        for j in 0..i {
            let (pp, pm) = offsets(&p, j, h);
            let (mp, mm) = offsets(&m, j, h);
            let v = (f(&pp)? - f(&pm)? - f(&mp)? + f(&mm)?) / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}

impl<'a> FdOracle<'a> {
    pub fn new(surface: &'a SurfaceModel) -> Self {
        Self::with_step(surface, DEFAULT_FD_STEP)
    }

    pub fn with_step(surface: &'a SurfaceModel, step: f64) -> Self {
        FdOracle { surface, step }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Ordinary gradient `∇ū` of the closest-point extension.
    pub fn extension_gradient(&self, u: &dyn Fn(&Point) -> f64, x: &Point) -> Result<Point> {
        fd_gradient(|y| Ok(u(&self.surface.project_in_band(y)?)), x, self.step)
    }

    /// `∇_Γ u = ∇ū − ⟨∇ū, n⟩ n`.
    pub fn gradient(&self, u: &dyn Fn(&Point) -> f64, x: &Point) -> Result<Point> {
        let g = self.extension_gradient(u, x)?;
        let n = self.surface.normal(&self.surface.project_in_band(x)?)?;
        Ok(project(g, &n))
    }

    /// `∇_Γ·v = Σᵢ Dᵢvᵢ` for a vector field given on the surface.
    pub fn divergence(&self, v: &dyn Fn(&Point) -> Point, x: &Point) -> Result<f64> {
        self.divergence_with(|p| Ok(v(p)), x)
    }

    fn divergence_with<F>(&self, v: F, x: &Point) -> Result<f64>
    where
        F: Fn(&Point) -> Result<Point>,
    {
        let jac = fd_jacobian(|y| v(&self.surface.project_in_band(y)?), x, self.step)?;
        let n = self.surface.normal(&self.surface.project_in_band(x)?)?;
        // Σᵢ (Jᵢᵢ − (Jn)ᵢ nᵢ) = tr J − nᵀJn
        let mut div = 0.0;
        for i in 0..3 {
            let jn: f64 = (0..3).map(|j| jac[i][j] * n[j]).sum();
            div += jac[i][i] - jn * n[i];
        }
        Ok(div)
    }

    /// `Δ_Γ u = ∇_Γ·∇_Γ u`, composed from the two oracles above.
    pub fn laplace_beltrami(&self, u: &dyn Fn(&Point) -> f64, x: &Point) -> Result<f64> {
        self.divergence_with(|p| self.gradient(u, p), x)
    }
}

/// Dispatch to the requested intrinsic operator at a surface point.
pub fn surface_operator_oracle(
    surface: &SurfaceModel,
    field: Field<'_>,
    x: &Point,
    which: SurfaceOp,
) -> Result<OperatorValue> {
    let oracle = FdOracle::new(surface);
    match (which, field) {
        (SurfaceOp::Grad, Field::Scalar(u)) => Ok(OperatorValue::Vector(oracle.gradient(u, x)?)),
        (SurfaceOp::LB, Field::Scalar(u)) => {
            Ok(OperatorValue::Scalar(oracle.laplace_beltrami(u, x)?))
        }
        (SurfaceOp::Div, Field::Vector(v)) => Ok(OperatorValue::Scalar(oracle.divergence(v, x)?)),
        // Componentwise gradient of a vector field is not needed; the
        // divergence of a scalar field is undefined.
        (SurfaceOp::Grad | SurfaceOp::LB, Field::Vector(_)) | (SurfaceOp::Div, Field::Scalar(_)) => {
            Err(crate::error::Error::InvalidConfig(format!(
                "operator {which:?} does not apply to this field kind"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::fibonacci_sphere;

    fn sphere() -> SurfaceModel {
        SurfaceModel::unit_sphere()
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let s = sphere();
        let one = |_: &Point| 1.0;
        for x in fibonacci_sphere(10).unwrap() {
            let v = surface_operator_oracle(&s, Field::Scalar(&one), &x, SurfaceOp::LB)
                .unwrap()
                .scalar()
                .unwrap();
            assert!(v.abs() < 1e-6);
        }
    }

    #[test]
    fn spherical_harmonic_eigenvalues() {
        let s = sphere();
        let z = |x: &Point| x[2];
        let lb = FdOracle::new(&s).laplace_beltrami(&z, &[0.0, 0.0, 1.0]).unwrap();
        assert!((lb + 2.0).abs() < 1e-5, "{lb}");

        let xyz = |x: &Point| x[0] * x[1] * x[2];
        let r = 1.0 / 3f64.sqrt();
        let lb = FdOracle::new(&s).laplace_beltrami(&xyz, &[r, r, r]).unwrap();
        assert!((lb + 12.0 * r.powi(3)).abs() < 1e-4, "{lb}");
        assert!((lb + 2.3094).abs() < 1e-4);
    }

    #[test]
    fn coordinate_functions_are_eigenfunctions() {
        let s = sphere();
        let oracle = FdOracle::new(&s);
        for x in fibonacci_sphere(100).unwrap() {
            for i in 0..3 {
                let xi = move |p: &Point| p[i];
                let lb = oracle.laplace_beltrami(&xi, &x).unwrap();
                assert!((lb + 2.0 * x[i]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn composition_matches_lb() {
        let s = SurfaceModel::benchmark_torus();
        let oracle = FdOracle::new(&s);
        let u = |p: &Point| (2.0 * p[0]).sin() * p[2] + p[1] * p[1];
        for k in 0..20 {
            let x = s.chart((k as f64 * 0.31) % 1.0, (k as f64 * 0.17) % 1.0);
            let lb = oracle.laplace_beltrami(&u, &x).unwrap();
            let grad = |p: &Point| oracle.gradient(&u, p).unwrap();
            let div = oracle.divergence(&grad, &x).unwrap();
            let h = oracle.step();
            assert!((lb - div).abs() <= 10.0 * h * h, "{lb} {div}");
        }
    }

    #[test]
    fn rejects_mismatched_field_kinds() {
        let s = sphere();
        let u = |_: &Point| 0.0;
        assert!(surface_operator_oracle(&s, Field::Scalar(&u), &[0.0, 0.0, 1.0], SurfaceOp::Div)
            .is_err());
    }
}
