use super::{Point, SurfaceModel};
use crate::error::{Error, Result};
use crate::legendre::gauss_legendre;

/// Tensor-product surface quadrature over the chart.
///
/// Periodic chart directions use the rectangle rule (spectrally accurate for
/// smooth periodic integrands). The polar direction of sphere-like charts is
/// not periodic and uses Gauss–Legendre nodes instead.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `resolution` nodes per direction (twice that in azimuth for spheres).
    pub fn new(surface: &SurfaceModel, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidCount { got: 0, min: 1 });
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        if surface.is_sphere_like() {
            let (x, w) = gauss_legendre(resolution);
            let n_az = 2 * resolution;
            for (xi, wi) in x.iter().zip(&w) {
                let alpha = 0.5 * (xi + 1.0);
                for j in 0..n_az {
                    let beta = j as f64 / n_az as f64;
                    nodes.push(surface.chart(alpha, beta));
                    weights.push(0.5 * wi / n_az as f64 * surface.area_element(alpha, beta));
                }
            }
        } else {
            let n = resolution as f64;
            for i in 0..resolution {
                for j in 0..resolution {
                    let (alpha, beta) = (i as f64 / n, j as f64 / n);
                    nodes.push(surface.chart(alpha, beta));
                    weights.push(surface.area_element(alpha, beta) / (n * n));
                }
            }
        }
        Ok(QuadratureRule { nodes, weights })
    }

    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// Integrate precomputed nodal values.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| w * v).sum()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `∫_Γ field dA` at the given resolution.
pub fn quadrature<F: Fn(&Point) -> f64>(
    surface: &SurfaceModel,
    field: F,
    resolution: usize,
) -> Result<f64> {
    Ok(QuadratureRule::new(surface, resolution)?.integrate(field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_area_and_odd_moment() {
        let s = SurfaceModel::unit_sphere();
        let area = quadrature(&s, |_| 1.0, 512).unwrap();
        assert!((area - 4.0 * PI).abs() < 1e-6);
        let odd = quadrature(&s, |x| x[2], 512).unwrap();
        assert!(odd.abs() < 1e-10);
        let second = quadrature(&s, |x| x[2] * x[2], 64).unwrap();
        assert!((second - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn torus_area_matches_formula() {
        for s in [
            SurfaceModel::benchmark_torus(),
            SurfaceModel::ImplicitTorus { major: 1.0, minor: 0.25 },
        ] {
            let area = quadrature(&s, |_| 1.0, 64).unwrap();
            assert!((area - PI * PI).abs() < 1e-6, "{area}");
        }
    }

    #[test]
    fn ellipsoid_volume_weighted_area() {
        // Area of the spheroid x²/2 + y² + z² = 1 (prolate, a = √2, b = 1).
        let s = SurfaceModel::Ellipsoid {
            semi_axes: [1.0, 1.0, 2f64.sqrt()],
        };
        let a = 2f64.sqrt();
        let e = (1.0 - 1.0 / (a * a)).sqrt();
        let exact = 2.0 * PI * (1.0 + a * e.asin() / e);
        let area = quadrature(&s, |_| 1.0, 128).unwrap();
        assert!((area - exact).abs() < 1e-8, "{area} {exact}");
    }

    #[test]
    fn second_order_convergence_or_better() {
        let s = SurfaceModel::benchmark_torus();
        let f = |x: &Point| (3.0 * x[0]).sin() * (x[2] * 5.0).cos() + x[1].powi(2);
        let reference = quadrature(&s, f, 256).unwrap();
        let e8 = (quadrature(&s, f, 8).unwrap() - reference).abs();
        let e16 = (quadrature(&s, f, 16).unwrap() - reference).abs();
        assert!(e16 <= e8 / 4.0 || e16 < 1e-12);
    }
}
