//! Gauss–Legendre implicit Runge–Kutta tableaus.

use std::path::Path;

use crate::error::{Error, Result};
use crate::legendre::gauss_legendre;
use crate::network::{write_atomic, write_values, LineReader};

pub const MAX_STAGES: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    pub q: usize,
    /// Row-major `q × q`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.q + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.q..(i + 1) * self.q]
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("gauss-legendre {}\n", self.q);
        write_values(&mut s, "c", &self.c);
        write_values(&mut s, "b", &self.b);
        write_values(&mut s, "a", &self.a);
        s
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut r = LineReader::new(text, origin);
        let q: usize = r
            .keyed("gauss-legendre")?
            .parse()
            .map_err(|e: std::num::ParseIntError| r.error(e.to_string()))?;
        if !(1..=MAX_STAGES).contains(&q) {
            return Err(Error::StageCountUnsupported(q));
        }
        let c = r.values("c")?;
        let b = r.values("b")?;
        let a = r.values("a")?;
        if c.len() != q || b.len() != q || a.len() != q * q {
            return Err(r.error("tableau arrays do not match the stage count"));
        }
        Ok(ButcherTableau { q, a, b, c })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?, path)
    }
}

/// Lagrange basis polynomial `ℓⱼ` on `nodes`, evaluated at `x`.
fn lagrange(nodes: &[f64], j: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != j)
        .map(|(_, &cm)| (x - cm) / (nodes[j] - cm))
        .product()
}

/// The `q`-stage Gauss–Legendre collocation method (order `2q`).
///
/// Nodes are the roots of the shifted Legendre polynomial. Entries of `a`
/// are the integrals `∫₀^{cᵢ} ℓⱼ`, evaluated exactly with the `q`-point rule
/// mapped onto `[0, cᵢ]`.
pub fn gauss_legendre_tableau(q: usize) -> Result<ButcherTableau> {
    if !(1..=MAX_STAGES).contains(&q) {
        return Err(Error::StageCountUnsupported(q));
    }
    let (x, w) = gauss_legendre(q);
    let c: Vec<f64> = x.iter().map(|xi| 0.5 * (xi + 1.0)).collect();
    let b: Vec<f64> = w.iter().map(|wi| 0.5 * wi).collect();
    let mut a = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            a[i * q + j] = c[i]
                * (0..q)
                    .map(|m| b[m] * lagrange(&c, j, c[i] * c[m]))
                    .sum::<f64>();
        }
    }
    Ok(ButcherTableau { q, a, b, c })
}

/// Worst residual of `B(p)` and `C(q)`.
pub fn order_check(t: &ButcherTableau, max_order: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..=max_order {
        let s: f64 = t.b.iter().zip(&t.c).map(|(b, c)| b * c.powi(k as i32 - 1)).sum();
        worst = worst.max((s - 1.0 / k as f64).abs());
    }
    for k in 1..=t.q {
        for i in 0..t.q {
            let s: f64 = (0..t.q).map(|j| t.a(i, j) * t.c[j].powi(k as i32 - 1)).sum();
            worst = worst.max((s - t.c[i].powi(k as i32) / k as f64).abs());
        }
    }
    worst
}

/// Solve a dense square system in place by partial-pivot LU.
fn solve(mut m: Vec<f64>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if m[piv * n + col].abs() <= 1e-14 * scale {
            return Err(Error::SingularStageSystem);
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            rhs.swap(piv, col);
        }
        for i in col + 1..n {
            let f = m[i * n + col] / m[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    m[i * n + k] -= f * m[col * n + k];
                }
                rhs[i] -= f * rhs[col];
            }
        }
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i * n + k] * rhs[k]).sum();
        rhs[i] = (rhs[i] - s) / m[i * n + i];
    }
    Ok(rhs)
}

/// Integrate `u' = λu` with the tableau; stage equations solved exactly.
pub fn ode_integrate(t: &ButcherTableau, lambda: f64, u0: f64, dt: f64, steps: usize) -> Result<f64> {
    let q = t.q;
    let z = lambda * dt;
    let mut m = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            m[i * q + j] = f64::from(u8::from(i == j)) - z * t.a(i, j);
        }
    }
    // Stage slopes k = λU with U = u·(I − z a)⁻¹ 𝟙, so one solve serves every step.
    let y = solve(m, vec![1.0; q])?;
    let growth = 1.0 + z * t.b.iter().zip(&y).map(|(b, y)| b * y).sum::<f64>();
    let mut u = u0;
    for _ in 0..steps {
        u *= growth;
    }
    Ok(u)
}

/// Stability function `R(z)` for complex `z = (re, im)`, via the real
/// `2q × 2q` embedding of the stage system.
pub fn stability_function(t: &ButcherTableau, z: (f64, f64)) -> Result<(f64, f64)> {
    let q = t.q;
    let n = 2 * q;
    let mut m = vec![0.0; n * n];
    for i in 0..q {
        for j in 0..q {
            let id = f64::from(u8::from(i == j));
            let (re, im) = (z.0 * t.a(i, j), z.1 * t.a(i, j));
            // [[I − Re, Im], [−Im, I − Re]] acting on (yr, yi)
            m[i * n + j] = id - re;
            m[i * n + q + j] = im;
            m[(q + i) * n + j] = -im;
            m[(q + i) * n + q + j] = id - re;
        }
    }
    let mut rhs = vec![0.0; n];
    rhs[..q].fill(1.0);
    let y = solve(m, rhs)?;
    let (mut sr, mut si) = (0.0, 0.0);
    for j in 0..q {
        sr += t.b[j] * y[j];
        si += t.b[j] * y[q + j];
    }
    Ok((1.0 + z.0 * sr - z.1 * si, z.0 * si + z.1 * sr))
}

/// Load a cached tableau from `dir`, or build and cache it.
pub fn cached_tableau(q: usize, dir: &Path) -> Result<ButcherTableau> {
    let path = dir.join(format!("gauss_legendre_{q}.txt"));
    if path.exists() {
        if let Ok(t) = ButcherTableau::load(&path) {
            if t.q == q {
                return Ok(t);
            }
        }
    }
    let t = gauss_legendre_tableau(q)?;
    std::fs::create_dir_all(dir)?;
    t.save(&path)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn midpoint() {
        let t = gauss_legendre_tableau(1).unwrap();
        assert_eq!((t.c[0], t.b[0], t.a[0]), (0.5, 1.0, 0.5));
        assert!(order_check(&t, 2) <= 1e-15);
    }

    #[test]
    fn two_stage_entries() {
        let t = gauss_legendre_tableau(2).unwrap();
        let r = 3f64.sqrt() / 6.0;
        let expect_c = [0.5 - r, 0.5 + r];
        let expect_a = [0.25, 0.25 - r, 0.25 + r, 0.25];
        for i in 0..2 {
            assert!((t.c[i] - expect_c[i]).abs() < 1e-15);
            assert!((t.b[i] - 0.5).abs() < 1e-15);
        }
        for (x, y) in t.a.iter().zip(&expect_a) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(order_check(&t, 4) <= 1e-13);
    }

    #[test]
    fn order_conditions_through_sixteen_stages() {
        for q in [1, 2, 4, 8, 16, 32] {
            let t = gauss_legendre_tableau(q).unwrap();
            let r = order_check(&t, 2 * q);
            assert!(r <= 1e-12, "q={q} residual {r:e}");
        }
    }

    #[test]
    fn detects_corrupted_weights() {
        let mut t = gauss_legendre_tableau(3).unwrap();
        t.b[0] += 1e-3;
        assert!(order_check(&t, 6) >= 9e-4);
    }

    #[test]
    fn stage_limits() {
        assert!(matches!(gauss_legendre_tableau(0), Err(Error::StageCountUnsupported(0))));
        assert!(matches!(gauss_legendre_tableau(100), Err(Error::StageCountUnsupported(100))));
    }

    #[test]
    fn exponential() {
        let t = gauss_legendre_tableau(4).unwrap();
        assert_eq!(ode_integrate(&t, 0.0, 1.7, 0.3, 5).unwrap(), 1.7);
        let u = ode_integrate(&t, 1.0, 1.0, 0.5, 1).unwrap();
        // One order-8 step at z = 0.5 is off by ~1.3e-10; the exact value is
        // the diagonal Padé approximant of eᶻ.
        assert!((u - pade(4, 0.5)).abs() < 1e-15);
        assert!((u - 0.5f64.exp()).abs() < 2e-10);
        let t8 = gauss_legendre_tableau(8).unwrap();
        assert!((ode_integrate(&t8, 1.0, 1.0, 0.5, 1).unwrap() - 0.5f64.exp()).abs() < 1e-14);
    }

    fn pade(q: usize, z: f64) -> f64 {
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let coef = |k: usize| fact(2 * q - k) * fact(q) / (fact(2 * q) * fact(k) * fact(q - k));
        let num: f64 = (0..=q).map(|k| coef(k) * z.powi(k as i32)).sum();
        let den: f64 = (0..=q).map(|k| coef(k) * (-z).powi(k as i32)).sum();
        num / den
    }

    #[test]
    fn fourth_order_convergence() {
        let t = gauss_legendre_tableau(2).unwrap();
        let err = |n: usize| (ode_integrate(&t, -1.0, 1.0, 1.0 / n as f64, n).unwrap() - (-1f64).exp()).abs();
        let slope = (err(2) / err(16)).log2() / 3.0;
        assert!((slope - 4.0).abs() < 0.2, "{slope}");
    }

    #[test]
    fn a_stable_on_imaginary_axis_and_left_plane() {
        for q in [1, 2, 4] {
            let t = gauss_legendre_tableau(q).unwrap();
            for k in -40..=40 {
                let y = k as f64 * 0.5;
                let (re, im) = stability_function(&t, (0.0, y)).unwrap();
                assert!((re * re + im * im).sqrt() <= 1.0 + 1e-12);
                let (re, im) = stability_function(&t, (-3.0, y)).unwrap();
                assert!((re * re + im * im).sqrt() <= 1.0);
            }
            let real = stability_function(&t, (-0.7, 0.0)).unwrap().0;
            assert!((real - ode_integrate(&t, -0.7, 1.0, 1.0, 1).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = cached_tableau(5, dir.path()).unwrap();
        let again = cached_tableau(5, dir.path()).unwrap();
        assert_eq!(t, again);
        assert_eq!(t, gauss_legendre_tableau(5).unwrap());
    }

    proptest! {
        #[test]
        fn structural_invariants(q in 1usize..=32) {
            let t = gauss_legendre_tableau(q).unwrap();
            prop_assert!((t.b.iter().sum::<f64>() - 1.0).abs() <= 1e-13);
            for i in 0..q {
                prop_assert!((t.row(i).iter().sum::<f64>() - t.c[i]).abs() <= 1e-13);
                prop_assert!((t.c[i] + t.c[q - 1 - i] - 1.0).abs() <= 1e-13);
                prop_assert!((t.b[i] - t.b[q - 1 - i]).abs() <= 1e-13);
                if i > 0 {
                    prop_assert!(t.c[i] > t.c[i - 1]);
                }
            }
        }
    }
}
