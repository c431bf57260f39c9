//! Quadrature rules on spheres, balls and flat discs centered at the origin.
//!
//! Points are `[x1, x2, y]`; for `n = 1` the `x2` component is always zero.
//! Rules on sets that straddle `{y = 0}` are split there, so integrands with a
//! kink across the crack plane are still integrated to second order.

use crate::scalar::Real;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    (nodes, weights)
}

/// A weighted point set.
#[derive(Clone, Debug)]
pub struct Rule<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut([T; 3]) -> T) -> T {
        self.points.iter().zip(&self.weights).fold(T::zero(), |acc, (&p, &w)| acc + w * f(p))
    }

    /// Same rule shifted to `center` on the crack plane.
    pub fn translated(&self, center: [T; 2]) -> Self {
        let points = self.points.iter().map(|p| [p[0] + center[0], p[1] + center[1], p[2]]).collect();
        Self { points, weights: self.weights.clone() }
    }
}

/// Node count used on a sphere of radius `r` over a grid of spacing `hx`:
/// at least `max(64, 8 r / hx)`, rounded up to a multiple of 4.
pub fn sphere_nodes(r: f64, hx: f64) -> usize {
    let k = (8.0 * r / hx).ceil().max(64.0) as usize;
    k.div_ceil(4) * 4
}

/// The sphere `S^n` of radius `r` in `R^{n+1}`. For `n = 1` this is the
/// trapezoidal rule with `k` equispaced angles including `y = 0`; for `n = 2`
/// a Gauss-Legendre rule in the cosine of the polar angle on each hemisphere
/// times a `k`-point trapezoidal rule in azimuth.
pub fn sphere<T: Real>(n: usize, r: T, k: usize) -> Rule<T> {
    let r64 = r.to_f64_lossy();
    let two_pi = std::f64::consts::TAU;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    if n == 1 {
        for j in 0..k {
            let phi = two_pi * j as f64 / k as f64;
            points.push([T::lit(r64 * phi.cos()), T::zero(), T::lit(r64 * phi.sin())]);
            weights.push(T::lit(r64 * two_pi / k as f64));
        }
    } else {
        let kp = (k / 4).max(8);
        let (c, w) = gauss_legendre(kp);
        for (ci, wi) in c.iter().zip(&w) {
            // map [-1, 1] onto cos(polar) in (0, 1)
            let cz = 0.5 * (ci + 1.0);
            let s = (1.0 - cz * cz).sqrt();
            for j in 0..k {
                let phi = two_pi * j as f64 / k as f64;
                let wt = 0.5 * wi * two_pi / k as f64 * r64 * r64;
                for sign in [1.0, -1.0] {
                    points.push([
                        T::lit(r64 * s * phi.cos()),
                        T::lit(r64 * s * phi.sin()),
                        T::lit(sign * r64 * cz),
                    ]);
                    weights.push(T::lit(wt));
                }
            }
        }
    }
    Rule { points, weights }
}

/// The solid ball `B_r`: `kr` radial Gauss-Legendre nodes times [`sphere`].
pub fn ball<T: Real>(n: usize, r: T, kr: usize, k: usize) -> Rule<T> {
    let r64 = r.to_f64_lossy();
    let (x, w) = gauss_legendre(kr);
    let unit = sphere::<f64>(n, 1.0, k);
    let mut points = Vec::with_capacity(kr * unit.len());
    let mut weights = Vec::with_capacity(kr * unit.len());
    for (xi, wi) in x.iter().zip(&w) {
        let rho = 0.5 * r64 * (xi + 1.0);
        let jac = 0.5 * r64 * wi * rho.powi(n as i32);
        for (p, &wp) in unit.points.iter().zip(&unit.weights) {
            points.push([T::lit(rho * p[0]), T::lit(rho * p[1]), T::lit(rho * p[2])]);
            weights.push(T::lit(jac * wp));
        }
    }
    Rule { points, weights }
}

/// The flat ball `B^n_r` inside `{y = 0}`. For `n = 1`, composite 3-point
/// Gauss-Legendre on `panels` subintervals; for `n = 2`, polar coordinates
/// with `panels` radial panels and a `k`-point azimuthal rule.
pub fn flat_ball<T: Real>(n: usize, r: T, panels: usize, k: usize) -> Rule<T> {
    let r64 = r.to_f64_lossy();
    let (x, w) = gauss_legendre(3);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    if n == 1 {
        let h = 2.0 * r64 / panels as f64;
        for p in 0..panels {
            let a = -r64 + h * p as f64;
            for (xi, wi) in x.iter().zip(&w) {
                points.push([T::lit(a + 0.5 * h * (xi + 1.0)), T::zero(), T::zero()]);
                weights.push(T::lit(0.5 * h * wi));
            }
        }
    } else {
        let h = r64 / panels as f64;
        let two_pi = std::f64::consts::TAU;
        for p in 0..panels {
            for (xi, wi) in x.iter().zip(&w) {
                let rho = h * p as f64 + 0.5 * h * (xi + 1.0);
                for j in 0..k {
                    let phi = two_pi * j as f64 / k as f64;
                    points.push([T::lit(rho * phi.cos()), T::lit(rho * phi.sin()), T::zero()]);
                    weights.push(T::lit(0.5 * h * wi * rho * two_pi / k as f64));
                }
            }
        }
    }
    Rule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for k in 1..=12 {
            let (x, w) = gauss_legendre(k);
            for deg in 0..2 * k {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "k={k} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn measures() {
        assert_relative_eq!(sphere(1, 0.5f64, 64).integrate(|_| 1.0), PI, epsilon = 1e-12);
        assert_relative_eq!(sphere(2, 2.0f64, 64).integrate(|_| 1.0), 16.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(ball(1, 2.0f64, 8, 64).integrate(|_| 1.0), 4.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(ball(2, 1.0f64, 8, 64).integrate(|_| 1.0), 4.0 * PI / 3.0, epsilon = 1e-12);
        assert_relative_eq!(flat_ball(1, 0.7f64, 5, 0).integrate(|_| 1.0), 1.4, epsilon = 1e-12);
        assert_relative_eq!(flat_ball(2, 1.0f64, 4, 32).integrate(|_| 1.0), PI, epsilon = 1e-12);
    }

    #[test]
    fn sphere_moments() {
        // integral of y^2 over the unit 2-sphere is 4 pi / 3
        let q = sphere(2, 1.0f64, 64).integrate(|p| p[2] * p[2]);
        assert_relative_eq!(q, 4.0 * PI / 3.0, epsilon = 1e-12);
        // |y| has a kink at the equator; the split rule keeps it exact
        let q = sphere(2, 1.0f64, 64).integrate(|p| p[2].abs());
        assert_relative_eq!(q, 2.0 * PI, epsilon = 1e-12);
        let q = sphere(1, 1.0f64, 64).integrate(|p| p[2].abs());
        assert_relative_eq!(q, 4.0, epsilon = 5e-3);
    }

    #[test]
    fn node_count_policy() {
        assert_eq!(sphere_nodes(0.1, 0.01), 80);
        assert_eq!(sphere_nodes(0.01, 0.01), 64);
        assert_eq!(sphere_nodes(0.1, 0.03), 64);
    }
}
