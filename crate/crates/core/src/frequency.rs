//! Boundary mass `F(r) = int_{dB_r} v^2`, the truncated frequency
//! `Phi(r) = r d/dr log max{F(r), r^{n+4}}` and the integral identities
//! behind its almost-monotonicity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::ReflectedField;
use crate::law::Density;
use crate::quadrature::{ball, flat_ball, sphere, sphere_nodes, Rule};
use crate::scalar::Real;

fn shifted<T: Real>(c: [T; 2], p: [T; 3]) -> [T; 3] {
    [c[0] + p[0], c[1] + p[1], p[2]]
}

fn sphere_rule<T: Real>(field: &ReflectedField<T>, r: T) -> Rule<T> {
    let k = sphere_nodes(r.to_f64_lossy(), field.hx().to_f64_lossy());
    sphere(field.n, r, k)
}

/// `F(r)` about `center`.
pub fn f_of_r<T: Real>(field: &ReflectedField<T>, center: [T; 2], r: T) -> Result<T> {
    field.require_ball(center, r)?;
    Ok(mass(field, center, &sphere_rule(field, r)))
}

fn mass<T: Real>(field: &ReflectedField<T>, center: [T; 2], rule: &Rule<T>) -> T {
    rule.integrate(|p| {
        let v = field.value_cubic(shifted(center, p));
        v * v
    })
}

/// `count` radii `r_max 2^{-k/2}`, stopping early below `4 hx`. With
/// `r_max = None` the largest radius is just under half the distance to the
/// edge of the sampled domain.
pub fn geometric_radii<T: Real>(field: &ReflectedField<T>, center: [T; 2], r_max: Option<T>, count: usize) -> Vec<T> {
    let room = (field.half_width - center[0].abs())
        .min(if field.n == 2 { field.half_width - center[1].abs() } else { T::infinity() })
        .min(field.height);
    let r_max = r_max.unwrap_or(room / T::lit(2.0) * T::lit(0.999));
    let r_min = T::lit(4.0) * field.hx();
    let mut radii: Vec<T> = (0..count)
        .map(|k| r_max * T::lit(2f64.powf(-(k as f64) / 2.0)))
        .take_while(|&r| r >= r_min)
        .collect();
    radii.reverse();
    radii
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyOptions {
    /// Relative slack allowed in the monotonicity of `Phi(r) e^{C r}`.
    pub mono_tol: f64,
    /// Half-width of the classification windows around `n+3` and `n+4`.
    pub class_tol: f64,
    /// Number of smallest reliable radii used to extrapolate `Phi(0+)`.
    pub fit_points: usize,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        Self { mono_tol: 1e-3, class_tol: 0.15, fit_points: 4 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyProfile<T> {
    pub n: usize,
    pub center: [T; 2],
    /// Strictly increasing.
    pub radii: Vec<T>,
    pub f: Vec<T>,
    pub phi: Vec<T>,
    /// `F(r) < r^{n+4}`.
    pub truncated: Vec<bool>,
    /// Smallest scanned `C >= 0` with `Phi(r) e^{C r}` nondecreasing; `None`
    /// when no scanned value works.
    pub c_fit: Option<T>,
    pub phi0: T,
    /// Every radius was truncated, so `Phi = n + 4` identically.
    pub degenerate: bool,
}

/// Derivative of `y` with respect to `x` at node `k` by the three-point
/// formula on a nonuniform grid (one-sided at the ends).
fn nonuniform_derivative<T: Real>(x: &[T], y: &[T], k: usize) -> T {
    let m = x.len();
    if m == 2 {
        return (y[1] - y[0]) / (x[1] - x[0]);
    }
    let (a, b, c) = if k == 0 {
        (0, 1, 2)
    } else if k == m - 1 {
        (m - 3, m - 2, m - 1)
    } else {
        (k - 1, k, k + 1)
    };
    // derivative of the interpolating parabola through a, b, c at x[k]
    let xk = x[k];
    let la = ((xk - x[b]) + (xk - x[c])) / ((x[a] - x[b]) * (x[a] - x[c]));
    let lb = ((xk - x[a]) + (xk - x[c])) / ((x[b] - x[a]) * (x[b] - x[c]));
    let lc = ((xk - x[a]) + (xk - x[b])) / ((x[c] - x[a]) * (x[c] - x[b]));
    la * y[a] + lb * y[b] + lc * y[c]
}

/// Frequency profile over `radii` (any order; sorted on output). `Phi` is the
/// derivative of `log max{F, r^{n+4}}` against `log r` by three-point
/// differences over the radii themselves.
pub fn phi_profile<T: Real>(
    field: &ReflectedField<T>,
    center: [T; 2],
    radii: &[T],
    opts: &FrequencyOptions,
) -> Result<FrequencyProfile<T>> {
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    if radii.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 radii, got {}", radii.len())));
    }
    let n = field.n;
    let f = radii.iter().map(|&r| f_of_r(field, center, r)).collect::<Result<Vec<T>>>()?;
    let floor: Vec<T> = radii.iter().map(|&r| r.powi(n as i32 + 4)).collect();
    let truncated: Vec<bool> = f.iter().zip(&floor).map(|(a, b)| a < b).collect();
    let log_r: Vec<T> = radii.iter().map(|r| r.ln()).collect();
    let log_m: Vec<T> = f.iter().zip(&floor).map(|(a, b)| a.max(*b).ln()).collect();
    let phi: Vec<T> = (0..radii.len()).map(|k| nonuniform_derivative(&log_r, &log_m, k)).collect();
    let degenerate = truncated.iter().all(|&t| t);
    let phi0 = if degenerate {
        T::from_usize(n + 4).unwrap()
    } else {
        extrapolate(&radii, &phi, &truncated, opts.fit_points)
    };
    let c_fit = fit_c(&radii, &phi, opts.mono_tol);
    Ok(FrequencyProfile { n, center, radii, f, phi, truncated, c_fit, phi0, degenerate })
}

/// Least-squares line through the `fit` smallest non-truncated `(r, Phi)`
/// pairs, evaluated at `r = 0`.
fn extrapolate<T: Real>(radii: &[T], phi: &[T], truncated: &[bool], fit: usize) -> T {
    let pts: Vec<(T, T)> = radii
        .iter()
        .zip(phi)
        .zip(truncated)
        .filter(|(_, &t)| !t)
        .map(|((&r, &p), _)| (r, p))
        .take(fit.max(1))
        .collect();
    if pts.len() == 1 {
        return pts[0].1;
    }
    let m = T::from_usize(pts.len()).unwrap();
    let (sx, sy) = pts.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxx, sxy) = pts
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + (x - mx) * (x - mx), b + (x - mx) * (y - my)));
    my - sxy / sxx * mx
}

fn monotone_with<T: Real>(radii: &[T], phi: &[T], c: T, tol: T) -> bool {
    let w: Vec<T> = radii.iter().zip(phi).map(|(&r, &p)| p * (c * r).exp()).collect();
    w.windows(2).all(|p| p[1] >= p[0] - tol * p[0].abs())
}

/// Scans `C = 0` and a logarithmic grid `1e-3 .. 1e4` for the smallest
/// constant making `Phi(r) e^{C r}` nondecreasing within `mono_tol`.
fn fit_c<T: Real>(radii: &[T], phi: &[T], mono_tol: f64) -> Option<T> {
    let tol = T::lit(mono_tol);
    if monotone_with(radii, phi, T::zero(), tol) {
        return Some(T::zero());
    }
    (0..=140)
        .map(|k| T::lit(10f64.powf(-3.0 + k as f64 / 20.0)))
        .find(|&c| monotone_with(radii, phi, c, tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    #[serde(rename = "regular_3half")]
    Regular3Half,
    #[serde(rename = "degenerate_ge_nplus4")]
    DegenerateGeNPlus4,
    NotApplicable,
}

/// `Phi(0+)` within `class_tol` of `n + 3` is regular; at least
/// `n + 4 - class_tol` is degenerate; anything else is not applicable.
pub fn classify_point<T: Real>(profile: &FrequencyProfile<T>, class_tol: f64) -> Classification {
    let n = profile.n as f64;
    let p = profile.phi0.to_f64_lossy();
    if (p - (n + 3.0)).abs() <= class_tol {
        Classification::Regular3Half
    } else if p >= n + 4.0 - class_tol {
        Classification::DegenerateGeNPlus4
    } else {
        Classification::NotApplicable
    }
}

/// One side-by-side evaluation of an identity `lhs = sum(terms)`.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck<T> {
    pub lhs: T,
    pub terms: Vec<T>,
    pub abs_mismatch: T,
    /// `abs_mismatch` over the sum of the magnitudes of all integrals
    /// involved, each taken with an absolute integrand.
    pub rel_mismatch: T,
}

impl<T: Real> IdentityCheck<T> {
    fn new(lhs: T, terms: Vec<T>, scale: T) -> Self {
        let rhs = terms.iter().fold(T::zero(), |a, &b| a + b);
        let abs_mismatch = (lhs - rhs).abs();
        let rel_mismatch = if scale > T::zero() { abs_mismatch / scale } else { T::zero() };
        Self { lhs, terms, abs_mismatch, rel_mismatch }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport<T> {
    pub center: [T; 2],
    pub r: T,
    /// `int_B |grad v|^2 = int_dB v v_nu - 2 int_{B^n} v (g'(2v) - g'(0+))`.
    pub dirichlet: IdentityCheck<T>,
    /// `(n-1) int_B |grad v|^2 = r int_dB (|grad_tau v|^2 - v_nu^2)
    ///  + 4 int_{B^n} (g'(2v) - g'(0+)) (x . grad_x v)`.
    pub rellich: IdentityCheck<T>,
    /// `F'(r) = 2 int_dB v v_nu + (n/r) F(r)`.
    pub f_prime: IdentityCheck<T>,
}

impl<T: Real> IdentityReport<T> {
    pub fn worst_relative(&self) -> T {
        self.dirichlet.rel_mismatch.max(self.rellich.rel_mismatch).max(self.f_prime.rel_mismatch)
    }
}

/// Evaluates the three identities at `(center, r)` by quadrature. The
/// crack-plane terms use the law through `g'(2v) - g'(0+)`. `F'(r)` is a
/// fourth-order centered difference with step `r / 16`.
pub fn check_identities<T: Real, L: Density<T> + ?Sized>(
    field: &ReflectedField<T>,
    law: &L,
    center: [T; 2],
    r: T,
) -> Result<IdentityReport<T>> {
    let step = r / T::lit(16.0);
    field.require_ball(center, r + T::lit(2.0) * step)?;
    let n = field.n;
    let hx = field.hx();
    let cells = (r / hx).ceil().to_usize().unwrap_or(1).max(1);
    let k = sphere_nodes(r.to_f64_lossy(), hx.to_f64_lossy());
    let gp0 = field.gp0;
    let two = T::lit(2.0);

    let solid = ball(n, r, (2 * cells).max(16), k);
    let grad_sq = solid.integrate(|p| {
        let g = field.gradient(shifted(center, p));
        g[0] * g[0] + g[1] * g[1] + g[2] * g[2]
    });

    let shell = sphere(n, r, k);
    let (mut v_vnu, mut tangential) = (T::zero(), T::zero());
    let (mut v_vnu_abs, mut shell_sq) = (T::zero(), T::zero());
    for (p, &w) in shell.points.iter().zip(&shell.weights) {
        let z = shifted(center, *p);
        let v = field.value(z);
        let g = field.gradient(z);
        let nu = [p[0] / r, p[1] / r, p[2] / r];
        let vn = g[0] * nu[0] + g[1] * nu[1] + g[2] * nu[2];
        let g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        v_vnu += w * v * vn;
        tangential += w * (g2 - two * vn * vn);
        v_vnu_abs += w * (v * vn).abs();
        shell_sq += w * g2;
    }

    let flat = flat_ball(n, r, (2 * cells).max(8), k);
    let (mut coh_v, mut coh_x) = (T::zero(), T::zero());
    let (mut coh_v_abs, mut coh_x_abs) = (T::zero(), T::zero());
    for (p, &w) in flat.points.iter().zip(&flat.weights) {
        let z = shifted(center, *p);
        let v = field.value(z);
        let stress = law.g1(two * v.max(T::zero())) - gp0;
        let g = field.gradient(z);
        let xg = p[0] * g[0] + p[1] * g[1];
        coh_v += w * v * stress;
        coh_x += w * stress * xg;
        coh_v_abs += w * (v * stress).abs();
        coh_x_abs += w * (stress * xg).abs();
    }

    // one node count for all five spheres keeps the difference smooth in r
    let f = |rr: T| mass(field, center, &sphere(n, rr, k));
    let f_r = f(r);
    let d = (f(r - two * step) - T::lit(8.0) * f(r - step) + T::lit(8.0) * f(r + step) - f(r + two * step))
        / (T::lit(12.0) * step);
    let n_t = T::from_usize(n).unwrap();

    Ok(IdentityReport {
        center,
        r,
        dirichlet: IdentityCheck::new(grad_sq, vec![v_vnu, -two * coh_v], grad_sq + v_vnu_abs + two * coh_v_abs),
        rellich: IdentityCheck::new(
            (n_t - T::one()) * grad_sq,
            vec![r * tangential, T::lit(4.0) * coh_x],
            (n_t - T::one()) * grad_sq + r * shell_sq + T::lit(4.0) * coh_x_abs,
        ),
        f_prime: IdentityCheck::new(d, vec![two * v_vnu, n_t / r * f_r], d.abs() + two * v_vnu_abs + n_t / r * f_r),
    })
}
