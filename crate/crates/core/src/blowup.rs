//! Blow-up rescalings `v_r(z) = v(c + r z) / d_r`, `d_r = (F(r)/r^n)^{1/2}`,
//! their homogeneity, and comparison with `rho^{3/2} cos(3 theta / 2)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::ReflectedField;
use crate::frequency::f_of_r;
use crate::quadrature::gauss_legendre;
use crate::scalar::Real;

/// Fixed reference mesh of the unit ball. For `n = 1`, a polar mesh of
/// `angular` equispaced angles times `radial` Gauss-Legendre radii; for
/// `n = 2`, a spherical product of `radial` Gauss-Legendre radii, Gauss-Legendre nodes in the
/// polar cosine on each hemisphere and `angular` azimuths. The unit sphere
/// itself is sampled separately for the normalization check.
#[derive(Clone, Debug)]
pub struct UnitBallMesh {
    pub n: usize,
    pub radial: usize,
    pub angular: usize,
    /// Polar nodes per hemisphere (`n = 2` only).
    pub polar: usize,
    /// Points `[z1, z2, y]` with `|z| < 1`, azimuth index fastest.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub boundary_points: Vec<[f64; 3]>,
    pub boundary_weights: Vec<f64>,
}

impl UnitBallMesh {
    /// The default mesh: 128 x 64 polar for `n = 1`; 256 azimuths, 8 polar
    /// nodes per hemisphere and 16 radii for `n = 2`.
    pub fn standard(n: usize) -> Self {
        if n == 1 {
            Self::new(1, 64, 128, 0)
        } else {
            Self::new(2, 16, 256, 8)
        }
    }

    pub fn new(n: usize, radial: usize, angular: usize, polar: usize) -> Self {
        let tau = std::f64::consts::TAU;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut boundary_points = Vec::new();
        let mut boundary_weights = Vec::new();
        let dphi = tau / angular as f64;
        let (pc, pw) = gauss_legendre(polar.max(1));
        // directions on the sphere and their weights
        let mut dirs: Vec<([f64; 3], f64)> = Vec::new();
        if n == 1 {
            for j in 0..angular {
                let phi = dphi * j as f64;
                dirs.push(([phi.cos(), 0.0, phi.sin()], dphi));
            }
        } else {
            for sign in [1.0, -1.0] {
                for (c, w) in pc.iter().zip(&pw) {
                    let cz = 0.5 * (c + 1.0);
                    let s = (1.0 - cz * cz).sqrt();
                    for j in 0..angular {
                        let phi = dphi * j as f64;
                        dirs.push(([s * phi.cos(), s * phi.sin(), sign * cz], 0.5 * w * dphi));
                    }
                }
            }
        }
        let (rc, rw) = gauss_legendre(radial);
        for (x, wr) in rc.iter().zip(&rw) {
            let rho = 0.5 * (x + 1.0);
            let jac = 0.5 * wr * rho.powi(n as i32);
            for (d, w) in &dirs {
                points.push([rho * d[0], rho * d[1], rho * d[2]]);
                weights.push(jac * w);
            }
        }
        for (d, w) in &dirs {
            boundary_points.push(*d);
            boundary_weights.push(*w);
        }
        Self { n, radial, angular, polar, points, weights, boundary_points, boundary_weights }
    }

    /// Index of the mesh point obtained by rotating point `k` by `shift`
    /// azimuthal steps (`n = 2`) or by reflecting `z1 -> -z1` (`n = 1`,
    /// any nonzero `shift`).
    fn moved(&self, k: usize, shift: usize) -> usize {
        let a = self.angular;
        let (block, j) = (k / a, k % a);
        let j2 = if self.n == 1 { if shift == 0 { j } else { (a + a / 2 - j) % a } } else { (j + shift) % a };
        block * a + j2
    }
}

/// Samples on a [`UnitBallMesh`], interior and unit sphere.
#[derive(Clone, Debug)]
pub struct UnitBallField<T> {
    pub values: Vec<T>,
    pub boundary: Vec<T>,
}

impl<T: Real> UnitBallField<T> {
    pub fn from_fn(mesh: &UnitBallMesh, f: impl Fn([f64; 3]) -> T) -> Self {
        Self {
            values: mesh.points.iter().map(|&p| f(p)).collect(),
            boundary: mesh.boundary_points.iter().map(|&p| f(p)).collect(),
        }
    }

    /// `int_{dB_1} w^2`.
    pub fn boundary_mass(&self, mesh: &UnitBallMesh) -> T {
        self.boundary
            .iter()
            .zip(&mesh.boundary_weights)
            .fold(T::zero(), |a, (&v, &w)| a + T::lit(w) * v * v)
    }

    /// `int_{B_1} w^2`.
    pub fn mass(&self, mesh: &UnitBallMesh) -> T {
        self.values.iter().zip(&mesh.weights).fold(T::zero(), |a, (&v, &w)| a + T::lit(w) * v * v)
    }
}

/// `v_r` on the reference mesh. The scale `d_r` uses [`f_of_r`], so the
/// unit-sphere mass is one up to the difference between the two rules.
pub fn rescale<T: Real>(
    field: &ReflectedField<T>,
    mesh: &UnitBallMesh,
    center: [T; 2],
    r: T,
) -> Result<(UnitBallField<T>, T)> {
    let f = f_of_r(field, center, r)?;
    if f <= T::zero() {
        return Err(Error::ZeroField { r: r.to_f64_lossy() });
    }
    let d_r = (f / r.powi(field.n as i32)).sqrt();
    let sample = |p: [f64; 3]| {
        let z = [center[0] + r * T::lit(p[0]), center[1] + r * T::lit(p[1]), r * T::lit(p[2])];
        field.value_cubic(z) / d_r
    };
    Ok((UnitBallField::from_fn(mesh, sample), d_r))
}

/// `rho^{3/2} cos(3 theta / 2)` with `rho^2 = x_n^2 + y^2`,
/// `theta = atan2(|y|, x_n)`.
pub fn signorini_profile(xn: f64, y: f64) -> f64 {
    let rho = (xn * xn + y * y).sqrt();
    rho.powf(1.5) * (1.5 * y.abs().atan2(xn)).cos()
}

/// The reference profile on the mesh with `x_n = z1` (for `n = 2` it is
/// constant in `z2`).
pub fn reference_profile<T: Real>(mesh: &UnitBallMesh) -> UnitBallField<T> {
    UnitBallField::from_fn(mesh, |p| T::lit(signorini_profile(p[0], p[2])))
}

/// Result of aligning a rescaling with the reference.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Alignment<T> {
    pub distance: T,
    /// `n = 1`: `0` or `pi` (reflection). `n = 2`: rotation angle in the
    /// lateral plane applied to the reference.
    pub angle: T,
}

fn l2_distance<T: Real>(mesh: &UnitBallMesh, a: &[T], sa: T, b: impl Fn(usize) -> T, sb: T) -> T {
    let mut acc = T::zero();
    for (k, &w) in mesh.weights.iter().enumerate() {
        let d = a[k] * sa - b(k) * sb;
        acc += T::lit(w) * d * d;
    }
    acc.sqrt()
}

/// `L^2(B_1)` distance between `v_r` and the reference after normalizing
/// both to unit sphere mass, minimized over lateral orientation: the
/// reflection `z1 -> -z1` for `n = 1`; for `n = 2`, a scan over the mesh
/// azimuths refined by golden-section search with linear interpolation in
/// azimuth. Ties go to the smallest angle.
pub fn profile_distance<T: Real>(mesh: &UnitBallMesh, v_r: &UnitBallField<T>, reference: &UnitBallField<T>) -> Alignment<T> {
    let sa = T::one() / v_r.boundary_mass(mesh).sqrt();
    let sb = T::one() / reference.boundary_mass(mesh).sqrt();
    let a = &v_r.values;
    let rv = &reference.values;
    let shifts = if mesh.n == 1 { 2 } else { mesh.angular };
    let dphi = std::f64::consts::TAU / mesh.angular as f64;
    let mut best = (T::infinity(), 0usize);
    for s in 0..shifts {
        // rotating the reference by +s steps: its value at point k comes from k moved by -s
        let back = if mesh.n == 1 { s } else { (mesh.angular - s) % mesh.angular };
        let d = l2_distance(mesh, a, sa, |k| rv[mesh.moved(k, back)], sb);
        if d < best.0 {
            best = (d, s);
        }
    }
    if mesh.n == 1 {
        let angle = if best.1 == 0 { T::zero() } else { T::lit(std::f64::consts::PI) };
        return Alignment { distance: best.0, angle };
    }
    // golden-section on a continuous rotation within one step of the best scan angle
    let at = |angle: f64| -> T {
        let steps = angle / dphi;
        let base = steps.floor();
        let frac = T::lit(steps - base);
        let base = base.rem_euclid(mesh.angular as f64) as usize;
        let b0 = (mesh.angular - base) % mesh.angular;
        let b1 = (2 * mesh.angular - base - 1) % mesh.angular;
        l2_distance(
            mesh,
            a,
            sa,
            |k| (T::one() - frac) * rv[mesh.moved(k, b0)] + frac * rv[mesh.moved(k, b1)],
            sb,
        )
    };
    let centre = best.1 as f64 * dphi;
    let (mut lo, mut hi) = (centre - dphi, centre + dphi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (at(x1), at(x2));
    for _ in 0..40 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = at(x2);
        }
    }
    let (angle, d) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if d < best.0 {
        Alignment { distance: d, angle: T::lit(angle.rem_euclid(std::f64::consts::TAU)) }
    } else {
        Alignment { distance: best.0, angle: T::lit(centre) }
    }
}

/// Homogeneity fit over a radius sequence.
#[derive(Clone, Debug, Serialize)]
pub struct MuFit<T> {
    pub radii: Vec<T>,
    pub d_r: Vec<T>,
    /// Least-squares slope of `log d_r` against `log r`.
    pub mu: T,
    /// `d_r / r^2` grows by at least `1 + growth_tol` at every step toward
    /// smaller radii.
    pub superquadratic: bool,
    /// Largest absolute residual of the log-log fit.
    pub residual: T,
    pub low_confidence: bool,
}

#[derive(Clone, Copy, Debug, Serialize, serde::Deserialize)]
pub struct BlowupOptions {
    /// Minimum relative growth of `d_r / r^2` per step for superquadratic decay.
    pub growth_tol: f64,
    /// Log-log residual above which the fit is flagged low-confidence.
    pub fit_tol: f64,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        Self { growth_tol: 1e-2, fit_tol: 5e-2 }
    }
}

pub fn fit_mu<T: Real>(field: &ReflectedField<T>, center: [T; 2], radii: &[T], opts: &BlowupOptions) -> Result<MuFit<T>> {
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if radii.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 radii".into()));
    }
    let n = field.n as i32;
    let mut d_r = Vec::with_capacity(radii.len());
    for &r in &radii {
        let f = f_of_r(field, center, r)?;
        if f <= T::zero() {
            return Err(Error::ZeroField { r: r.to_f64_lossy() });
        }
        d_r.push((f / r.powi(n)).sqrt());
    }
    let x: Vec<T> = radii.iter().map(|r| r.ln()).collect();
    let y: Vec<T> = d_r.iter().map(|d| d.ln()).collect();
    let m = T::from_usize(x.len()).unwrap();
    let mx = x.iter().fold(T::zero(), |a, &b| a + b) / m;
    let my = y.iter().fold(T::zero(), |a, &b| a + b) / m;
    let (sxx, sxy) = x
        .iter()
        .zip(&y)
        .fold((T::zero(), T::zero()), |(a, b), (&xi, &yi)| (a + (xi - mx) * (xi - mx), b + (xi - mx) * (yi - my)));
    let mu = sxy / sxx;
    let residual = x
        .iter()
        .zip(&y)
        .fold(T::zero(), |w, (&xi, &yi)| w.max((yi - my - mu * (xi - mx)).abs()));
    let growth = T::one() + T::lit(opts.growth_tol);
    let ratio: Vec<T> = radii.iter().zip(&d_r).map(|(&r, &d)| d / (r * r)).collect();
    // radii ascend, so growth toward small r means each ratio exceeds the next
    let superquadratic = ratio.windows(2).all(|p| p[0] >= growth * p[1]);
    Ok(MuFit { radii, d_r, mu, superquadratic, residual, low_confidence: residual > T::lit(opts.fit_tol) })
}

/// Everything the blow-up analysis reports at one center.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupFit<T> {
    pub center: [T; 2],
    pub fit: MuFit<T>,
    /// Sphere mass of the finest rescaling on the reference mesh.
    pub normalization: T,
    /// `None` when the decay is not superquadratic (no reference profile).
    pub alignment: Option<Alignment<T>>,
}

pub fn blowup_fit<T: Real>(
    field: &ReflectedField<T>,
    center: [T; 2],
    radii: &[T],
    opts: &BlowupOptions,
) -> Result<BlowupFit<T>> {
    let fit = fit_mu(field, center, radii, opts)?;
    let mesh = UnitBallMesh::standard(field.n);
    let (v_r, _) = rescale(field, &mesh, center, fit.radii[0])?;
    let normalization = v_r.boundary_mass(&mesh);
    let alignment = fit
        .superquadratic
        .then(|| profile_distance(&mesh, &v_r, &reference_profile(&mesh)));
    Ok(BlowupFit { center, fit, normalization, alignment })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((signorini_profile(1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!(signorini_profile(-1.0, 0.0).abs() < 1e-15);
        // d_y at y = 0 on the open side vanishes
        let h = 1e-6;
        assert!(((signorini_profile(0.7, h) - signorini_profile(0.7, 0.0)) / h).abs() < 1e-5);
        for k in 0..50 {
            let x = -1.0 + k as f64 / 25.0;
            assert!(signorini_profile(x, 0.0) >= -1e-15);
        }
    }

    #[test]
    fn mesh_weights() {
        let m = UnitBallMesh::standard(1);
        assert_eq!(m.points.len(), 128 * 64);
        let area: f64 = m.weights.iter().sum();
        assert!((area - std::f64::consts::PI).abs() < 1e-12);
        let m2 = UnitBallMesh::standard(2);
        let vol: f64 = m2.weights.iter().sum();
        assert!((vol - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn distance_to_itself_and_reflection() {
        for n in [1, 2] {
            let mesh = UnitBallMesh::standard(n);
            let r = reference_profile::<f64>(&mesh);
            assert!(profile_distance(&mesh, &r, &r).distance < 1e-12);
            let flipped = UnitBallField::from_fn(&mesh, |p| signorini_profile(-p[0], p[2]));
            let al = profile_distance(&mesh, &flipped, &r);
            assert!(al.distance < 1e-12, "{al:?}");
            assert!((al.angle - std::f64::consts::PI).abs() < 1e-9);
        }
        // an arbitrary rotation in the lateral plane is recovered at n = 2
        let mesh = UnitBallMesh::standard(2);
        let r = reference_profile::<f64>(&mesh);
        let a = 0.3f64;
        let rot = UnitBallField::from_fn(&mesh, |p| signorini_profile(p[0] * a.cos() + p[1] * a.sin(), p[2]));
        let al = profile_distance(&mesh, &rot, &r);
        assert!((al.angle - a).abs() < 2e-3, "{al:?}");
        assert!(al.distance < 5e-3, "{al:?}");
    }

    #[test]
    fn homogeneous_fields_fit_their_degree() {
        let f = ReflectedField::<f64>::from_fn(1, 1.0, 1.0, 257, 129, 0.0, |x, y| 7.0 * signorini_profile(x[0], y)).unwrap();
        let radii = crate::frequency::geometric_radii(&f, [0.0, 0.0], None, 10);
        let fit = blowup_fit(&f, [0.0, 0.0], &radii, &BlowupOptions::default()).unwrap();
        assert!((fit.fit.mu - 1.5).abs() < 0.02, "{:?}", fit.fit);
        assert!(fit.fit.superquadratic);
        assert!((fit.normalization - 1.0).abs() < 1e-3);
        assert!(fit.alignment.unwrap().distance < 1e-2);
        let q = ReflectedField::<f64>::from_fn(1, 1.0, 1.0, 129, 65, 0.0, |x, y| x[0] * x[0] - y * y).unwrap();
        let fit = fit_mu(&q, [0.0, 0.0], &radii, &BlowupOptions::default()).unwrap();
        assert!((fit.mu - 2.0).abs() < 0.02);
        assert!(!fit.superquadratic);
    }
}
