//! Top-boundary displacement `u_A` and its regularity constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StripGrid;
use crate::scalar::Real;

/// Closed-form families for `u_A`, each with analytic gradient and Hessian.
///
/// Centers are lateral points; for `n = 1` only the first coordinate is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BoundaryProfile<T> {
    Zero,
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`
    Gaussian { center: [T; 2], width: T, amplitude: T },
    /// `amplitude * exp(1 - 1 / (1 - s^2))` for `s = |x - center| / radius < 1`, zero outside.
    CompactBump { center: [T; 2], radius: T, amplitude: T },
    /// Gaussian at `+separation/2` minus Gaussian at `-separation/2` along `x1`.
    Dipole { separation: T, amplitude: T, width: T },
}

/// Value, gradient and Hessian at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct Jet<T> {
    pub value: T,
    pub grad: [T; 2],
    pub hess: [[T; 2]; 2],
}

impl<T: Real> Jet<T> {
    fn add(self, o: Self, sign: T) -> Self {
        Jet {
            value: self.value + sign * o.value,
            grad: [self.grad[0] + sign * o.grad[0], self.grad[1] + sign * o.grad[1]],
            hess: [
                [self.hess[0][0] + sign * o.hess[0][0], self.hess[0][1] + sign * o.hess[0][1]],
                [self.hess[1][0] + sign * o.hess[1][0], self.hess[1][1] + sign * o.hess[1][1]],
            ],
        }
    }
}

fn offset<T: Real>(x: [T; 2], c: [T; 2], n: usize) -> [T; 2] {
    if n == 1 {
        [x[0] - c[0], T::zero()]
    } else {
        [x[0] - c[0], x[1] - c[1]]
    }
}

fn gaussian_jet<T: Real>(d: [T; 2], width: T, amplitude: T) -> Jet<T> {
    let w2 = width * width;
    let r2 = d[0] * d[0] + d[1] * d[1];
    let e = amplitude * (-r2 / (T::lit(2.0) * w2)).exp();
    let mut hess = [[T::zero(); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let delta = if a == b { T::one() } else { T::zero() };
            hess[a][b] = e * (d[a] * d[b] / (w2 * w2) - delta / w2);
        }
    }
    Jet { value: e, grad: [-e * d[0] / w2, -e * d[1] / w2], hess }
}

fn bump_jet<T: Real>(d: [T; 2], radius: T, amplitude: T) -> Jet<T> {
    let rho = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let s = rho / radius;
    if s >= T::one() {
        return Jet::default();
    }
    let one = T::one();
    let two = T::lit(2.0);
    let q = one - s * s;
    let phi = amplitude * (one - one / q).exp();
    // derivatives of p(s) = 1 - 1/(1 - s^2)
    let p1 = -two * s / (q * q);
    let p2 = -two / (q * q) - T::lit(8.0) * s * s / (q * q * q);
    let r2 = radius * radius;
    let phi_rr = phi * (p1 * p1 + p2) / r2;
    // phi_r / rho, finite at the center
    let tangential = phi * (-two / (q * q)) / r2;
    let mut hess = [[T::zero(); 2]; 2];
    let (e0, e1) = if rho > T::zero() { (d[0] / rho, d[1] / rho) } else { (one, T::zero()) };
    let e = [e0, e1];
    for a in 0..2 {
        for b in 0..2 {
            let delta = if a == b { one } else { T::zero() };
            hess[a][b] = phi_rr * e[a] * e[b] + tangential * (delta - e[a] * e[b]);
        }
    }
    Jet { value: phi, grad: [tangential * d[0], tangential * d[1]], hess }
}

impl<T: Real> BoundaryProfile<T> {
    pub fn jet(&self, x: [T; 2], n: usize) -> Jet<T> {
        match self {
            BoundaryProfile::Zero => Jet::default(),
            BoundaryProfile::Gaussian { center, width, amplitude } => {
                gaussian_jet(offset(x, *center, n), *width, *amplitude)
            }
            BoundaryProfile::CompactBump { center, radius, amplitude } => {
                bump_jet(offset(x, *center, n), *radius, *amplitude)
            }
            BoundaryProfile::Dipole { separation, amplitude, width } => {
                let half = *separation / T::lit(2.0);
                let plus = gaussian_jet(offset(x, [half, T::zero()], n), *width, *amplitude);
                let minus = gaussian_jet(offset(x, [-half, T::zero()], n), *width, *amplitude);
                plus.add(minus, -T::one())
            }
        }
    }

    pub fn value(&self, x: [T; 2], n: usize) -> T {
        self.jet(x, n).value
    }

    /// The same profile with its amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        match &mut out {
            BoundaryProfile::Zero => {}
            BoundaryProfile::Gaussian { amplitude, .. }
            | BoundaryProfile::CompactBump { amplitude, .. }
            | BoundaryProfile::Dipole { amplitude, .. } => *amplitude *= factor,
        }
        out
    }

    /// The profile shifted laterally by `shift`. Dipoles are symmetric about
    /// the origin by construction and cannot be shifted.
    pub fn translated(&self, shift: [T; 2]) -> Result<Self> {
        let mut out = self.clone();
        match &mut out {
            BoundaryProfile::Zero => {}
            BoundaryProfile::Gaussian { center, .. } | BoundaryProfile::CompactBump { center, .. } => {
                center[0] += shift[0];
                center[1] += shift[1];
            }
            BoundaryProfile::Dipole { .. } => {
                return Err(Error::InvalidArgument("dipole profiles are centered at the origin".into()))
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundaryOptions {
    /// Largest `|u_A|` tolerated on the lateral edge of the truncated domain.
    pub decay_tol: f64,
    /// Sampling points per grid spacing used for the regularity constants.
    pub oversample: usize,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self { decay_tol: 1e-8, oversample: 4 }
    }
}

/// `u_A` sampled on the top row, plus `L_A`, `D_A`, `C_A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData<T> {
    /// Values on all lateral nodes of the top row; lateral edges are zero.
    pub top: Vec<T>,
    /// `L_A = sup |grad u_A|`.
    pub lipschitz: T,
    /// `D_A = sup (lambda_min)^-` of the Hessian.
    pub semiconvexity: T,
    /// `C_A = sup (lambda_max)^+` of the Hessian.
    pub semiconcavity: T,
}

fn sym_eigs<T: Real>(h: [[T; 2]; 2], n: usize) -> (T, T) {
    if n == 1 {
        return (h[0][0], h[0][0]);
    }
    let tr = h[0][0] + h[1][1];
    let half = tr / T::lit(2.0);
    let diff = (h[0][0] - h[1][1]) / T::lit(2.0);
    let rad = (diff * diff + h[0][1] * h[0][1]).sqrt();
    (half - rad, half + rad)
}

impl<T: Real> BoundaryData<T> {
    pub fn zero(grid: &StripGrid<T>) -> Self {
        Self {
            top: vec![T::zero(); grid.lateral_len()],
            lipschitz: T::zero(),
            semiconvexity: T::zero(),
            semiconcavity: T::zero(),
        }
    }

    pub fn from_profile(
        grid: &StripGrid<T>,
        profile: &BoundaryProfile<T>,
        opts: &BoundaryOptions,
    ) -> Result<Self> {
        let n = grid.n;
        let mut top = vec![T::zero(); grid.lateral_len()];
        let mut edge_max = T::zero();
        for (l, v) in top.iter_mut().enumerate() {
            let value = profile.value(grid.lateral_point(l), n);
            if grid.is_lateral_boundary(l) {
                edge_max = edge_max.max(value.abs());
            } else {
                *v = value;
            }
        }
        if edge_max > T::lit(opts.decay_tol) {
            return Err(Error::BoundaryNotDecaying {
                max: edge_max.to_f64_lossy(),
                tol: opts.decay_tol,
            });
        }

        let per_axis = (grid.mx - 1) * opts.oversample.max(1) + 1;
        let step = T::lit(2.0) * grid.half_width / T::from_usize(per_axis - 1).unwrap();
        let coord = |k: usize| -grid.half_width + step * T::from_usize(k).unwrap();
        let (mut lip, mut dconv, mut cconc) = (T::zero(), T::zero(), T::zero());
        let mut visit = |x: [T; 2]| {
            let jet = profile.jet(x, n);
            let g2 = jet.grad[0] * jet.grad[0] + if n == 2 { jet.grad[1] * jet.grad[1] } else { T::zero() };
            lip = lip.max(g2.sqrt());
            let (lo, hi) = sym_eigs(jet.hess, n);
            dconv = dconv.max(-lo);
            cconc = cconc.max(hi);
        };
        if n == 1 {
            for k in 0..per_axis {
                visit([coord(k), T::zero()]);
            }
        } else {
            for k2 in 0..per_axis {
                for k1 in 0..per_axis {
                    visit([coord(k1), coord(k2)]);
                }
            }
        }
        Ok(Self { top, lipschitz: lip, semiconvexity: dconv, semiconcavity: cconc })
    }

    pub fn max_abs(&self) -> T {
        self.top.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// The same data with `u_A` multiplied by `factor > 0`.
    pub fn scaled(&self, factor: T) -> Self {
        let f = factor.abs();
        Self {
            top: self.top.iter().map(|&v| v * factor).collect(),
            lipschitz: self.lipschitz * f,
            semiconvexity: if factor >= T::zero() { self.semiconvexity } else { self.semiconcavity } * f,
            semiconcavity: if factor >= T::zero() { self.semiconcavity } else { self.semiconvexity } * f,
        }
    }
}
