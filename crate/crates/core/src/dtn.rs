//! Exact elimination of the harmonic interior.
//!
//! The discrete Dirichlet energy on the strip is the edge sum
//!
//! ```text
//! E(u) = sum_lateral_edges  w_j hx^(n-1) hy / hx (u_a - u_b)^2
//!      + sum_vertical_edges hx^n / hy            (u_a - u_b)^2
//! ```
//!
//! with `w_j = 1/2` on the rows `y = 0` and `y = A` and `1` elsewhere. Its
//! minimizers over the interior satisfy the 5-point (`n = 1`) or 7-point
//! (`n = 2`) Laplace equation. Lateral sides are homogeneous Dirichlet, so the
//! sine transform diagonalizes every row and each mode reduces to a
//! three-term recurrence in `y` with a closed-form solution. The reduced
//! energy is therefore diagonal in sine coordinates:
//!
//! ```text
//! E(t) = sum_k a_k (t_k^2 + top_k^2) - 2 b_k t_k top_k
//! ```

use crate::boundary::BoundaryData;
use crate::dst::SineTransform;
use crate::error::{Error, Result};
use crate::grid::{Field, StripGrid};
use crate::scalar::Real;

/// `sinh(m w) / sinh(N w)` without overflow.
fn sinh_ratio<T: Real>(m: usize, big_n: usize, w: T) -> T {
    if m == big_n {
        return T::one();
    }
    if m == 0 {
        return T::zero();
    }
    let mf = T::from_usize(m).unwrap();
    let nf = T::from_usize(big_n).unwrap();
    let two = T::lit(2.0);
    ((mf - nf) * w).exp() * (-two * mf * w).exp_m1() / (-two * nf * w).exp_m1()
}

/// Trace-reduced Dirichlet energy `E(t) = q(t) + <linear, t> + constant`
/// with `q(t) = t^T H t / 2`.
#[derive(Clone, Debug)]
pub struct ReducedForm<T: Real> {
    grid: StripGrid<T>,
    transform: SineTransform<T>,
    /// `a_k`, so the Hessian is `S diag(2 a) S`.
    diag: Vec<T>,
    /// `b_k top_k`
    coupling: Vec<T>,
    omega: Vec<T>,
    top_hat: Vec<T>,
    constant: T,
}

/// Builds the reduced form for `grid` and the top data in `data`.
pub fn dirichlet_to_neumann<T: Real>(grid: &StripGrid<T>, data: &BoundaryData<T>) -> Result<ReducedForm<T>> {
    if data.top.len() != grid.lateral_len() {
        return Err(Error::InvalidArgument(format!(
            "boundary data has {} values, grid row has {}",
            data.top.len(),
            grid.lateral_len()
        )));
    }
    let m = grid.interior_per_axis();
    let transform = SineTransform::new(grid.n, m);
    let big_n = grid.my - 1;
    let (hx, hy) = (grid.hx(), grid.hy());
    let cv = grid.cell_measure() / hy;
    let ratio2 = (hy / hx).powi(2);

    let mut top_hat: Vec<T> = grid.interior_lateral().iter().map(|&l| data.top[l]).collect();
    transform.apply(&mut top_hat);

    let lambdas = transform.laplacian_eigenvalues();
    let mut diag = Vec::with_capacity(lambdas.len());
    let mut coupling = Vec::with_capacity(lambdas.len());
    let mut omega = Vec::with_capacity(lambdas.len());
    let mut constant = T::zero();
    for (k, &lam) in lambdas.iter().enumerate() {
        let sigma = ratio2 * lam;
        // cosh w = 1 + sigma / 2
        let w = T::lit(2.0) * (sigma.sqrt() / T::lit(2.0)).asinh();
        let r1 = sinh_ratio(big_n - 1, big_n, w);
        let r2 = sinh_ratio(1, big_n, w);
        let a = cv * (T::one() + sigma / T::lit(2.0) - r1);
        let b = cv * r2;
        if !(a > T::zero()) || !a.is_finite() || !b.is_finite() {
            return Err(Error::GridDegenerate(format!("mode {k} elimination is singular (a = {a})")));
        }
        diag.push(a);
        coupling.push(b * top_hat[k]);
        omega.push(w);
        constant += a * top_hat[k] * top_hat[k];
    }
    Ok(ReducedForm { grid: *grid, transform, diag, coupling, omega, top_hat, constant })
}

impl<T: Real> ReducedForm<T> {
    pub fn grid(&self) -> &StripGrid<T> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Sine coefficients of a trace vector.
    pub fn to_modes(&self, t: &[T]) -> Vec<T> {
        let mut out = t.to_vec();
        self.transform.apply(&mut out);
        out
    }

    pub fn from_modes(&self, modes: &[T]) -> Vec<T> {
        self.to_modes(modes)
    }

    /// Full discrete Dirichlet energy of the harmonic extension of `t`.
    pub fn energy(&self, t: &[T]) -> T {
        self.energy_from_modes(&self.to_modes(t))
    }

    pub fn energy_from_modes(&self, th: &[T]) -> T {
        let mut e = self.constant;
        for k in 0..th.len() {
            e += self.diag[k] * th[k] * th[k] - T::lit(2.0) * self.coupling[k] * th[k];
        }
        e
    }

    /// `q(t) = t^T H t / 2`.
    pub fn quadratic(&self, t: &[T]) -> T {
        let th = self.to_modes(t);
        th.iter().zip(&self.diag).fold(T::zero(), |acc, (&x, &a)| acc + a * x * x)
    }

    /// The linear coefficient vector in physical coordinates.
    pub fn linear(&self) -> Vec<T> {
        let mut l: Vec<T> = self.coupling.iter().map(|&c| -T::lit(2.0) * c).collect();
        self.transform.apply(&mut l);
        l
    }

    pub fn constant(&self) -> T {
        self.constant
    }

    /// Gradient of the energy in physical coordinates given sine coefficients.
    pub fn gradient_from_modes(&self, th: &[T]) -> Vec<T> {
        let two = T::lit(2.0);
        let mut g: Vec<T> = (0..th.len())
            .map(|k| two * (self.diag[k] * th[k] - self.coupling[k]))
            .collect();
        self.transform.apply(&mut g);
        g
    }

    pub fn gradient(&self, t: &[T]) -> Vec<T> {
        self.gradient_from_modes(&self.to_modes(t))
    }

    /// `H v`
    pub fn apply_hessian(&self, v: &[T]) -> Vec<T> {
        let mut vh = self.to_modes(v);
        for (x, &a) in vh.iter_mut().zip(&self.diag) {
            *x *= T::lit(2.0) * a;
        }
        self.transform.apply(&mut vh);
        vh
    }

    /// Largest Hessian eigenvalue, exact from the diagonal.
    pub fn max_eigenvalue(&self) -> T {
        self.diag.iter().fold(T::zero(), |m, &a| m.max(T::lit(2.0) * a))
    }

    pub fn min_eigenvalue(&self) -> T {
        self.diag.iter().fold(T::infinity(), |m, &a| m.min(T::lit(2.0) * a))
    }

    /// Outward-flux normal derivative `d_y u(x, 0)` at the interior trace
    /// nodes, `-grad E / (2 hx^n)`. It equals the second-order stencil
    /// `(u_1 - u_0)/hy + (hy/2) Delta_x u_0`.
    pub fn normal_from_gradient(&self, grad: &[T]) -> Vec<T> {
        let s = -T::lit(0.5) / self.grid.cell_measure();
        grad.iter().map(|&g| g * s).collect()
    }

    /// Harmonic extension of the interior trace `t` to the full strip.
    pub fn extend(&self, t: &[T]) -> Field<T> {
        let grid = &self.grid;
        let big_n = grid.my - 1;
        let th = self.to_modes(t);
        let interior = grid.interior_lateral();
        let mut field = grid.empty_field();
        let mut row_hat = vec![T::zero(); th.len()];
        for j in 0..grid.my {
            for k in 0..th.len() {
                let w = self.omega[k];
                row_hat[k] = th[k] * sinh_ratio(big_n - j, big_n, w) + self.top_hat[k] * sinh_ratio(j, big_n, w);
            }
            let mut row_vals = row_hat.clone();
            self.transform.apply(&mut row_vals);
            let row = field.row_mut(j);
            for (idx, &l) in interior.iter().enumerate() {
                row[l] = row_vals[idx];
            }
        }
        // exact boundary rows
        let row0 = field.row_mut(0);
        for (idx, &l) in interior.iter().enumerate() {
            row0[l] = t[idx];
        }
        field
    }
}

/// Edge-sum discrete Dirichlet energy of a full strip field.
pub fn discrete_dirichlet_energy<T: Real>(grid: &StripGrid<T>, u: &Field<T>) -> T {
    let (hx, hy) = (grid.hx(), grid.hy());
    let lat_w = grid.cell_measure() / hx * hy / hx;
    let ver_w = grid.cell_measure() / hy;
    let mx = grid.mx;
    let mut e = T::zero();
    for j in 0..grid.my {
        let row = u.row(j);
        let wj = if j == 0 || j == grid.my - 1 { T::lit(0.5) } else { T::one() };
        for l in 0..grid.lateral_len() {
            let [i1, i2] = grid.lateral_indices(l);
            if i1 + 1 < mx {
                let d = row[grid.lateral_index(i1 + 1, i2)] - row[l];
                e += wj * lat_w * d * d;
            }
            if grid.n == 2 && i2 + 1 < mx {
                let d = row[grid.lateral_index(i1, i2 + 1)] - row[l];
                e += wj * lat_w * d * d;
            }
            if j + 1 < grid.my {
                let d = u.row(j + 1)[l] - row[l];
                e += ver_w * d * d;
            }
        }
    }
    e
}

/// Second-order normal derivative at `y = 0` from a strip field,
/// `(u_1 - u_0)/hy + (hy/2) Delta_x u_0`, on every lateral node (zero on the
/// lateral edges where `u` vanishes identically).
pub fn stencil_normal<T: Real>(grid: &StripGrid<T>, u: &Field<T>) -> Vec<T> {
    let (hx, hy) = (grid.hx(), grid.hy());
    let (r0, r1) = (u.row(0), u.row(1));
    let mut out = vec![T::zero(); grid.lateral_len()];
    for l in grid.interior_lateral() {
        let [i1, i2] = grid.lateral_indices(l);
        let mut lap = r0[grid.lateral_index(i1 + 1, i2)] + r0[grid.lateral_index(i1 - 1, i2)]
            - T::lit(2.0) * r0[l];
        if grid.n == 2 {
            lap += r0[grid.lateral_index(i1, i2 + 1)] + r0[grid.lateral_index(i1, i2 - 1)]
                - T::lit(2.0) * r0[l];
        }
        out[l] = (r1[l] - r0[l]) / hy + hy / T::lit(2.0) * lap / (hx * hx);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{BoundaryOptions, BoundaryProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump_data(grid: &StripGrid<f64>) -> BoundaryData<f64> {
        let p = BoundaryProfile::CompactBump { center: [0.1, -0.2], radius: 0.8, amplitude: 1.0 };
        BoundaryData::from_profile(grid, &p, &BoundaryOptions::default()).unwrap()
    }

    #[test]
    fn zero_data_zero_trace_zero_energy() {
        let grid = StripGrid::new(1, 1.0, 0.5, 9, 9).unwrap();
        let form = dirichlet_to_neumann(&grid, &BoundaryData::zero(&grid)).unwrap();
        assert_eq!(form.energy(&vec![0.0; 7]), 0.0);
    }

    #[test]
    fn energy_matches_extension_energy() {
        for n in [1, 2] {
            let grid = StripGrid::new(n, 1.0, 0.6, 11, 7).unwrap();
            let data = bump_data(&grid);
            let form = dirichlet_to_neumann(&grid, &data).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let t: Vec<f64> = (0..grid.trace_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let field = form.extend(&t);
            let direct = discrete_dirichlet_energy(&grid, &field);
            let reduced = form.energy(&t);
            assert!((direct - reduced).abs() <= 1e-12 * direct.abs(), "{direct} vs {reduced}");
            // top row reproduces u_A
            for (a, b) in field.row(grid.my - 1).iter().zip(&data.top) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extension_is_discretely_harmonic() {
        let grid = StripGrid::new(1, 1.0, 0.5, 13, 9).unwrap();
        let data = bump_data(&grid);
        let form = dirichlet_to_neumann(&grid, &data).unwrap();
        let t: Vec<f64> = (0..11).map(|i| (i as f64 * 0.7).sin()).collect();
        let u = form.extend(&t);
        let (hx, hy) = (grid.hx(), grid.hy());
        for j in 1..grid.my - 1 {
            for i in 1..grid.mx - 1 {
                let lap = (u.row(j)[i + 1] + u.row(j)[i - 1] - 2.0 * u.row(j)[i]) / (hx * hx)
                    + (u.row(j + 1)[i] + u.row(j - 1)[i] - 2.0 * u.row(j)[i]) / (hy * hy);
                assert!(lap.abs() < 1e-9, "{lap}");
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let grid = StripGrid::new(2, 1.0, 0.6, 9, 6).unwrap();
        let form = dirichlet_to_neumann(&grid, &bump_data(&grid)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t: Vec<f64> = (0..grid.trace_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = form.gradient(&t);
        let h = 1e-5;
        for i in 0..t.len() {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[i] += h;
            tm[i] -= h;
            let fd = (form.energy(&tp) - form.energy(&tm)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0), "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn normal_equals_stencil() {
        for n in [1, 2] {
            let grid = StripGrid::new(n, 1.0, 0.5, 11, 8).unwrap();
            let form = dirichlet_to_neumann(&grid, &bump_data(&grid)).unwrap();
            let t: Vec<f64> = (0..grid.trace_len()).map(|i| (i as f64 * 0.3).cos()).collect();
            let normal = form.normal_from_gradient(&form.gradient(&t));
            let u = form.extend(&t);
            let st = stencil_normal(&grid, &u);
            for (k, &l) in grid.interior_lateral().iter().enumerate() {
                assert!((normal[k] - st[l]).abs() < 1e-9, "{} vs {}", normal[k], st[l]);
            }
        }
    }

    #[test]
    fn spectrum_bounds_are_positive() {
        let grid = StripGrid::new(1, 2.0, 0.5, 65, 17).unwrap();
        let form = dirichlet_to_neumann(&grid, &BoundaryData::zero(&grid)).unwrap();
        // lowest mode approaches the 1-D vertical stiffness 2 hx / A
        let lo = form.min_eigenvalue();
        assert!(lo > 2.0 * grid.hx() / 0.5 && lo < 2.5 * grid.hx() / 0.5, "{lo}");
        assert!(form.max_eigenvalue() > lo);
    }

    #[test]
    fn rejects_mismatched_data() {
        let grid = StripGrid::new(1, 1.0, 0.5, 9, 5).unwrap();
        let other = StripGrid::new(1, 1.0, 0.5, 11, 5).unwrap();
        assert!(dirichlet_to_neumann(&grid, &BoundaryData::zero(&other)).is_err());
    }
}
