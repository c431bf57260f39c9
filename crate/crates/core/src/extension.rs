//! The subtracted, evenly reflected field `v = u - g'(0+) y` on `[-A, A]`.

use crate::error::{Error, Result};
use crate::free_boundary::phase_transitions;
use crate::grid::{Field, StripGrid};
use crate::law::Density;
use crate::scalar::Real;
use crate::solver::Solution;

/// `v` on the strip doubled in `y`, sampled through its upper half. Points are
/// `[x1, x2, y]` (`x2` ignored when `n = 1`).
#[derive(Clone, Debug)]
pub struct ReflectedField<T: Real> {
    pub n: usize,
    pub half_width: T,
    pub height: T,
    pub mx: usize,
    /// Rows in the upper half, `y = 0` included.
    pub my: usize,
    /// Full field on `[-A, A]`, axes `[y, (x2,) x1]`, `2 my - 1` rows.
    pub v: Field<T>,
    pub gp0: T,
    pub open_tol: T,
    /// Free-boundary points of the positive phase on `{y = 0}`.
    pub center_candidates: Vec<[T; 2]>,
    grad: [Vec<T>; 3],
}

impl<T: Real> ReflectedField<T> {
    pub fn hx(&self) -> T {
        T::lit(2.0) * self.half_width / T::from_usize(self.mx - 1).unwrap()
    }

    pub fn hy(&self) -> T {
        self.height / T::from_usize(self.my - 1).unwrap()
    }

    fn lateral_len(&self) -> usize {
        self.mx.pow(self.n as u32)
    }

    /// Upper-half value at row `j` and lateral node `l`.
    pub fn upper(&self, j: usize, l: usize) -> T {
        self.v.values[(self.my - 1 + j) * self.lateral_len() + l]
    }

    /// Samples a closed form on the upper half and mirrors it.
    pub fn from_fn(
        n: usize,
        half_width: T,
        height: T,
        mx: usize,
        my: usize,
        gp0: T,
        f: impl Fn([T; 2], T) -> T,
    ) -> Result<Self> {
        let grid = StripGrid::new(n, half_width, height, mx, my)?;
        let mut upper = vec![T::zero(); grid.node_count()];
        let lat = grid.lateral_len();
        for j in 0..my {
            for l in 0..lat {
                upper[j * lat + l] = f(grid.lateral_point(l), grid.y(j));
            }
        }
        Ok(Self::assemble(&grid, upper, gp0, T::zero(), Vec::new()))
    }

    fn assemble(grid: &StripGrid<T>, upper: Vec<T>, gp0: T, open_tol: T, center_candidates: Vec<[T; 2]>) -> Self {
        let lat = grid.lateral_len();
        let my = grid.my;
        let mut values = Vec::with_capacity((2 * my - 1) * lat);
        for j in (1..my).rev() {
            values.extend_from_slice(&upper[j * lat..(j + 1) * lat]);
        }
        values.extend_from_slice(&upper);
        let mut v = grid.empty_field();
        v.dims[0] = 2 * my - 1;
        v.origin[0] = -grid.height;
        v.values = values;
        let grad = upper_gradient(grid, &upper);
        Self {
            n: grid.n,
            half_width: grid.half_width,
            height: grid.height,
            mx: grid.mx,
            my,
            v,
            gp0,
            open_tol,
            center_candidates,
            grad,
        }
    }

    /// Whether the closed ball `B_r(center)` lies in the sampled domain.
    pub fn contains_ball(&self, center: [T; 2], r: T) -> bool {
        let slack = T::lit(1e-12) * self.half_width;
        let lateral_ok = center[0].abs() + r <= self.half_width + slack
            && (self.n == 1 || center[1].abs() + r <= self.half_width + slack);
        lateral_ok && r <= self.height + slack && r > T::zero()
    }

    pub fn require_ball(&self, center: [T; 2], r: T) -> Result<()> {
        if self.contains_ball(center, r) {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "ball of radius {r} at ({}, {}) leaves the domain",
                center[0], center[1]
            )))
        }
    }

    /// Locates `p` in the upper-half grid: cell corner indices and weights.
    fn locate(&self, p: [T; 3]) -> ([usize; 3], [T; 3]) {
        let hx = self.hx();
        let cell = |s: T, m: usize| -> (usize, T) {
            let s = s.max(T::zero());
            let i = s.floor().to_usize().unwrap_or(0).min(m - 2);
            (i, (s - T::from_usize(i).unwrap()).min(T::one()))
        };
        let (i1, f1) = cell((p[0] + self.half_width) / hx, self.mx);
        let (i2, f2) = if self.n == 2 { cell((p[1] + self.half_width) / hx, self.mx) } else { (0, T::zero()) };
        let (j, fy) = cell(p[2].abs() / self.hy(), self.my);
        ([i1, i2, j], [f1, f2, fy])
    }

    fn interpolate(&self, data: &[T], p: [T; 3]) -> T {
        let ([i1, i2, j], [f1, f2, fy]) = self.locate(p);
        let lat = self.lateral_len();
        let mx = self.mx;
        let at = |a: usize, b: usize, c: usize| data[(j + c) * lat + (i2 + b) * mx + i1 + a];
        let one = T::one();
        let mut acc = T::zero();
        let b_range = if self.n == 2 { 2 } else { 1 };
        for c in 0..2 {
            let wc = if c == 0 { one - fy } else { fy };
            for b in 0..b_range {
                let wb = if self.n == 1 { one } else if b == 0 { one - f2 } else { f2 };
                for a in 0..2 {
                    let wa = if a == 0 { one - f1 } else { f1 };
                    acc += wa * wb * wc * at(a, b, c);
                }
            }
        }
        acc
    }

    /// Four-point Lagrange stencil per axis: first index and weights. Stencils
    /// are shifted inward near the edges, so the first cell above `y = 0`
    /// only uses rows `0..4` and kinks across the crack plane are not smeared.
    fn cubic_stencil(&self, s: T, m: usize) -> (usize, [T; 4]) {
        let s = s.max(T::zero()).min(T::from_usize(m - 1).unwrap());
        let i = s.floor().to_usize().unwrap_or(0).min(m - 2);
        let first = i.saturating_sub(1).min(m.saturating_sub(4));
        let t = s - T::from_usize(first).unwrap();
        let mut w = [T::one(); 4];
        for (k, wk) in w.iter_mut().enumerate() {
            for q in 0..4 {
                if q != k {
                    let (kf, qf) = (T::from_usize(k).unwrap(), T::from_usize(q).unwrap());
                    *wk *= (t - qf) / (kf - qf);
                }
            }
        }
        (first, w)
    }

    /// Piecewise-cubic (tensor Lagrange) interpolation of `v`, fourth order
    /// where `v` is smooth. Falls back to [`Self::value`] on grids with fewer
    /// than four nodes along an axis.
    pub fn value_cubic(&self, p: [T; 3]) -> T {
        if self.mx < 4 || self.my < 4 {
            return self.value(p);
        }
        let hx = self.hx();
        let (a1, w1) = self.cubic_stencil((p[0] + self.half_width) / hx, self.mx);
        let (a2, w2) = if self.n == 2 {
            self.cubic_stencil((p[1] + self.half_width) / hx, self.mx)
        } else {
            (0, [T::one(), T::zero(), T::zero(), T::zero()])
        };
        let (aj, wj) = self.cubic_stencil(p[2].abs() / self.hy(), self.my);
        let data = self.upper_values();
        let lat = self.lateral_len();
        let mx = self.mx;
        let b_range = if self.n == 2 { 4 } else { 1 };
        let mut acc = T::zero();
        for (c, &wc) in wj.iter().enumerate() {
            for (b, &wb) in w2.iter().enumerate().take(b_range) {
                let base = (aj + c) * lat + (a2 + b) * mx + a1;
                let mut line = T::zero();
                for (a, &wa) in w1.iter().enumerate() {
                    line += wa * data[base + a];
                }
                acc += wc * wb * line;
            }
        }
        acc
    }

    fn upper_values(&self) -> &[T] {
        let lat = self.lateral_len();
        &self.v.values[(self.my - 1) * lat..]
    }

    /// Multilinear interpolation of `v` at `p`.
    pub fn value(&self, p: [T; 3]) -> T {
        self.interpolate(self.upper_values(), p)
    }

    /// `grad v` at `p` as `[d_x1, d_x2, d_y]`, interpolated from second-order
    /// nodal differences of the upper half; at `y = 0` the upper one-sided
    /// `y`-derivative is returned.
    pub fn gradient(&self, p: [T; 3]) -> [T; 3] {
        let gx1 = self.interpolate(&self.grad[0], p);
        let gx2 = if self.n == 2 { self.interpolate(&self.grad[1], p) } else { T::zero() };
        let gy = self.interpolate(&self.grad[2], p);
        [gx1, gx2, if p[2] < T::zero() { -gy } else { gy }]
    }

    /// Five-point (seven-point for `n = 2`) Laplacian of the reflected field
    /// at the interior nodes of `{y = 0}`.
    pub fn bottom_laplacian(&self) -> Vec<T> {
        let (hx, hy) = (self.hx(), self.hy());
        let lat = self.lateral_len();
        let mx = self.mx;
        let mut out = Vec::new();
        let interior = |i: usize| i > 0 && i + 1 < mx;
        for l in 0..lat {
            let (i1, i2) = (l % mx, l / mx);
            if !interior(i1) || (self.n == 2 && !interior(i2)) {
                continue;
            }
            let v0 = self.upper(0, l);
            let mut lap = (self.upper(0, l + 1) + self.upper(0, l - 1) - T::lit(2.0) * v0) / (hx * hx);
            if self.n == 2 {
                lap += (self.upper(0, l + mx) + self.upper(0, l - mx) - T::lit(2.0) * v0) / (hx * hx);
            }
            lap += T::lit(2.0) * (self.upper(1, l) - v0) / (hy * hy);
            out.push(lap);
        }
        out
    }

    /// The field built from `-u`, for analysis of the negative phase.
    pub fn sign_flipped(sol: &Solution<T>, gp0: T) -> Result<Self> {
        build_v(&sol.negated(), gp0)
    }
}

fn upper_gradient<T: Real>(grid: &StripGrid<T>, upper: &[T]) -> [Vec<T>; 3] {
    let (hx, hy) = (grid.hx(), grid.hy());
    let lat = grid.lateral_len();
    let (mx, my) = (grid.mx, grid.my);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    // second-order difference along a line of values f(k) for 0 <= k < m
    let diff = |f: &dyn Fn(usize) -> T, k: usize, m: usize, h: T| -> T {
        if k == 0 {
            (-three * f(0) + four * f(1) - f(2)) / (two * h)
        } else if k == m - 1 {
            (three * f(m - 1) - four * f(m - 2) + f(m - 3)) / (two * h)
        } else {
            (f(k + 1) - f(k - 1)) / (two * h)
        }
    };
    let mut g = [vec![T::zero(); upper.len()], vec![T::zero(); upper.len()], vec![T::zero(); upper.len()]];
    for j in 0..my {
        for l in 0..lat {
            let (i1, i2) = (l % mx, l / mx);
            let base = j * lat + i2 * mx;
            g[0][j * lat + l] = diff(&|k| upper[base + k], i1, mx, hx);
            if grid.n == 2 {
                let base = j * lat + i1;
                g[1][j * lat + l] = diff(&|k| upper[base + k * mx], i2, mx, hx);
            }
            g[2][j * lat + l] = diff(&|k| upper[k * lat + l], j, my, hy);
        }
    }
    g
}

/// Builds `v` from a solution, checking that the whole crack plane carries
/// only the nonnegative phase.
pub fn build_v<T: Real>(sol: &Solution<T>, gp0: T) -> Result<ReflectedField<T>> {
    build_v_window(sol, gp0, None)
}

/// [`build_v`] restricted to a window `B^n_radius(center)` of the crack plane:
/// only the trace inside the window must be free of the negative phase.
pub fn build_v_window<T: Real>(
    sol: &Solution<T>,
    gp0: T,
    window: Option<([T; 2], T)>,
) -> Result<ReflectedField<T>> {
    let grid = &sol.grid;
    let inside = |l: usize| match window {
        None => true,
        Some((c, r)) => {
            let p = grid.lateral_point(l);
            let (d1, d2) = (p[0] - c[0], p[1] - c[1]);
            (d1 * d1 + d2 * d2).sqrt() <= r
        }
    };
    let min_trace = (0..grid.lateral_len())
        .filter(|&l| inside(l))
        .fold(T::infinity(), |m, l| m.min(sol.trace[l]));
    if min_trace < -sol.open_tol {
        return Err(Error::PhaseWindow { min_trace: min_trace.to_f64_lossy() });
    }
    let lat = grid.lateral_len();
    let mut upper = sol.u.values.clone();
    for j in 0..grid.my {
        let shift = gp0 * grid.y(j);
        for v in &mut upper[j * lat..(j + 1) * lat] {
            *v -= shift;
        }
    }
    let candidates = phase_transitions(grid, &sol.trace, sol.open_tol)
        .into_iter()
        .filter(|p| p.sign > 0)
        .map(|p| p.position)
        .collect();
    Ok(ReflectedField::assemble(grid, upper, gp0, sol.open_tol, candidates))
}

/// Convenience wrapper taking `g'(0+)` from the law.
pub fn build_v_for<T: Real, L: Density<T> + ?Sized>(sol: &Solution<T>, law: &L) -> Result<ReflectedField<T>> {
    build_v(sol, law.gp0())
}
