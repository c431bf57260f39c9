//! Independent reference computations.
//!
//! Nothing here calls the solver, the reduced form, the interpolation or the
//! quadrature of `cohesive-core`. Laws and grids are borrowed only as data.

use cohesive_core::law::Density;
use cohesive_core::StripGrid;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid has {nodes} nodes, the dense oracle accepts at most {cap}")]
    TooLarge { nodes: usize, cap: usize },
    #[error("degenerate grid: {0}")]
    Degenerate(String),
    #[error("instance has {0} trace nodes, brute force accepts at most 7")]
    TooManyTraceNodes(usize),
    #[error("interior block is not positive definite")]
    NotPositiveDefinite,
    #[error("top data has {got} values, expected {expected}")]
    DataLength { got: usize, expected: usize },
}

pub type Result<T> = std::result::Result<T, OracleError>;

pub const DENSE_NODE_CAP: usize = 10_000;

/// Strip geometry with no validity checks, so degenerate shapes can be
/// handed to the oracles and refused there.
#[derive(Clone, Copy, Debug)]
pub struct RawGrid {
    pub n: usize,
    pub half_width: f64,
    pub height: f64,
    pub mx: usize,
    pub my: usize,
}

impl From<&StripGrid> for RawGrid {
    fn from(g: &StripGrid) -> Self {
        Self { n: g.n, half_width: g.half_width, height: g.height, mx: g.mx, my: g.my }
    }
}

impl RawGrid {
    fn hx(&self) -> f64 {
        2.0 * self.half_width / (self.mx - 1) as f64
    }

    fn hy(&self) -> f64 {
        self.height / (self.my - 1) as f64
    }

    fn lateral(&self) -> usize {
        self.mx.pow(self.n as u32)
    }

    fn nodes(&self) -> usize {
        self.lateral() * self.my
    }

    fn on_side(&self, l: usize) -> bool {
        let (i1, i2) = (l % self.mx, l / self.mx);
        let edge = |i: usize| i == 0 || i == self.mx - 1;
        edge(i1) || (self.n == 2 && edge(i2))
    }

    fn check(&self) -> Result<()> {
        if self.n != 1 && self.n != 2 {
            return Err(OracleError::Degenerate(format!("n = {}", self.n)));
        }
        if self.mx < 3 || self.my < 3 {
            return Err(OracleError::Degenerate(format!("{} x {} nodes", self.mx, self.my)));
        }
        if !(self.half_width > 0.0 && self.height > 0.0) {
            return Err(OracleError::Degenerate("non-positive extent".into()));
        }
        Ok(())
    }

    /// Every edge `(a, b, c)` of the energy `sum c (u_a - u_b)^2`, nodes
    /// numbered `j * lateral + l`. Rows `0` and `my - 1` carry half weight on
    /// their lateral edges (trapezoid in `y`).
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        let (hx, hy) = (self.hx(), self.hy());
        let lat = self.lateral();
        let lateral_c = hx.powi(self.n as i32 - 1) * hy / hx;
        let vertical_c = hx.powi(self.n as i32) / hy;
        let mut out = Vec::new();
        for j in 0..self.my {
            let w = if j == 0 || j == self.my - 1 { 0.5 } else { 1.0 };
            for l in 0..lat {
                let (i1, i2) = (l % self.mx, l / self.mx);
                let a = j * lat + l;
                if i1 + 1 < self.mx {
                    out.push((a, a + 1, w * lateral_c));
                }
                if self.n == 2 && i2 + 1 < self.mx {
                    out.push((a, a + self.mx, w * lateral_c));
                }
                if j + 1 < self.my {
                    out.push((a, a + lat, vertical_c));
                }
            }
        }
        out
    }
}

/// The trace-reduced energy `E(t) = t^T H t / 2 + <linear, t> + constant`
/// from full assembly and dense elimination of the interior.
#[derive(Clone, Debug)]
pub struct DenseSchur {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl DenseSchur {
    pub fn energy(&self, t: &[f64]) -> f64 {
        let t = DVector::from_column_slice(t);
        0.5 * t.dot(&(&self.hessian * &t)) + self.linear.dot(&t) + self.constant
    }

    pub fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let t = DVector::from_column_slice(t);
        (&self.hessian * t + &self.linear).iter().copied().collect()
    }
}

/// Classifies nodes as trace unknowns, interior unknowns or fixed.
enum Role {
    Trace(usize),
    Interior(usize),
    Fixed(f64),
}

fn roles(grid: &RawGrid, top: &[f64]) -> (Vec<Role>, usize, usize) {
    let lat = grid.lateral();
    let (mut nt, mut ni) = (0, 0);
    let mut out = Vec::with_capacity(grid.nodes());
    for j in 0..grid.my {
        for l in 0..lat {
            out.push(if grid.on_side(l) {
                Role::Fixed(0.0)
            } else if j == grid.my - 1 {
                Role::Fixed(top[l])
            } else if j == 0 {
                nt += 1;
                Role::Trace(nt - 1)
            } else {
                ni += 1;
                Role::Interior(ni - 1)
            });
        }
    }
    (out, nt, ni)
}

/// Dense Schur complement of the full stiffness matrix onto the trace.
/// `top` holds `u_A` on every lateral node of the top row.
pub fn dense_schur(grid: &RawGrid, top: &[f64]) -> Result<DenseSchur> {
    grid.check()?;
    if grid.nodes() > DENSE_NODE_CAP {
        return Err(OracleError::TooLarge { nodes: grid.nodes(), cap: DENSE_NODE_CAP });
    }
    if top.len() != grid.lateral() {
        return Err(OracleError::DataLength { got: top.len(), expected: grid.lateral() });
    }
    let (role, nt, ni) = roles(grid, top);
    // E = [t w]^T K [t w] + 2 [t w]^T f + c, with K, f, c from the edges
    let n = nt + ni;
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut f = DVector::<f64>::zeros(n);
    let mut c = 0.0;
    let index = |r: &Role| match *r {
        Role::Trace(i) => Some(i),
        Role::Interior(i) => Some(nt + i),
        Role::Fixed(_) => None,
    };
    let value = |r: &Role| if let Role::Fixed(v) = *r { v } else { 0.0 };
    for (a, b, w) in grid.edges() {
        match (index(&role[a]), index(&role[b])) {
            (Some(p), Some(q)) => {
                k[(p, p)] += w;
                k[(q, q)] += w;
                k[(p, q)] -= w;
                k[(q, p)] -= w;
            }
            (Some(p), None) => {
                let vb = value(&role[b]);
                k[(p, p)] += w;
                f[p] -= w * vb;
                c += w * vb * vb;
            }
            (None, Some(q)) => {
                let va = value(&role[a]);
                k[(q, q)] += w;
                f[q] -= w * va;
                c += w * va * va;
            }
            (None, None) => {
                let d = value(&role[a]) - value(&role[b]);
                c += w * d * d;
            }
        }
    }
    let ktt = k.view((0, 0), (nt, nt)).into_owned();
    let ktw = k.view((0, nt), (nt, ni)).into_owned();
    let kww = k.view((nt, nt), (ni, ni)).into_owned();
    let ft = f.rows(0, nt).into_owned();
    let fw = f.rows(nt, ni).into_owned();
    let (schur, lin, constant) = if ni == 0 {
        (ktt, ft, c)
    } else {
        let chol = kww.cholesky().ok_or(OracleError::NotPositiveDefinite)?;
        let x = chol.solve(&ktw.transpose());
        let y = chol.solve(&fw);
        (&ktt - &ktw * &x, &ft - &ktw * &y, c - fw.dot(&y))
    };
    Ok(DenseSchur { hessian: schur * 2.0, linear: lin * 2.0, constant })
}

/// Harmonic solve with zero trace and `u = top` at `y = A` by conjugate
/// gradients on the edge energy. Returns all nodes, numbered `j * lateral + l`.
pub fn pure_dirichlet(grid: &RawGrid, top: &[f64], tol: f64) -> Result<Vec<f64>> {
    grid.check()?;
    if top.len() != grid.lateral() {
        return Err(OracleError::DataLength { got: top.len(), expected: grid.lateral() });
    }
    let lat = grid.lateral();
    let nodes = grid.nodes();
    let free: Vec<bool> = (0..nodes)
        .map(|a| {
            let (j, l) = (a / lat, a % lat);
            j > 0 && j < grid.my - 1 && !grid.on_side(l)
        })
        .collect();
    let edges = grid.edges();
    // K x restricted to the free nodes
    let apply = |x: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(a, b, w) in &edges {
            let d = w * (x[a] - x[b]);
            out[a] += d;
            out[b] -= d;
        }
        for (o, &fr) in out.iter_mut().zip(&free) {
            if !fr {
                *o = 0.0;
            }
        }
    };
    let mut u = vec![0.0; nodes];
    u[(grid.my - 1) * lat..].copy_from_slice(top);
    for (a, v) in u.iter_mut().enumerate() {
        if grid.on_side(a % lat) {
            *v = 0.0;
        }
    }
    let mut r = vec![0.0; nodes];
    apply(&u, &mut r);
    r.iter_mut().for_each(|v| *v = -*v);
    // the fixed values now enter only through r; iterate on the free part
    let mut p = r.clone();
    let mut ap = vec![0.0; nodes];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let r0 = rr.sqrt().max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; nodes];
    for _ in 0..20 * nodes {
        if rr.sqrt() <= tol * r0 {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for k in 0..nodes {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let next: f64 = r.iter().map(|v| v * v).sum();
        let beta = next / rr;
        rr = next;
        for k in 0..nodes {
            p[k] = r[k] + beta * p[k];
        }
    }
    for k in 0..nodes {
        if free[k] {
            u[k] = x[k];
        }
    }
    Ok(u)
}

/// Minimizer of `(s - w)^2 / (2 tau) + g(2|s|)` over `points + 1` equally
/// spaced candidates between `0` and `w`, followed by one finer scan of the
/// same size around the best candidate.
pub fn prox_scan<L: Density<f64> + ?Sized>(law: &L, w: f64, tau: f64, points: usize) -> f64 {
    let phi = |s: f64| (s - w) * (s - w) / (2.0 * tau) + law.g(2.0 * s.abs());
    let scan = |lo: f64, hi: f64| {
        let mut best = (phi(lo), lo);
        for k in 1..=points {
            let s = lo + (hi - lo) * k as f64 / points as f64;
            let v = phi(s);
            if v < best.0 {
                best = (v, s);
            }
        }
        best.1
    };
    let (lo, hi) = if w >= 0.0 { (0.0, w) } else { (w, 0.0) };
    let coarse = scan(lo, hi);
    let step = (hi - lo) / points as f64;
    scan((coarse - step).max(lo), (coarse + step).min(hi))
}

/// Report from [`brute_force_minimize`].
#[derive(Clone, Debug)]
pub struct BruteForce {
    pub trace: Vec<f64>,
    pub energy: f64,
    pub stationarity: f64,
    pub sweeps: usize,
    /// False when the law violates `2 A sup|g''| < 1`; the result is then
    /// a local minimizer with no global guarantee.
    pub within_hypotheses: bool,
}

/// Cyclic exact coordinate minimization of
/// `J(t) = E(t) + hx^n sum g(2|t_i|)` on at most 7 trace nodes.
///
/// Each 1-D problem is resolved by a kink test at zero followed by
/// golden-section search on the side the subgradient points to.
pub fn brute_force_minimize<L: Density<f64> + ?Sized>(grid: &RawGrid, top: &[f64], law: &L) -> Result<BruteForce> {
    let form = dense_schur(grid, top)?;
    let m = form.linear.len();
    if m > 7 {
        return Err(OracleError::TooManyTraceNodes(m));
    }
    let weight = grid.hx().powi(grid.n as i32);
    let gp0 = law.g1(0.0);
    let mut t = vec![0.0; m];
    let mut sweeps = 0;
    let mut stationarity = f64::INFINITY;
    while sweeps < 100_000 {
        sweeps += 1;
        let mut moved = 0.0f64;
        for i in 0..m {
            let hii = form.hessian[(i, i)];
            // coefficient of s in the smooth part with the other coordinates frozen
            let b: f64 = form.linear[i] + (0..m).filter(|&k| k != i).map(|k| form.hessian[(i, k)] * t[k]).sum::<f64>();
            let phi = |s: f64| 0.5 * hii * s * s + b * s + weight * law.g(2.0 * s.abs());
            let next = if b.abs() <= 2.0 * weight * gp0 {
                0.0
            } else {
                let dir = -b.signum();
                // the smooth part alone is minimized at -b / hii, and the
                // cohesive term only pulls toward zero
                let hi = (b.abs() / hii) * 1.0001;
                let f = |x: f64| phi(dir * x);
                let (lo, hi) = golden(f, 0.0, hi, 1e-6);
                // values resolve the minimizer only to sqrt(eps); finish on
                // the sign of the derivative inside the golden bracket
                let df = |x: f64| hii * x - b.abs() + 2.0 * weight * law.g1(2.0 * x);
                dir * bisect(df, lo, hi)
            };
            moved = moved.max((next - t[i]).abs());
            t[i] = next;
        }
        stationarity = stationarity_of(&form, &t, weight, law);
        if moved < 1e-13 || stationarity < 1e-10 {
            break;
        }
    }
    let energy = form.energy(&t) + t.iter().map(|&s| weight * law.g(2.0 * s.abs())).sum::<f64>();
    let height = grid.height;
    Ok(BruteForce {
        trace: t,
        energy,
        stationarity,
        sweeps,
        within_hypotheses: 2.0 * height * law.g2_sup() < 1.0,
    })
}

/// Largest violation of the optimality system of `J`, per unit trace weight.
fn stationarity_of<L: Density<f64> + ?Sized>(form: &DenseSchur, t: &[f64], weight: f64, law: &L) -> f64 {
    let grad = form.gradient(t);
    let gp0 = law.g1(0.0);
    grad.iter()
        .zip(t)
        .map(|(&gi, &s)| {
            let gi = gi / weight;
            if s == 0.0 {
                (gi.abs() - 2.0 * gp0).max(0.0)
            } else {
                (gi + 2.0 * law.g1(2.0 * s.abs()) * s.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Golden-section search for a unimodal `f` on `[lo, hi]`, stopped once the
/// bracket is narrower than `width`. Returns the final bracket.
fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    (lo, hi)
}

/// Zero of a nondecreasing `df` on `[lo, hi]`, clamped to the bracket.
fn bisect(df: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    if df(lo) >= 0.0 {
        return lo;
    }
    if df(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if df(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form fields on `R^n x R`, even in `y`, exactly homogeneous of
/// degree `mu` about the origin, so `Phi = n + 2 mu` at every radius.
#[derive(Clone, Copy, Debug)]
pub struct ClosedForm {
    pub name: &'static str,
    pub mu: f64,
    kind: Kind,
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Signorini,
    Harmonic(u32),
    AbsY(f64),
}

impl ClosedForm {
    /// Exact frequency `n + 2 mu`.
    pub fn phi(&self, n: usize) -> f64 {
        n as f64 + 2.0 * self.mu
    }

    /// Value at lateral point `x` (the last lateral coordinate is `x_n`).
    pub fn eval(&self, n: usize, x: [f64; 2], y: f64) -> f64 {
        let xn = x[n - 1];
        match self.kind {
            Kind::Signorini => {
                let rho = (xn * xn + y * y).sqrt();
                let theta = y.abs().atan2(xn);
                rho.powf(1.5) * (1.5 * theta).cos()
            }
            Kind::Harmonic(k) => {
                // Re (xn + i y)^k
                let (mut re, mut im) = (1.0, 0.0);
                for _ in 0..k {
                    (re, im) = (re * xn - im * y, re * y + im * xn);
                }
                re
            }
            Kind::AbsY(c) => c * y.abs(),
        }
    }

    /// `F(r)` about the origin by a fine trapezoid (`n = 1`) or
    /// midpoint-in-polar-angle product rule (`n = 2`) on the exact field.
    pub fn sphere_mass(&self, n: usize, r: f64, nodes: usize) -> f64 {
        use std::f64::consts::PI;
        let mut acc = 0.0;
        if n == 1 {
            for k in 0..nodes {
                let t = 2.0 * PI * k as f64 / nodes as f64;
                let v = self.eval(1, [r * t.cos(), 0.0], r * t.sin());
                acc += v * v;
            }
            acc * 2.0 * PI * r / nodes as f64
        } else {
            let polar = nodes / 2;
            for a in 0..polar {
                let th = PI * (a as f64 + 0.5) / polar as f64;
                for b in 0..nodes {
                    let ph = 2.0 * PI * b as f64 / nodes as f64;
                    let p = [r * th.sin() * ph.cos(), r * th.sin() * ph.sin()];
                    let v = self.eval(2, p, r * th.cos());
                    acc += v * v * th.sin();
                }
            }
            acc * r * r * (PI / polar as f64) * (2.0 * PI / nodes as f64)
        }
    }
}

/// The 3/2 profile, evenized harmonic polynomials of degrees 1 to 4, and
/// `-gp0 |y|`.
pub fn closed_form_fields(gp0: f64) -> Vec<ClosedForm> {
    let mut out = vec![ClosedForm { name: "signorini_3half", mu: 1.5, kind: Kind::Signorini }];
    for k in 1..=4u32 {
        let name = ["harmonic_1", "harmonic_2", "harmonic_3", "harmonic_4"][k as usize - 1];
        out.push(ClosedForm { name, mu: k as f64, kind: Kind::Harmonic(k) });
    }
    out.push(ClosedForm { name: "abs_y", mu: 1.0, kind: Kind::AbsY(-gp0) });
    out
}
