//! Crack set, free boundary and the geometric diagnostics of a solution:
//! lateral Lipschitz and semiconvexity profiles, the strip bound on `d_y u`,
//! phase separation and the graph parametrization of the free boundary.

use serde::Serialize;

use crate::grid::StripGrid;
use crate::law::Density;
use crate::scalar::Real;
use crate::solver::Solution;

/// An open/closed transition of the trace between two neighbouring lateral
/// nodes, located by linear interpolation of `|t|^{2/3}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseTransition<T> {
    pub position: [T; 2],
    /// Sign of the open phase (`1` or `-1`).
    pub sign: i8,
    pub open_node: usize,
    pub closed_node: usize,
}

/// Opening profile `|t|^{2/3}` at node `l` when it is open with sign `s`.
fn lifted<T: Real>(trace: &[T], l: usize, s: T, open_tol: T) -> Option<T> {
    let t = trace[l] * s;
    (t > open_tol).then(|| t.powf(T::lit(2.0 / 3.0)))
}

/// All transitions of either phase, scanning lines along each lateral axis.
/// Near a regular free-boundary point the trace grows like `d^{3/2}`, so
/// `|t|^{2/3}` is close to linear in the distance `d`.
pub fn phase_transitions<T: Real>(grid: &StripGrid<T>, trace: &[T], open_tol: T) -> Vec<PhaseTransition<T>> {
    let m = grid.mx;
    let mut out = Vec::new();
    let axes = if grid.n == 2 { 2 } else { 1 };
    for axis in 0..axes {
        for line in 0..grid.lateral_len() / m {
            let node = |k: usize| {
                if grid.n == 1 {
                    k
                } else if axis == 0 {
                    grid.lateral_index(k, line)
                } else {
                    grid.lateral_index(line, k)
                }
            };
            for k in 0..m - 1 {
                for (a, b, dir) in [(k, k + 1, 1isize), (k + 1, k, -1)] {
                    let (la, lb) = (node(a), node(b));
                    for s in [T::one(), -T::one()] {
                        let Some(sa) = lifted(trace, la, s, open_tol) else { continue };
                        if lifted(trace, lb, s, open_tol).is_some() {
                            continue;
                        }
                        // extrapolate from the open side when two nodes are available
                        let behind = a as isize - dir;
                        let frac = if (0..m as isize).contains(&behind) {
                            match lifted(trace, node(behind as usize), s, open_tol) {
                                Some(sb) if sb > sa => (sa / (sb - sa)).min(T::one()),
                                _ => T::lit(0.5),
                            }
                        } else {
                            T::lit(0.5)
                        };
                        let (pa, pb) = (grid.lateral_point(la), grid.lateral_point(lb));
                        out.push(PhaseTransition {
                            position: [pa[0] + frac * (pb[0] - pa[0]), pa[1] + frac * (pb[1] - pa[1])],
                            sign: if s > T::zero() { 1 } else { -1 },
                            open_node: la,
                            closed_node: lb,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Crack set and free boundary of a solution.
#[derive(Clone, Debug, Serialize)]
pub struct CrackGeometry<T> {
    pub open_tol: T,
    /// Lateral nodes with `|trace| > open_tol`.
    pub open_set: Vec<usize>,
    pub fb_points: Vec<PhaseTransition<T>>,
    /// Smallest `R` with `|trace| <= open_tol` outside `B_R(0)`.
    pub support_radius: T,
    /// Distance between the two open phases; `None` when one is empty.
    pub phase_gap: Option<T>,
    /// Connected components of each phase (lattice adjacency).
    pub positive_components: usize,
    pub negative_components: usize,
}

fn norm2<T: Real>(p: [T; 2]) -> T {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

fn neighbours(grid: &StripGrid<impl Real>, l: usize) -> Vec<usize> {
    let [i1, i2] = grid.lateral_indices(l);
    let m = grid.mx;
    let mut out = Vec::with_capacity(4);
    if i1 > 0 {
        out.push(grid.lateral_index(i1 - 1, i2));
    }
    if i1 + 1 < m {
        out.push(grid.lateral_index(i1 + 1, i2));
    }
    if grid.n == 2 {
        if i2 > 0 {
            out.push(grid.lateral_index(i1, i2 - 1));
        }
        if i2 + 1 < m {
            out.push(grid.lateral_index(i1, i2 + 1));
        }
    }
    out
}

fn components(grid: &StripGrid<impl Real>, member: &[bool]) -> usize {
    let mut seen = vec![false; member.len()];
    let mut count = 0;
    for start in 0..member.len() {
        if !member[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(l) = stack.pop() {
            for nb in neighbours(grid, l) {
                if member[nb] && !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    count
}

/// Classifies the trace against `open_tol` (ties count as closed).
pub fn extract<T: Real>(sol: &Solution<T>, open_tol: T) -> CrackGeometry<T> {
    let grid = &sol.grid;
    let lat = grid.lateral_len();
    let pos: Vec<bool> = (0..lat).map(|l| sol.trace[l] > open_tol).collect();
    let neg: Vec<bool> = (0..lat).map(|l| sol.trace[l] < -open_tol).collect();
    let open_set: Vec<usize> = (0..lat).filter(|&l| pos[l] || neg[l]).collect();
    let support_radius = open_set
        .iter()
        .fold(T::zero(), |r, &l| r.max(norm2(grid.lateral_point(l))));
    // the closest pair of two lattice sets is always attained on their edges
    let edge = |member: &[bool]| -> Vec<[T; 2]> {
        (0..lat)
            .filter(|&l| member[l] && neighbours(grid, l).iter().any(|&nb| !member[nb]))
            .map(|l| grid.lateral_point(l))
            .collect()
    };
    let (pe, ne) = (edge(&pos), edge(&neg));
    let phase_gap = if pos.iter().any(|&b| b) && neg.iter().any(|&b| b) {
        let mut best = T::infinity();
        for p in &pe {
            for q in &ne {
                best = best.min(norm2([p[0] - q[0], p[1] - q[1]]));
            }
        }
        Some(best)
    } else {
        None
    };
    CrackGeometry {
        open_tol,
        open_set,
        fb_points: phase_transitions(grid, &sol.trace, open_tol),
        support_radius,
        phase_gap,
        positive_components: components(grid, &pos),
        negative_components: components(grid, &neg),
    }
}

/// `L(y_j) = max |u(x + hx e_i, y_j) - u(x, y_j)| / hx` per row.
pub fn lipschitz_profile<T: Real>(sol: &Solution<T>) -> Vec<T> {
    let grid = &sol.grid;
    let hx = grid.hx();
    (0..grid.my)
        .map(|j| {
            let row = sol.u.row(j);
            let mut best = T::zero();
            for l in 0..grid.lateral_len() {
                let [i1, i2] = grid.lateral_indices(l);
                if i1 + 1 < grid.mx {
                    best = best.max((row[grid.lateral_index(i1 + 1, i2)] - row[l]).abs());
                }
                if grid.n == 2 && i2 + 1 < grid.mx {
                    best = best.max((row[grid.lateral_index(i1, i2 + 1)] - row[l]).abs());
                }
            }
            best / hx
        })
        .collect()
}

/// `L_A / (1 - 2 A sup|g''|)`.
pub fn lipschitz_bound<T: Real, L: Density<T> + ?Sized>(l_a: T, height: T, law: &L) -> T {
    l_a / (T::one() - T::lit(2.0) * height * law.g2_sup())
}

#[derive(Clone, Debug, Serialize)]
pub struct SemiconvexityReport<T> {
    /// Per-row semiconvexity estimate of `u^+`.
    pub d_est: Vec<T>,
    /// Per-row semiconcavity estimate of `u^-`.
    pub c_est: Vec<T>,
    /// `D-bar` built from `L_A`, `D_A`, `A` and the law.
    pub d_bar: T,
    pub c_bar: T,
}

/// `D-bar` (or `C-bar` with `C_A` in place of `D_A`):
/// `[D_A + 4 A L_A^2 sup|g'''| / c^2] / c` with `c = 1 - 2 A sup|g''|`.
pub fn semiconvexity_bound<T: Real, L: Density<T> + ?Sized>(d_a: T, l_a: T, height: T, law: &L) -> T {
    let c = T::one() - T::lit(2.0) * height * law.g2_sup();
    (d_a + T::lit(4.0) * height * l_a * l_a * law.g3_sup() / (c * c)) / c
}

/// Lattice offsets `k e` for `k = 1..=max_offset`, `e` an axis (or, for
/// `n = 2`, a diagonal) direction. Returned as index steps.
fn offsets(n: usize, max_offset: usize) -> Vec<[isize; 2]> {
    let dirs: &[[isize; 2]] = if n == 1 { &[[1, 0]] } else { &[[1, 0], [0, 1], [1, 1], [1, -1]] };
    let mut out = Vec::new();
    for k in 1..=max_offset as isize {
        for d in dirs {
            out.push([k * d[0], k * d[1]]);
        }
    }
    out
}

/// Estimates of the second-difference bounds of `u^+` (from below) and `u^-`
/// (from above) on every row, over offsets up to `max_offset` cells:
///
/// ```text
/// D_est(y) = max(0, max -[u+(x+h) + u+(x-h) - 2 u+(x)] / |h|^2)
/// C_est(y) = max(0, max  [u-(x+h) + u-(x-h) - 2 u-(x)] / |h|^2)
/// ```
pub fn semiconvexity_profile<T: Real, L: Density<T> + ?Sized>(
    sol: &Solution<T>,
    data_lipschitz: T,
    data_semiconvexity: T,
    data_semiconcavity: T,
    law: &L,
    max_offset: usize,
) -> SemiconvexityReport<T> {
    let grid = &sol.grid;
    let hx = grid.hx();
    let m = grid.mx as isize;
    let offs = offsets(grid.n, max_offset);
    let mut d_est = Vec::with_capacity(grid.my);
    let mut c_est = Vec::with_capacity(grid.my);
    for j in 0..grid.my {
        let row = sol.u.row(j);
        let (mut d, mut c) = (T::zero(), T::zero());
        for l in 0..grid.lateral_len() {
            let [i1, i2] = grid.lateral_indices(l);
            let (i1, i2) = (i1 as isize, i2 as isize);
            for h in &offs {
                let (a1, a2, b1, b2) = (i1 + h[0], i2 + h[1], i1 - h[0], i2 - h[1]);
                let inside = |p: isize, q: isize| p >= 0 && p < m && q >= 0 && (q < m || grid.n == 1 && q == 0);
                if !inside(a1, a2) || !inside(b1, b2) {
                    continue;
                }
                let up = row[grid.lateral_index(a1 as usize, a2 as usize)];
                let dn = row[grid.lateral_index(b1 as usize, b2 as usize)];
                let mid = row[l];
                let h2 = T::from_isize(h[0] * h[0] + h[1] * h[1]).unwrap() * hx * hx;
                let pos = |v: T| v.max(T::zero());
                let neg = |v: T| v.min(T::zero());
                d = d.max(-(pos(up) + pos(dn) - T::lit(2.0) * pos(mid)) / h2);
                c = c.max((neg(up) + neg(dn) - T::lit(2.0) * neg(mid)) / h2);
            }
        }
        d_est.push(d);
        c_est.push(c);
    }
    SemiconvexityReport {
        d_est,
        c_est,
        d_bar: semiconvexity_bound(data_semiconvexity, data_lipschitz, grid.height, law),
        c_bar: semiconvexity_bound(data_semiconcavity, data_lipschitz, grid.height, law),
    }
}

/// Two-sided bound `|d_y u(x, y)| <= g'(0+) + C_1 y`.
#[derive(Clone, Debug, Serialize)]
pub struct StripBoundReport<T> {
    /// `max |d_y u(., A)|`.
    pub c0: T,
    /// `max(C_0 - g'(0+), 0) / A`.
    pub c1: T,
    /// Smallest value of `g'(0+) + C_1 y + fd_tol - |d_y u|` over all nodes.
    pub margin: T,
    /// Rows containing a violation.
    pub violating_rows: Vec<usize>,
    pub holds: bool,
}

/// `d_y u` on every node: the solver's normal on `y = 0`, centered
/// differences inside and a second-order one-sided difference on top.
pub fn vertical_derivative<T: Real>(sol: &Solution<T>) -> Vec<Vec<T>> {
    let grid = &sol.grid;
    let hy = grid.hy();
    let my = grid.my;
    let two = T::lit(2.0);
    (0..my)
        .map(|j| {
            if j == 0 {
                return sol.normal.clone();
            }
            let (lo, hi) = if j == my - 1 { (j - 1, j) } else { (j - 1, j + 1) };
            (0..grid.lateral_len())
                .map(|l| {
                    if j == my - 1 && my >= 3 {
                        let (a, b, c) = (sol.u.row(j)[l], sol.u.row(j - 1)[l], sol.u.row(j - 2)[l]);
                        (T::lit(3.0) * a - T::lit(4.0) * b + c) / (two * hy)
                    } else {
                        (sol.u.row(hi)[l] - sol.u.row(lo)[l]) / (T::from_usize(hi - lo).unwrap() * hy)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn derivative_strip_bounds<T: Real, L: Density<T> + ?Sized>(
    sol: &Solution<T>,
    law: &L,
    fd_tol: T,
) -> StripBoundReport<T> {
    let grid = &sol.grid;
    let dy = vertical_derivative(sol);
    let gp0 = law.gp0();
    let c0 = dy[grid.my - 1].iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let c1 = (c0 - gp0).max(T::zero()) / grid.height;
    let mut margin = T::infinity();
    let mut violating_rows = Vec::new();
    for (j, row) in dy.iter().enumerate() {
        let bound = gp0 + c1 * grid.y(j) + fd_tol;
        let worst = row.iter().fold(T::infinity(), |m, v| m.min(bound - v.abs()));
        if worst < T::zero() {
            violating_rows.push(j);
        }
        margin = margin.min(worst);
    }
    StripBoundReport { c0, c1, margin, holds: violating_rows.is_empty(), violating_rows }
}

/// Free boundary as a graph `x_n = f(s)` in a local frame.
#[derive(Clone, Debug, Serialize)]
pub struct GraphReport<T> {
    /// Tangential abscissae `s` where exactly one crossing was found.
    pub s: Vec<T>,
    /// Crossing position along the normal direction.
    pub f: Vec<T>,
    /// First-difference slopes between consecutive samples (one fewer).
    pub slope: Vec<T>,
    /// `(alpha, max |f'(a) - f'(b)| / |a - b|^alpha)`.
    pub holder: Vec<(T, T)>,
    /// Tangential abscissae with more than one crossing.
    pub non_graph: Vec<T>,
    /// For `n = 1`, the free-boundary points themselves.
    pub endpoints: Vec<T>,
}

/// Frame for [`graph_extract`]: a point on the free boundary and the unit
/// lateral direction pointing into the open phase.
#[derive(Clone, Copy, Debug)]
pub struct GraphFrame<T> {
    pub center: [T; 2],
    pub direction: [T; 2],
    /// Half-size of the square window in both local coordinates.
    pub half_window: T,
}

fn bilinear_trace<T: Real>(grid: &StripGrid<T>, trace: &[T], p: [T; 2]) -> Option<T> {
    let hx = grid.hx();
    let m = grid.mx;
    let s1 = (p[0] + grid.half_width) / hx;
    let s2 = (p[1] + grid.half_width) / hx;
    let lim = T::from_usize(m - 1).unwrap();
    if s1 < T::zero() || s2 < T::zero() || s1 > lim || s2 > lim {
        return None;
    }
    let i1 = s1.floor().to_usize()?.min(m - 2);
    let i2 = s2.floor().to_usize()?.min(m - 2);
    let f1 = s1 - T::from_usize(i1).unwrap();
    let f2 = s2 - T::from_usize(i2).unwrap();
    let at = |a: usize, b: usize| trace[grid.lateral_index(i1 + a, i2 + b)];
    let one = T::one();
    Some(
        (one - f1) * (one - f2) * at(0, 0)
            + f1 * (one - f2) * at(1, 0)
            + (one - f1) * f2 * at(0, 1)
            + f1 * f2 * at(1, 1),
    )
}

/// The free boundary of the positive phase near `frame.center` as a graph
/// over the tangential coordinate. Lines are sampled at spacing `hx` and the
/// crossing is located with the same `t^{2/3}` interpolation as
/// [`phase_transitions`]. For `n = 1` only the endpoints are returned.
pub fn graph_extract<T: Real>(sol: &Solution<T>, frame: &GraphFrame<T>, alphas: &[T]) -> GraphReport<T> {
    let grid = &sol.grid;
    let open_tol = sol.open_tol;
    if grid.n == 1 {
        let endpoints = phase_transitions(grid, &sol.trace, open_tol)
            .into_iter()
            .filter(|p| p.sign > 0)
            .map(|p| p.position[0])
            .collect();
        return GraphReport {
            s: vec![],
            f: vec![],
            slope: vec![],
            holder: vec![],
            non_graph: vec![],
            endpoints,
        };
    }
    let hx = grid.hx();
    let e = frame.direction;
    let tang = [-e[1], e[0]];
    let steps = (frame.half_window / hx).floor().to_isize().unwrap_or(0);
    let (mut s_out, mut f_out, mut non_graph) = (vec![], vec![], vec![]);
    let two_thirds = T::lit(2.0 / 3.0);
    for a in -steps..=steps {
        let s = T::from_isize(a).unwrap() * hx;
        let line: Vec<(T, T)> = (-steps..=steps)
            .filter_map(|b| {
                let t = T::from_isize(b).unwrap() * hx;
                let p = [
                    frame.center[0] + s * tang[0] + t * e[0],
                    frame.center[1] + s * tang[1] + t * e[1],
                ];
                bilinear_trace(grid, &sol.trace, p).map(|v| (t, v))
            })
            .collect();
        let lift = |v: T| (v > open_tol).then(|| v.powf(two_thirds));
        let mut crossings = Vec::new();
        for k in 0..line.len().saturating_sub(1) {
            let (a, b) = (line[k], line[k + 1]);
            let (open_k, closed_k, deeper) = match (lift(a.1), lift(b.1)) {
                (Some(_), None) => (k, k + 1, k.checked_sub(1)),
                (None, Some(_)) => (k + 1, k, Some(k + 2).filter(|&d| d < line.len())),
                _ => continue,
            };
            let sa = lift(line[open_k].1).unwrap();
            let frac = match deeper.and_then(|d| lift(line[d].1)) {
                Some(sb) if sb > sa => (sa / (sb - sa)).min(T::one()),
                _ => T::lit(0.5),
            };
            let (to, tc) = (line[open_k].0, line[closed_k].0);
            crossings.push(to + frac * (tc - to));
        }
        match crossings.len() {
            1 => {
                s_out.push(s);
                f_out.push(crossings[0]);
            }
            0 => {}
            _ => non_graph.push(s),
        }
    }
    let slope: Vec<T> = s_out
        .windows(2)
        .zip(f_out.windows(2))
        .map(|(s, f)| (f[1] - f[0]) / (s[1] - s[0]))
        .collect();
    let mids: Vec<T> = s_out.windows(2).map(|s| (s[0] + s[1]) / T::lit(2.0)).collect();
    let holder = alphas
        .iter()
        .map(|&alpha| {
            let mut q = T::zero();
            for i in 0..slope.len() {
                for j in i + 1..slope.len() {
                    q = q.max((slope[i] - slope[j]).abs() / (mids[j] - mids[i]).abs().powf(alpha));
                }
            }
            (alpha, q)
        })
        .collect();
    GraphReport { s: s_out, f: f_out, slope, holder, non_graph, endpoints: vec![] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryData;
    use crate::solver::{solve, SolverOptions};
    use crate::law::CohesiveLaw;

    fn synthetic(grid: &StripGrid<f64>, trace: Vec<f64>) -> Solution<f64> {
        let mut u = grid.empty_field();
        u.row_mut(0).copy_from_slice(&trace);
        Solution {
            grid: *grid,
            u,
            normal: vec![0.0; trace.len()],
            trace,
            energy: 0.0,
            kkt_residual: 0.0,
            iterations: 0,
            energy_history: vec![],
            open_tol: 1e-9,
            step: 0.0,
            converged: true,
            boundary_max: 1.0,
        }
    }

    #[test]
    fn zero_solution_geometry() {
        let grid = StripGrid::<f64>::new(1, 1.0, 0.25, 21, 5).unwrap();
        let sol = solve(&grid, &BoundaryData::zero(&grid), &CohesiveLaw::exponential(1.0, 1.0), &SolverOptions::default())
            .unwrap();
        let g = extract(&sol, 1e-9);
        assert!(g.open_set.is_empty() && g.fb_points.is_empty());
        assert_eq!(g.support_radius, 0.0);
        assert_eq!(g.phase_gap, None);
        assert!(lipschitz_profile(&sol).iter().all(|&v| v == 0.0));
        let law = CohesiveLaw::exponential(1.0, 1.0);
        let s = semiconvexity_profile(&sol, 0.0, 0.0, 0.0, &law, 3);
        assert!(s.d_est.iter().chain(&s.c_est).all(|&v| v == 0.0));
        assert!(derivative_strip_bounds(&sol, &law, 0.0).holds);
    }

    #[test]
    fn transitions_are_refined_with_three_halves_growth() {
        // t = (x - x0)^{3/2} for x > x0, exactly linear after lifting
        let grid = StripGrid::<f64>::new(1, 1.0, 0.5, 41, 3).unwrap();
        let x0 = 0.1234;
        let trace: Vec<f64> = (0..41).map(|i| (grid.x(i) - x0).max(0.0).powf(1.5)).collect();
        let tr = phase_transitions(&grid, &trace, 1e-12);
        assert_eq!(tr.len(), 1);
        assert!((tr[0].position[0] - x0).abs() < 1e-9, "{:?}", tr[0]);
        assert_eq!(tr[0].sign, 1);
    }

    #[test]
    fn ties_are_closed_and_phase_gap_is_measured() {
        let grid = StripGrid::<f64>::new(1, 1.0, 0.5, 11, 3).unwrap();
        let mut trace = vec![0.0; 11];
        trace[2] = 0.5;
        trace[3] = 0.1; // exactly at the threshold: closed
        trace[7] = -0.4;
        let g = extract(&synthetic(&grid, trace), 0.1);
        assert_eq!(g.open_set, vec![2, 7]);
        assert!((g.phase_gap.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!((g.positive_components, g.negative_components), (1, 1));
    }

    #[test]
    fn convex_positive_part_has_no_semiconvexity_defect() {
        let grid = StripGrid::<f64>::new(1, 1.0, 0.5, 41, 3).unwrap();
        let trace: Vec<f64> = (0..41).map(|i| (grid.x(i).powi(2) - 0.2).max(0.0)).collect();
        let sol = synthetic(&grid, trace);
        let law = CohesiveLaw::exponential(1.0, 1.0);
        let rep = semiconvexity_profile(&sol, 0.0, 0.0, 0.0, &law, 4);
        assert_eq!(rep.d_est[0], 0.0);
        // a concave cap has a defect of twice its curvature
        let trace: Vec<f64> = (0..41).map(|i| (0.5 - grid.x(i).powi(2)).max(0.0)).collect();
        let rep = semiconvexity_profile(&synthetic(&grid, trace), 0.0, 0.0, 0.0, &law, 1);
        assert!((rep.d_est[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bounds_formulas() {
        let law = CohesiveLaw::exponential(1.0, 1.0);
        // c = 1 - 2 * 0.25 * 1 = 0.5
        assert!((lipschitz_bound(1.0f64, 0.25, &law) - 2.0).abs() < 1e-15);
        // (1 + 4 * 0.25 * 1 * 1 / 0.25) / 0.5 = 10
        assert!((semiconvexity_bound(1.0f64, 1.0, 0.25, &law) - 10.0).abs() < 1e-12);
    }
}
