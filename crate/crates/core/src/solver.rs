//! Proximal-gradient minimization of the reduced cohesive energy
//!
//! ```text
//! J(t) = E(t) + hx^n sum_i g(2 |t_i|)
//! ```
//!
//! over the crack-plane trace `t`. The smooth part is the trace-reduced
//! Dirichlet energy from [`crate::dtn`]; the nonsmooth part is pointwise, so
//! its proximal map is [`scalar_prox`] node by node.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryData;
use crate::dtn::{dirichlet_to_neumann, ReducedForm};
use crate::error::{Error, Result};
use crate::grid::{Field, StripGrid};
use crate::law::{scalar_prox, validate, Density, ValidationOptions};
use crate::scalar::{signum0, Real};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once the KKT residual is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Open/closed threshold; `None` means `1e-9 max|u_A|`.
    pub open_tol: Option<f64>,
    /// Step is `step_fraction / L` with `L` the Lipschitz constant of the
    /// smooth gradient.
    pub step_fraction: f64,
    /// Monotone Nesterov over-relaxation with restart.
    pub accelerate: bool,
    /// Skip the hypothesis check on the law (results then carry no guarantee).
    pub force_outside_hypotheses: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200_000,
            open_tol: None,
            step_fraction: 0.9,
            accelerate: true,
            force_outside_hypotheses: false,
        }
    }
}

impl SolverOptions {
    pub fn open_tol_for<T: Real>(&self, data: &BoundaryData<T>) -> T {
        match self.open_tol {
            Some(v) => T::lit(v),
            None => T::lit(1e-9) * data.max_abs(),
        }
    }
}

/// Converged displacement and its boundary quantities. `trace` and `normal`
/// cover the whole lateral row (zero on the lateral edges).
#[derive(Clone, Debug)]
pub struct Solution<T: Real> {
    pub grid: StripGrid<T>,
    pub u: Field<T>,
    pub trace: Vec<T>,
    pub normal: Vec<T>,
    pub energy: T,
    pub kkt_residual: T,
    pub iterations: usize,
    pub energy_history: Vec<T>,
    pub open_tol: T,
    pub step: T,
    pub converged: bool,
    /// `max |u_A|`, kept for scale-aware tolerances downstream.
    pub boundary_max: T,
}

impl<T: Real> Solution<T> {
    /// The mirror solution for `-u_A` (analysis of the negative phase).
    pub fn negated(&self) -> Self {
        let neg = |v: &Vec<T>| v.iter().map(|&x| -x).collect::<Vec<_>>();
        Self {
            u: self.u.map(|x| -x),
            trace: neg(&self.trace),
            normal: neg(&self.normal),
            ..self.clone()
        }
    }

    pub fn max_abs_trace(&self) -> T {
        self.trace.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Worst violation of the boundary complementarity system at the interior
/// lateral nodes of `sol`.
pub fn kkt_residual<T: Real, L: Density<T> + ?Sized>(sol: &Solution<T>, law: &L, open_tol: T) -> T {
    let interior = sol.grid.interior_lateral();
    let t: Vec<T> = interior.iter().map(|&l| sol.trace[l]).collect();
    let nrm: Vec<T> = interior.iter().map(|&l| sol.normal[l]).collect();
    residual_of(&t, &nrm, law, open_tol)
}

fn residual_of<T: Real, L: Density<T> + ?Sized>(t: &[T], normal: &[T], law: &L, open_tol: T) -> T {
    let gp0 = law.gp0();
    let two = T::lit(2.0);
    t.iter().zip(normal).fold(T::zero(), |worst, (&ti, &ni)| {
        let r = if ti.abs() > open_tol {
            (ni - law.g1(two * ti.abs()) * signum0(ti)).abs()
        } else {
            (ni.abs() - gp0).max(T::zero())
        };
        worst.max(r)
    })
}

fn check_law<T: Real, L: Density<T> + ?Sized>(grid: &StripGrid<T>, law: &L, opts: &SolverOptions) -> Result<()> {
    if opts.force_outside_hypotheses {
        return Ok(());
    }
    let report = validate(law, grid.height, &ValidationOptions::default())?;
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.failures().iter().map(|a| a.label()).collect();
        Err(Error::HypothesesViolated(failed.join(", ")))
    }
}

struct Problem<'a, T: Real, L: ?Sized> {
    form: ReducedForm<T>,
    law: &'a L,
    weight: T,
    tau: T,
    open_tol: T,
}

impl<T: Real, L: Density<T> + ?Sized> Problem<'_, T, L> {
    fn cohesive(&self, t: &[T]) -> T {
        let two = T::lit(2.0);
        self.weight * t.iter().fold(T::zero(), |acc, &x| acc + self.law.g(two * x.abs()))
    }

    /// Energy, scaled gradient of the smooth part, and KKT residual at `t`.
    fn evaluate(&self, t: &[T]) -> (T, Vec<T>, T) {
        let th = self.form.to_modes(t);
        let energy = self.form.energy_from_modes(&th) + self.cohesive(t);
        let grad = self.form.gradient_from_modes(&th);
        let normal = self.form.normal_from_gradient(&grad);
        let res = residual_of(t, &normal, self.law, self.open_tol);
        let scaled = grad.iter().map(|&g| g / self.weight).collect();
        (energy, scaled, res)
    }

    fn prox_step(&self, y: &[T], grad: &[T]) -> Result<Vec<T>> {
        y.iter()
            .zip(grad)
            .map(|(&yi, &gi)| scalar_prox(self.law, yi - self.tau * gi, self.tau))
            .collect()
    }
}

/// Minimizes the reduced energy starting from the zero trace.
pub fn solve<T: Real, L: Density<T> + ?Sized>(
    grid: &StripGrid<T>,
    data: &BoundaryData<T>,
    law: &L,
    opts: &SolverOptions,
) -> Result<Solution<T>> {
    solve_from(grid, data, law, opts, None)
}

/// Like [`solve`] with an optional initial interior trace. Returns
/// [`Error::NotConverged`] when `max_iter` is exhausted.
pub fn solve_from<T: Real, L: Density<T> + ?Sized>(
    grid: &StripGrid<T>,
    data: &BoundaryData<T>,
    law: &L,
    opts: &SolverOptions,
    initial: Option<&[T]>,
) -> Result<Solution<T>> {
    let sol = solve_unchecked(grid, data, law, opts, initial)?;
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::NotConverged {
            iterations: sol.iterations,
            residual: sol.kkt_residual.to_f64_lossy(),
        })
    }
}

/// Runs the iteration and returns the last iterate whether or not it met
/// the tolerance; `converged` records which.
pub fn solve_unchecked<T: Real, L: Density<T> + ?Sized>(
    grid: &StripGrid<T>,
    data: &BoundaryData<T>,
    law: &L,
    opts: &SolverOptions,
    initial: Option<&[T]>,
) -> Result<Solution<T>> {
    check_law(grid, law, opts)?;
    let form = dirichlet_to_neumann(grid, data)?;
    let weight = grid.cell_measure();
    let lip = form.max_eigenvalue() / weight;
    let mut tau = T::lit(opts.step_fraction) / lip;
    let g2 = law.g2_sup();
    if g2 > T::zero() {
        tau = tau.min(T::lit(0.9) / (T::lit(4.0) * g2));
    }
    let open_tol = opts.open_tol_for(data);
    let problem = Problem { form, law, weight, tau, open_tol };
    let tol = T::lit(opts.tol);

    let mut x: Vec<T> = match initial {
        Some(t0) if t0.len() == grid.trace_len() => t0.to_vec(),
        Some(t0) => {
            return Err(Error::InvalidArgument(format!(
                "initial trace has {} values, expected {}",
                t0.len(),
                grid.trace_len()
            )))
        }
        None => vec![T::zero(); grid.trace_len()],
    };
    let (mut fx, mut gx, mut res) = problem.evaluate(&x);
    let mut history = vec![fx];
    let mut iterations = 0;

    let mut y = x.clone();
    let mut gy = gx.clone();
    let mut theta = T::one();
    let mut momentum = false;
    while res > tol && iterations < opts.max_iter {
        iterations += 1;
        if !opts.accelerate {
            let z = problem.prox_step(&x, &gx)?;
            let (fz, gz, rz) = problem.evaluate(&z);
            x = z;
            fx = fz;
            gx = gz;
            res = rz;
            history.push(fx);
            continue;
        }
        let z = problem.prox_step(&y, &gy)?;
        let (fz, gz, rz) = problem.evaluate(&z);
        // A step taken from x itself is a plain proximal-gradient step and is
        // a descent step; only extrapolated candidates are screened.
        if fz <= fx || !momentum {
            let theta_next = (T::one() + (T::one() + T::lit(4.0) * theta * theta).sqrt()) / T::lit(2.0);
            let beta = (theta - T::one()) / theta_next;
            let x_prev = std::mem::replace(&mut x, z);
            fx = fz;
            gx = gz;
            res = rz;
            theta = theta_next;
            if beta > T::zero() {
                y = x.iter().zip(&x_prev).map(|(&a, &b)| a + beta * (a - b)).collect();
                gy = problem.evaluate(&y).1;
                momentum = true;
            } else {
                y = x.clone();
                gy = gx.clone();
                momentum = false;
            }
        } else {
            theta = T::one();
            y = x.clone();
            gy = gx.clone();
            momentum = false;
        }
        history.push(fx);
    }

    let normal_interior = problem.form.normal_from_gradient(
        &gx.iter().map(|&g| g * weight).collect::<Vec<_>>(),
    );
    let u = problem.form.extend(&x);
    let mut trace = vec![T::zero(); grid.lateral_len()];
    let mut normal = vec![T::zero(); grid.lateral_len()];
    for (k, &l) in grid.interior_lateral().iter().enumerate() {
        trace[l] = x[k];
        normal[l] = normal_interior[k];
    }
    Ok(Solution {
        grid: *grid,
        u,
        trace,
        normal,
        energy: fx,
        kkt_residual: res,
        iterations,
        energy_history: history,
        open_tol,
        step: tau,
        converged: res <= tol,
        boundary_max: data.max_abs(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub seeds: usize,
    pub max_pairwise_distance: f64,
    /// Whether the law satisfied the uniqueness hypotheses. When false the
    /// distance is informational only.
    pub within_hypotheses: bool,
}

/// Solves from `seeds` random initial traces and reports the largest
/// pairwise sup-distance between converged traces.
pub fn uniqueness_probe<T: Real, L: Density<T> + ?Sized>(
    grid: &StripGrid<T>,
    data: &BoundaryData<T>,
    law: &L,
    seeds: usize,
    opts: &SolverOptions,
    rng_seed: u64,
) -> Result<UniquenessReport> {
    let within = validate(law, grid.height, &ValidationOptions::default())?.passed();
    let bound = data.max_abs().to_f64_lossy();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut traces: Vec<Vec<T>> = Vec::with_capacity(seeds);
    for _ in 0..seeds {
        let t0: Vec<T> = (0..grid.trace_len())
            .map(|_| if bound > 0.0 { T::lit(rng.random_range(-bound..=bound)) } else { T::zero() })
            .collect();
        traces.push(solve_from(grid, data, law, opts, Some(&t0))?.trace);
    }
    let mut worst = 0.0f64;
    for a in 0..traces.len() {
        for b in a + 1..traces.len() {
            let d = traces[a]
                .iter()
                .zip(&traces[b])
                .fold(T::zero(), |m, (&p, &q)| m.max((p - q).abs()));
            worst = worst.max(d.to_f64_lossy());
        }
    }
    Ok(UniquenessReport { seeds, max_pairwise_distance: worst, within_hypotheses: within })
}
