//! The twelve acceptance criteria, one PASS/FAIL line each. Exits nonzero
//! if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cohesive_cli::artifacts::summary_json;
use cohesive_cli::{run, shipped_scenarios_dir, RunBundle, Scenario, Status};
use cohesive_core::boundary::{BoundaryOptions, BoundaryProfile};
use cohesive_core::dtn::dirichlet_to_neumann;
use cohesive_core::free_boundary::derivative_strip_bounds;
use cohesive_core::frequency::{check_identities, classify_point, geometric_radii, phi_profile};
use cohesive_core::law::{scalar_prox, Density};
use cohesive_core::{
    solver, BoundaryData, Classification, CohesiveLaw, FrequencyOptions, ReflectedField, SolverOptions, StripGrid,
};
use cohesive_oracles::{brute_force_minimize, closed_form_fields, dense_schur, prox_scan, pure_dirichlet, RawGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn shipped(name: &str) -> Scenario {
    Scenario::load(shipped_scenarios_dir().join(format!("{name}.toml"))).expect("shipped scenario")
}

fn run_ok(s: &Scenario) -> std::result::Result<RunBundle, String> {
    let b = run(s).map_err(|e| format!("{}: {e}", s.name))?;
    match &b.summary.failed {
        Some(f) => Err(format!("{}: {f}", s.name)),
        None => Ok(b),
    }
}

fn verdict<'a>(b: &'a RunBundle, property: &str) -> &'a cohesive_cli::Verdict {
    b.summary.verdicts.iter().find(|v| v.property == property).expect("verdict present")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Random admissible law for strip height `a`: `2 a sup|g''| <= 0.9`.
fn random_law(rng: &mut ChaCha8Rng, a: f64) -> CohesiveLaw {
    let lambda = rng.random_range(0.2..3.0);
    let cap = 0.45 / a;
    if rng.random_bool(0.5) {
        CohesiveLaw::exponential(rng.random_range(0.05..1.0) * cap / (lambda * lambda), lambda)
    } else {
        CohesiveLaw::rational(rng.random_range(0.05..1.0) * cap / (2.0 * lambda), lambda)
    }
}

fn random_bump(rng: &mut ChaCha8Rng, grid: &StripGrid, amplitude: f64) -> BoundaryData {
    let l = grid.half_width;
    let profile = BoundaryProfile::Gaussian {
        center: [rng.random_range(-0.3 * l..0.3 * l), rng.random_range(-0.3 * l..0.3 * l)],
        width: rng.random_range(0.2..0.5) * l,
        amplitude,
    };
    let opts = BoundaryOptions { decay_tol: f64::INFINITY, ..BoundaryOptions::default() };
    BoundaryData::from_profile(grid, &profile, &opts).expect("boundary data")
}

fn prox_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let a = rng.random_range(0.2..2.0);
        let law = random_law(&mut rng, a);
        let tau = rng.random_range(0.01..0.99) / (4.0 * law.g2_sup());
        let w = rng.random_range(-3.0..3.0) * (1.0 + 2.0 * tau * law.gp0());
        let s = scalar_prox(&law, w, tau).map_err(|e| e.to_string())?;
        worst = worst.max((s - prox_scan(&law, w, tau, 2_000)).abs());
    }
    check(worst <= 1e-5, format!("max |ds| = {worst:.2e} over 200 cases"))
}

fn schur_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(1..=2);
        let grid = StripGrid::new(n, rng.random_range(0.5..3.0), rng.random_range(0.3..2.0), 9, 9).unwrap();
        let amplitude = rng.random_range(-2.0..2.0);
        let data = random_bump(&mut rng, &grid, amplitude);
        let form = dirichlet_to_neumann(&grid, &data).map_err(|e| e.to_string())?;
        let dense = dense_schur(&(&grid).into(), &data.top).map_err(|e| e.to_string())?;
        let t: Vec<f64> = (0..form.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (e_fast, e_dense) = (form.energy(&t), dense.energy(&t));
        worst = worst.max((e_fast - e_dense).abs() / e_dense.abs().max(f64::MIN_POSITIVE));
        let (g_fast, g_dense) = (form.gradient(&t), dense.gradient(&t));
        let diff = g_fast.iter().zip(&g_dense).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = g_dense.iter().map(|b| b * b).sum::<f64>().sqrt();
        worst = worst.max(diff / norm.max(f64::MIN_POSITIVE));
    }
    check(worst <= 1e-10, format!("worst relative mismatch {worst:.2e} (energy and gradient)"))
}

fn minimizer_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut opened = 0;
    for k in 0..10 {
        let (n, mx) = if k % 3 == 2 { (2, 4) } else { (1, 9) };
        let a = rng.random_range(0.3..1.5);
        let grid = StripGrid::new(n, rng.random_range(0.5..2.0), a, mx, rng.random_range(3..=9)).unwrap();
        let law = random_law(&mut rng, a);
        let amplitude = rng.random_range(-3.0..3.0);
        let data = random_bump(&mut rng, &grid, amplitude);
        let raw: RawGrid = (&grid).into();
        let bf = brute_force_minimize(&raw, &data.top, &law).map_err(|e| e.to_string())?;
        if !bf.within_hypotheses {
            return Err(format!("instance {k} left the hypotheses"));
        }
        let opts = SolverOptions { tol: 1e-10, ..SolverOptions::default() };
        let sol = solver::solve(&grid, &data, &law, &opts).map_err(|e| e.to_string())?;
        for (i, l) in grid.interior_lateral().into_iter().enumerate() {
            worst = worst.max((sol.trace[l] - bf.trace[i]).abs());
        }
        opened += usize::from(bf.trace.iter().any(|&v| v != 0.0));
    }
    check(worst <= 1e-6, format!("sup distance {worst:.2e}; {opened}/10 instances with an open crack"))
}

struct Runs {
    bump: RunBundle,
    dipole: [RunBundle; 2],
    no_crack: RunBundle,
    no_crack_dirichlet: Vec<f64>,
    zero: RunBundle,
}

/// Amplitude scale giving `max |d_y w(., 0)| = 0.9 g'(0+)` for the pure
/// Dirichlet extension `w` of the no-crack profile.
fn no_crack_scenario() -> std::result::Result<(Scenario, Vec<f64>), String> {
    let mut s = shipped("no-crack");
    let grid = s.strip_grid().map_err(|e| e.to_string())?;
    let raw: RawGrid = (&grid).into();
    let slope = |top: &[f64]| -> std::result::Result<(f64, Vec<f64>), String> {
        let w = pure_dirichlet(&raw, top, 1e-13).map_err(|e| e.to_string())?;
        let lat = grid.lateral_len();
        let hy = grid.hy();
        let m = (0..lat).map(|l| ((-3.0 * w[l] + 4.0 * w[lat + l] - w[2 * lat + l]) / (2.0 * hy)).abs()).fold(0.0, f64::max);
        Ok((m, w))
    };
    let data = s.boundary_data(&grid).map_err(|e| e.to_string())?;
    let (m, _) = slope(&data.top)?;
    let factor = 0.9 * s.law.gp0() / m;
    s.boundary = s.boundary.scaled(factor);
    let data = s.boundary_data(&grid).map_err(|e| e.to_string())?;
    let (m2, w) = slope(&data.top)?;
    if (m2 - 0.9 * s.law.gp0()).abs() > 1e-9 * m2 {
        return Err(format!("calibration drifted: {m2} vs {}", 0.9 * s.law.gp0()));
    }
    Ok((s, w))
}

fn compute_runs() -> std::result::Result<Runs, String> {
    let bump = run_ok(&shipped("bump-regular"))?;
    let dipole_base = shipped("dipole");
    let mut dipole_fine = dipole_base.clone();
    dipole_fine.grid.refine = 1;
    let dipole = [run_ok(&dipole_base)?, run_ok(&dipole_fine)?];
    let (nc, w) = no_crack_scenario()?;
    let no_crack = run_ok(&nc)?;
    let zero = run_ok(&shipped("zero"))?;
    Ok(Runs { bump, dipole, no_crack, no_crack_dirichlet: w, zero })
}

fn uniqueness(r: &Runs) -> Outcome {
    let u = r.bump.summary.uniqueness.as_ref().ok_or("bump-regular ran without the uniqueness probe")?;
    let tol = r.bump.scenario.solver.tol;
    check(
        u.seeds == 5 && u.within_hypotheses && u.max_pairwise_distance <= 10.0 * tol,
        format!("{} seeds, max pairwise distance {:.2e} (limit {:.1e})", u.seeds, u.max_pairwise_distance, 10.0 * tol),
    )
}

fn no_crack(r: &Runs) -> Outcome {
    let sol = r.no_crack.solution.as_ref().unwrap();
    let open = sol.trace.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let dist = sol.u.values.iter().zip(&r.no_crack_dirichlet).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    check(
        open <= sol.open_tol && dist <= 1e-8,
        format!("max |trace| {open:.2e} (open_tol {:.1e}), |u - w| {dist:.2e}", sol.open_tol),
    )
}

fn bound_suite(r: &Runs) -> Outcome {
    let runs = [&r.zero, &r.bump, &r.dipole[0], &r.dipole[1], &r.no_crack];
    let props = ["max_principle", "normal_bound", "strip_bound", "lipschitz", "semiconvexity"];
    let mut failures = Vec::new();
    for b in runs {
        for p in props {
            let v = verdict(b, p);
            if v.status != Status::Pass {
                failures.push(format!("{}:{p} {}", b.scenario.name, v.status.label()));
            }
        }
    }
    // a field with a bulge in the interior must trip the strip bound
    let mut bad = r.bump.solution.clone().unwrap();
    let (lat, a) = (bad.grid.lateral_len(), bad.grid.height);
    for j in 0..bad.grid.my {
        let y = bad.grid.y(j);
        for v in &mut bad.u.values[j * lat..(j + 1) * lat] {
            *v += 10.0 * y * (a - y);
        }
    }
    let caught = !derivative_strip_bounds(&bad, &r.bump.scenario.law, 0.0).holds;
    if !caught {
        failures.push("corrupted field passed the strip bound".into());
    }
    let fd = r.bump.summary.bounds.as_ref().map(|b| b.fd_tol_semiconvexity).unwrap_or(f64::NAN);
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} runs x {} bounds pass; corruption caught; bump fd_tol {fd:.2e}", runs.len(), props.len())
        } else {
            failures.join(", ")
        },
    )
}

fn signorini_frequency() -> Outcome {
    let sig = closed_form_fields(0.0)[0];
    let field = ReflectedField::from_fn(1, 1.0, 1.0, 513, 513, 0.0, |x, y| sig.eval(1, x, y)).map_err(|e| e.to_string())?;
    let radii = geometric_radii(&field, [0.0, 0.0], None, 12);
    let prof = phi_profile(&field, [0.0, 0.0], &radii, &FrequencyOptions::default()).map_err(|e| e.to_string())?;
    let worst = prof.phi.iter().fold(0.0f64, |m, p| m.max((p - 4.0).abs()));
    check(
        worst <= 0.02 && (prof.phi0 - 4.0).abs() <= 0.02,
        format!("{} radii, max |Phi - 4| = {worst:.2e}, Phi0 = {:.5}", radii.len(), prof.phi0),
    )
}

fn identity_at(s: &Scenario, r: f64) -> std::result::Result<f64, String> {
    let mut s = s.clone();
    s.analysis.identity_radius = Some(r);
    s.analysis.uniqueness_seeds = 0;
    s.analysis.max_centers = 1;
    let b = run_ok(&s)?;
    b.summary
        .centers
        .iter()
        .find_map(|c| c.identities.as_ref())
        .map(|i| i.worst_relative)
        .ok_or_else(|| format!("{}: no identity check ran", s.name))
}

fn identities() -> Outcome {
    let law = CohesiveLaw::linear(0.25);
    let mut worst = (0.0f64, "");
    for f in closed_form_fields(0.25) {
        let field =
            ReflectedField::from_fn(1, 1.0, 1.0, 257, 129, 0.25, |x, y| f.eval(1, x, y)).map_err(|e| e.to_string())?;
        let rel = check_identities(&field, &law, [0.0, 0.0], 0.4).map_err(|e| e.to_string())?.worst_relative();
        if rel > worst.0 {
            worst = (rel, f.name);
        }
    }
    let base = shipped("bump-regular");
    let mut coarse = base.clone();
    coarse.grid.mx = (base.grid.mx - 1) / 2 + 1;
    coarse.grid.my = (base.grid.my - 1) / 2 + 1;
    let r = 8.0 * coarse.strip_grid().map_err(|e| e.to_string())?.hx();
    let (m_coarse, m_fine) = (identity_at(&coarse, r)?, identity_at(&base, r)?);
    let ratio = m_coarse / m_fine;
    check(
        worst.0 <= 1e-3 && ratio >= 3.0,
        format!(
            "closed forms worst {:.2e} ({}); bump at r = {r}: {m_coarse:.2e} -> {m_fine:.2e}, ratio {ratio:.2}",
            worst.0, worst.1
        ),
    )
}

fn blowup(r: &Runs) -> Outcome {
    let n = r.bump.scenario.grid.n as f64;
    let fitted: Vec<_> = r.bump.summary.centers.iter().filter(|c| c.mu.is_some()).collect();
    if fitted.is_empty() {
        return Err("no fitted free-boundary point".into());
    }
    let mut lines = Vec::new();
    let mut ok = true;
    for c in fitted {
        let (mu, phi0) = (c.mu.unwrap(), c.phi0.unwrap_or(f64::NAN));
        let dist = c.profile_distance.unwrap_or(f64::INFINITY);
        let consistency = (2.0 * mu + n - phi0).abs();
        ok &= c.superquadratic == Some(true)
            && (1.4..=1.6).contains(&mu)
            && dist <= 0.1
            && consistency <= 0.1;
        lines.push(format!(
            "x = {:.4}: superquadratic {:?}, mu {mu:.4}, distance {dist:.3e}, |2mu+n-Phi0| {consistency:.2e}",
            c.center[0],
            c.superquadratic.unwrap_or(false)
        ));
    }
    check(ok, lines.join("; "))
}

fn phase_separation(r: &Runs) -> Outcome {
    let mut gaps = Vec::new();
    for b in &r.dipole {
        if !b.summary.law_valid {
            return Err("dipole law outside hypotheses".into());
        }
        let gap = b.summary.geometry.as_ref().and_then(|g| g.phase_gap).ok_or("dipole has a single phase")?;
        gaps.push((gap, b.summary.hx));
    }
    let change = (gaps[0].0 - gaps[1].0).abs() / gaps[0].0;
    let ok = gaps.iter().all(|&(g, hx)| g >= 4.0 * hx) && change <= 0.2;
    check(
        ok,
        format!(
            "gap {:.4} ({:.1} hx) at mx 257, {:.4} ({:.1} hx) at mx 513, change {:.1}%",
            gaps[0].0,
            gaps[0].0 / gaps[0].1,
            gaps[1].0,
            gaps[1].0 / gaps[1].1,
            100.0 * change
        ),
    )
}

fn degenerate_classification() -> Outcome {
    let h2 = closed_form_fields(0.0).into_iter().find(|f| f.name == "harmonic_2").unwrap();
    let field = ReflectedField::from_fn(1, 1.0, 1.0, 257, 129, 0.0, |x, y| h2.eval(1, x, y)).map_err(|e| e.to_string())?;
    let radii = geometric_radii(&field, [0.0, 0.0], None, 12);
    let prof = phi_profile(&field, [0.0, 0.0], &radii, &FrequencyOptions::default()).map_err(|e| e.to_string())?;
    let class = classify_point(&prof, 0.15);
    check(class == Classification::DegenerateGeNPlus4, format!("Phi0 = {:.4}, classified {class:?}", prof.phi0))
}

fn determinism(r: &Runs) -> Outcome {
    let again = run_ok(&r.bump.scenario)?;
    let (a, b) = (
        summary_json(&r.bump.summary).map_err(|e| e.to_string())?,
        summary_json(&again.summary).map_err(|e| e.to_string())?,
    );
    check(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let mut outcome = f();
        let elapsed = start.elapsed();
        if let (Some(limit), Ok(detail)) = (limit, &outcome) {
            if elapsed > limit {
                outcome = Err(format!("{detail}; took {elapsed:.1?}, limit {limit:?}"));
            }
        }
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(outcome.is_err());
        println!("{tag} {id:>2} {name}: {detail} [{elapsed:.1?}]");
    };

    report(1, "prox oracle equivalence", Some(Duration::from_secs(10)), &mut prox_equivalence);
    report(2, "Schur oracle equivalence", Some(Duration::from_secs(30)), &mut schur_equivalence);
    report(3, "global minimizer agreement", None, &mut minimizer_agreement);

    let start = Instant::now();
    let runs = compute_runs();
    println!("shared scenario runs (bump-regular, dipole x2, no-crack, zero) [{:.1?}]", start.elapsed());
    let shared = |f: fn(&Runs) -> Outcome| -> Box<dyn FnMut() -> Outcome + '_> {
        let runs = &runs;
        Box::new(move || runs.as_ref().map_err(Clone::clone).and_then(f))
    };
    report(4, "uniqueness", None, &mut *shared(uniqueness));
    report(5, "no-crack threshold", None, &mut *shared(no_crack));
    report(6, "bound suite", None, &mut *shared(bound_suite));
    report(7, "frequency on the 3/2 profile", Some(Duration::from_secs(60)), &mut signorini_frequency);
    report(8, "identity checks", None, &mut identities);
    report(9, "blow-up on bump-regular", None, &mut *shared(blowup));
    report(10, "phase separation", None, &mut *shared(phase_separation));
    report(11, "degenerate classification", None, &mut degenerate_classification);
    report(12, "determinism", None, &mut *shared(determinism));

    if failed == 0 {
        println!("all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 12 criteria fail");
        ExitCode::FAILURE
    }
}
