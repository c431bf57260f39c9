//! solve -> extension -> frequency -> blow-up -> free boundary, and the
//! verdict table.

use cohesive_core::blowup::{blowup_fit, BlowupOptions};
use cohesive_core::extension::build_v_window;
use cohesive_core::free_boundary::{
    derivative_strip_bounds, extract, graph_extract, lipschitz_bound, lipschitz_profile, phase_transitions,
    semiconvexity_profile, vertical_derivative, GraphFrame, GraphReport,
};
use cohesive_core::frequency::{check_identities, classify_point, geometric_radii, phi_profile};
use cohesive_core::law::{validate, Density, ValidationOptions};
use cohesive_core::solver::{solve_unchecked, uniqueness_probe};
use cohesive_core::{
    BlowupFit, BoundaryData, Classification, CrackGeometry, FrequencyOptions, FrequencyProfile, Solution, StripGrid,
    ValidationReport,
};
use serde::Serialize;

use crate::scenario::{Centers, Scenario};
use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Na,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Na => "na",
        }
    }
}

/// One row of the verdict table.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub property: &'static str,
    pub status: Status,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Verdict {
    fn check(property: &'static str, measured: f64, threshold: f64, ok: bool, detail: String) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { property, status, measured: Some(measured), threshold: Some(threshold), detail }
    }

    fn na(property: &'static str, detail: impl Into<String>) -> Self {
        Self { property, status: Status::Na, measured: None, threshold: None, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverSummary {
    pub converged: bool,
    pub iterations: usize,
    pub energy: f64,
    pub kkt_residual: f64,
    pub step: f64,
    pub open_tol: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometrySummary {
    pub open_nodes: usize,
    pub support_radius: f64,
    pub phase_gap: Option<f64>,
    pub positive_components: usize,
    pub negative_components: usize,
    pub free_boundary_points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundSummary {
    pub max_u: f64,
    pub max_u_a: f64,
    pub normal_excess: f64,
    pub strip_c0: f64,
    pub strip_c1: f64,
    pub strip_margin: f64,
    pub lipschitz_max: f64,
    pub lipschitz_bound: f64,
    pub semiconvexity_max: f64,
    pub semiconvexity_bound: f64,
    pub semiconcavity_max: f64,
    pub semiconcavity_bound: f64,
    pub fd_tol_strip: f64,
    pub fd_tol_lipschitz: f64,
    pub fd_tol_semiconvexity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentitySummary {
    pub r: f64,
    pub dirichlet_abs: f64,
    pub rellich_abs: f64,
    pub f_prime_abs: f64,
    pub worst_relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CenterSummary {
    pub center: [f64; 2],
    /// `1` for the positive phase, `-1` for the negative (analysed after `u -> -u`).
    pub phase: i8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub phi0: Option<f64>,
    pub c_fit: Option<f64>,
    pub classification: Option<Classification>,
    pub mu: Option<f64>,
    pub superquadratic: Option<bool>,
    pub low_confidence: Option<bool>,
    pub normalization: Option<f64>,
    pub profile_distance: Option<f64>,
    pub orientation: Option<f64>,
    pub identities: Option<IdentitySummary>,
    #[serde(skip)]
    pub profile: Option<FrequencyProfile>,
    #[serde(skip)]
    pub blowup: Option<BlowupFit>,
    #[serde(skip)]
    pub graph: Option<GraphReport<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessSummary {
    pub seeds: usize,
    pub max_pairwise_distance: f64,
    pub within_hypotheses: bool,
}

/// Everything `run` computes. `summary` is what lands in `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub hash: String,
    pub failed: Option<String>,
    pub hx: f64,
    pub hy: f64,
    pub law_valid: bool,
    pub solver: Option<SolverSummary>,
    pub geometry: Option<GeometrySummary>,
    pub bounds: Option<BoundSummary>,
    pub centers: Vec<CenterSummary>,
    pub uniqueness: Option<UniquenessSummary>,
    pub verdicts: Vec<Verdict>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.failed.is_none() && self.verdicts.iter().all(|v| v.status != Status::Fail)
    }
}

pub struct RunBundle {
    pub scenario: Scenario,
    pub hash: String,
    pub validation: ValidationReport,
    pub solution: Option<Solution>,
    pub geometry: Option<CrackGeometry>,
    pub summary: Summary,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Estimates {
    strip: f64,
    lipschitz: f64,
    semiconvexity: f64,
    semiconcavity: f64,
}

/// `value / bound`, with a zero bound counting as met only by a zero value.
fn ratio(value: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        value / bound
    } else if value > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn estimates(sol: &Solution, offsets: usize, data: &BoundaryData, law: &cohesive_core::CohesiveLaw) -> Estimates {
    let dy = vertical_derivative(sol);
    let strip = dy.iter().map(|row| max_abs(row)).fold(0.0, f64::max);
    let sc = semiconvexity_profile(sol, data.lipschitz, data.semiconvexity, data.semiconcavity, law, offsets);
    Estimates {
        strip,
        lipschitz: lipschitz_profile(sol).into_iter().fold(0.0, f64::max),
        semiconvexity: sc.d_est.into_iter().fold(0.0, f64::max),
        semiconcavity: sc.c_est.into_iter().fold(0.0, f64::max),
    }
}

/// Runs the whole pipeline. Errors are reserved for unusable input; a solver
/// that stops short yields a bundle with `summary.failed` set.
pub fn run(scenario: &Scenario) -> Result<RunBundle> {
    run_stages(scenario, true)
}

/// With `analyse = false` the run stops after the solution-level bounds:
/// no frequency, blow-up, identity or uniqueness work.
pub fn run_stages(scenario: &Scenario, analyse: bool) -> Result<RunBundle> {
    let hash = crate::artifacts::config_hash(scenario)?;
    let grid = scenario.strip_grid()?;
    let law = scenario.law;
    let validation = validate(&law, grid.height, &ValidationOptions::default())?;
    let law_valid = validation.passed();
    if !law_valid && !scenario.force_outside_hypotheses {
        let failed: Vec<&str> = validation.failures().iter().map(|a| a.label()).collect();
        return Err(CliError::Hypotheses(format!(
            "law fails {} for A = {}; pass --force-outside-hypotheses to run anyway",
            failed.join(", "),
            grid.height
        )));
    }
    let data = scenario.boundary_data(&grid)?;
    let opts = scenario.solver_options();
    let mut summary = Summary {
        scenario: scenario.name.clone(),
        hash: hash.clone(),
        failed: None,
        hx: grid.hx(),
        hy: grid.hy(),
        law_valid,
        solver: None,
        geometry: None,
        bounds: None,
        centers: vec![],
        uniqueness: None,
        verdicts: vec![],
    };
    let mut verdicts = Vec::new();
    verdicts.push(if law_valid {
        Verdict::check("law_hypotheses", 1.0, 1.0, true, "all axioms hold".into())
    } else {
        let failed: Vec<&str> = validation.failures().iter().map(|a| a.label()).collect();
        Verdict::check("law_hypotheses", 0.0, 1.0, false, format!("forced outside hypotheses: {}", failed.join(", ")))
    });

    let sol = solve_unchecked(&grid, &data, &law, &opts, None)?;
    summary.solver = Some(SolverSummary {
        converged: sol.converged,
        iterations: sol.iterations,
        energy: sol.energy,
        kkt_residual: sol.kkt_residual,
        step: sol.step,
        open_tol: sol.open_tol,
    });
    verdicts.push(Verdict::check(
        "kkt",
        sol.kkt_residual,
        opts.tol,
        sol.converged,
        format!("{} iterations", sol.iterations),
    ));
    let geometry = extract(&sol, sol.open_tol);
    summary.geometry = Some(GeometrySummary {
        open_nodes: geometry.open_set.len(),
        support_radius: geometry.support_radius,
        phase_gap: geometry.phase_gap,
        positive_components: geometry.positive_components,
        negative_components: geometry.negative_components,
        free_boundary_points: geometry.fb_points.len(),
    });
    if !sol.converged {
        summary.failed = Some(format!(
            "solver stopped after {} iterations with KKT residual {:e}",
            sol.iterations, sol.kkt_residual
        ));
        summary.verdicts = verdicts;
        return Ok(RunBundle { scenario: scenario.clone(), hash, validation, solution: Some(sol), geometry: Some(geometry), summary });
    }

    bound_verdicts(scenario, &grid, &data, &sol, &geometry, law_valid, &mut summary, &mut verdicts)?;
    if !analyse {
        summary.verdicts = verdicts;
        return Ok(RunBundle { scenario: scenario.clone(), hash, validation, solution: Some(sol), geometry: Some(geometry), summary });
    }
    summary.centers = analyse_centers(scenario, &sol)?;
    center_verdicts(scenario, &grid, &summary.centers, &mut verdicts);

    if scenario.analysis.uniqueness_seeds > 0 {
        let rep = uniqueness_probe(&grid, &data, &law, scenario.analysis.uniqueness_seeds, &opts, scenario.seed)?;
        let limit = 10.0 * opts.tol;
        verdicts.push(if rep.within_hypotheses {
            Verdict::check(
                "uniqueness",
                rep.max_pairwise_distance,
                limit,
                rep.max_pairwise_distance <= limit,
                format!("{} seeds", rep.seeds),
            )
        } else {
            Verdict::na("uniqueness", format!("outside hypotheses, max distance {:e}", rep.max_pairwise_distance))
        });
        summary.uniqueness = Some(UniquenessSummary {
            seeds: rep.seeds,
            max_pairwise_distance: rep.max_pairwise_distance,
            within_hypotheses: rep.within_hypotheses,
        });
    } else {
        verdicts.push(Verdict::na("uniqueness", "not requested"));
    }

    summary.verdicts = verdicts;
    Ok(RunBundle { scenario: scenario.clone(), hash, validation, solution: Some(sol), geometry: Some(geometry), summary })
}

#[allow(clippy::too_many_arguments)]
fn bound_verdicts(
    scenario: &Scenario,
    grid: &StripGrid,
    data: &BoundaryData,
    sol: &Solution,
    geometry: &CrackGeometry,
    law_valid: bool,
    summary: &mut Summary,
    verdicts: &mut Vec<Verdict>,
) -> Result<()> {
    let law = &scenario.law;
    let an = &scenario.analysis;
    let opts = scenario.solver_options();

    let max_u = sol.u.max_abs();
    let max_u_a = data.max_abs();
    let scale = max_u_a.max(1.0);
    let mp_limit = max_u_a + 1e-10 * scale;
    verdicts.push(Verdict::check("max_principle", max_u, mp_limit, max_u <= mp_limit, String::new()));

    let normal_excess = grid
        .interior_lateral()
        .iter()
        .map(|&l| (sol.normal[l].abs() - law.g1(2.0 * sol.trace[l].abs())).max(0.0))
        .fold(0.0, f64::max);
    verdicts.push(Verdict::check(
        "normal_bound",
        normal_excess,
        opts.tol,
        normal_excess <= opts.tol,
        "|d_y u| - g'(2|u|) on y = 0".into(),
    ));
    let here = estimates(sol, an.semiconvexity_offsets, data, law);
    let floor = an.fd_tol_floor;
    let (fd_strip, fd_lip, fd_semi) = if an.calibrate_fd {
        let fine_grid = grid.refined();
        let fine_data = scenario.boundary_data(&fine_grid)?;
        let fine = solve_unchecked(&fine_grid, &fine_data, law, &opts, None)?;
        if !fine.converged {
            return Err(CliError::Config("refined solve for fd_tol calibration did not converge".into()));
        }
        // one more halving at twice the offsets keeps the same physical stencils
        let fe = estimates(&fine, 2 * an.semiconvexity_offsets, &fine_data, law);
        (
            floor.max(2.0 * (here.strip - fe.strip).abs()),
            floor.max(2.0 * (here.lipschitz - fe.lipschitz).abs()),
            floor.max(2.0 * (here.semiconvexity - fe.semiconvexity).abs()).max(2.0 * (here.semiconcavity - fe.semiconcavity).abs()),
        )
    } else {
        (floor, floor, floor)
    };

    let strip = derivative_strip_bounds(sol, law, fd_strip);
    verdicts.push(Verdict::check(
        "strip_bound",
        -strip.margin,
        0.0,
        strip.holds,
        format!("C1 = {:.6e}, violating rows {:?}", strip.c1, strip.violating_rows),
    ));

    let l_bound = lipschitz_bound(data.lipschitz, grid.height, law);
    let sc = semiconvexity_profile(sol, data.lipschitz, data.semiconvexity, data.semiconcavity, law, an.semiconvexity_offsets);
    if law_valid {
        verdicts.push(Verdict::check(
            "lipschitz",
            here.lipschitz,
            l_bound + fd_lip,
            here.lipschitz <= l_bound + fd_lip,
            format!("L_A = {:.6e}", data.lipschitz),
        ));
        let ok = here.semiconvexity <= sc.d_bar + fd_semi && here.semiconcavity <= sc.c_bar + fd_semi;
        verdicts.push(Verdict::check(
            "semiconvexity",
            ratio(here.semiconvexity, sc.d_bar + fd_semi).max(ratio(here.semiconcavity, sc.c_bar + fd_semi)),
            1.0,
            ok,
            format!(
                "D_est {:.6e} <= {:.6e}, C_est {:.6e} <= {:.6e}",
                here.semiconvexity, sc.d_bar, here.semiconcavity, sc.c_bar
            ),
        ));
    } else {
        verdicts.push(Verdict::na("lipschitz", "bound needs 2 A sup|g''| < 1"));
        verdicts.push(Verdict::na("semiconvexity", "bound needs 2 A sup|g''| < 1"));
    }

    verdicts.push(match geometry.phase_gap {
        Some(gap) => {
            let limit = 2.0 * grid.hx();
            Verdict::check(
                "phase_gap",
                gap,
                limit,
                gap >= limit,
                format!("{:.1} cells between the phases", gap / grid.hx()),
            )
        }
        None => Verdict::na("phase_gap", "only one phase present"),
    });

    summary.bounds = Some(BoundSummary {
        max_u,
        max_u_a,
        normal_excess,
        strip_c0: strip.c0,
        strip_c1: strip.c1,
        strip_margin: strip.margin,
        lipschitz_max: here.lipschitz,
        lipschitz_bound: l_bound,
        semiconvexity_max: here.semiconvexity,
        semiconvexity_bound: sc.d_bar,
        semiconcavity_max: here.semiconcavity,
        semiconcavity_bound: sc.c_bar,
        fd_tol_strip: fd_strip,
        fd_tol_lipschitz: fd_lip,
        fd_tol_semiconvexity: fd_semi,
    });
    Ok(())
}

/// Largest ball radius usable about `center` (mirrors `geometric_radii`).
fn largest_radius(scenario: &Scenario, grid: &StripGrid, center: [f64; 2]) -> f64 {
    if let Some(r) = scenario.analysis.r_max {
        return r;
    }
    let mut room = (grid.half_width - center[0].abs()).min(grid.height);
    if grid.n == 2 {
        room = room.min(grid.half_width - center[1].abs());
    }
    room / 2.0 * 0.999
}

/// Deterministic pick of at most `k` entries spread evenly through `items`.
fn spread<T: Clone>(items: &[T], k: usize) -> Vec<T> {
    if items.len() <= k {
        return items.to_vec();
    }
    (0..k).map(|i| items[i * items.len() / k].clone()).collect()
}

fn analyse_centers(scenario: &Scenario, sol: &Solution) -> Result<Vec<CenterSummary>> {
    let grid = sol.grid;
    let an = &scenario.analysis;
    let negated = sol.negated();
    let mut picks: Vec<([f64; 2], i8)> = Vec::new();
    match &an.centers {
        Centers::Auto(_) => {
            for (phase, s) in [(1i8, sol), (-1i8, &negated)] {
                let mut pts: Vec<[f64; 2]> = phase_transitions(&grid, &s.trace, s.open_tol)
                    .into_iter()
                    .filter(|p| p.sign > 0)
                    .map(|p| p.position)
                    .collect();
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts.dedup();
                picks.extend(pts.into_iter().map(|p| (p, phase)));
            }
            picks = spread(&picks, an.max_centers);
        }
        Centers::Explicit(list) => {
            for &c in list {
                // the phase is the sign of the nearest open node
                let nearest = (0..grid.lateral_len())
                    .filter(|&l| sol.trace[l].abs() > sol.open_tol)
                    .min_by(|&a, &b| {
                        let d = |l: usize| {
                            let p = grid.lateral_point(l);
                            (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)
                        };
                        d(a).partial_cmp(&d(b)).unwrap()
                    });
                let phase = nearest.map_or(1, |l| if sol.trace[l] < 0.0 { -1 } else { 1 });
                picks.push((c, phase));
            }
        }
    }
    let fopts = FrequencyOptions { mono_tol: an.mono_tol, class_tol: an.class_tol, fit_points: an.fit_points };
    let bopts = BlowupOptions { growth_tol: an.growth_tol, fit_tol: an.fit_tol };
    let gp0 = scenario.law.gp0();
    let mut out = Vec::new();
    for (center, phase) in picks {
        let s = if phase > 0 { sol } else { &negated };
        let mut cs = CenterSummary {
            center,
            phase,
            skipped: None,
            phi0: None,
            c_fit: None,
            classification: None,
            mu: None,
            superquadratic: None,
            low_confidence: None,
            normalization: None,
            profile_distance: None,
            orientation: None,
            identities: None,
            profile: None,
            blowup: None,
            graph: None,
        };
        let r_max = largest_radius(scenario, &grid, center);
        let field = match build_v_window(s, gp0, Some((center, r_max))) {
            Ok(f) => f,
            Err(e) => {
                cs.skipped = Some(e.to_string());
                out.push(cs);
                continue;
            }
        };
        let radii = geometric_radii(&field, center, Some(r_max), an.radii_count);
        if radii.len() < 3 {
            cs.skipped = Some(format!("only {} radii above 4 hx", radii.len()));
            out.push(cs);
            continue;
        }
        let profile = phi_profile(&field, center, &radii, &fopts)?;
        let class = classify_point(&profile, an.class_tol);
        cs.phi0 = Some(profile.phi0);
        cs.c_fit = profile.c_fit;
        cs.classification = Some(class);

        let fit_radii: Vec<f64> = profile
            .radii
            .iter()
            .zip(&profile.truncated)
            .filter(|(_, &t)| !t)
            .map(|(&r, _)| r)
            .collect();
        if fit_radii.len() >= 6 && class != Classification::NotApplicable {
            let fit = blowup_fit(&field, center, &fit_radii, &bopts)?;
            cs.mu = Some(fit.fit.mu);
            cs.superquadratic = Some(fit.fit.superquadratic);
            cs.low_confidence = Some(fit.fit.low_confidence);
            cs.normalization = Some(fit.normalization);
            if let Some(al) = fit.alignment {
                cs.profile_distance = Some(al.distance);
                cs.orientation = Some(al.angle);
                if grid.n == 2 {
                    let direction = [al.angle.cos(), al.angle.sin()];
                    let frame = GraphFrame { center, direction, half_window: r_max / 2.0 };
                    cs.graph = Some(graph_extract(s, &frame, &[0.1, 0.25, 0.5, 0.75, 1.0]));
                }
            }
            cs.blowup = Some(fit);
        }

        let r_id = an.identity_radius.unwrap_or(an.identity_cells * grid.hx());
        match check_identities(&field, &scenario.law, center, r_id) {
            Ok(id) => {
                cs.identities = Some(IdentitySummary {
                    r: id.r,
                    dirichlet_abs: id.dirichlet.abs_mismatch,
                    rellich_abs: id.rellich.abs_mismatch,
                    f_prime_abs: id.f_prime.abs_mismatch,
                    worst_relative: id.worst_relative(),
                });
            }
            Err(e) => cs.skipped = Some(format!("identities: {e}")),
        }
        cs.profile = Some(profile);
        out.push(cs);
    }
    Ok(out)
}

fn center_verdicts(scenario: &Scenario, grid: &StripGrid, centers: &[CenterSummary], verdicts: &mut Vec<Verdict>) {
    let an = &scenario.analysis;
    let n = grid.n as f64;
    let analysed: Vec<&CenterSummary> = centers.iter().filter(|c| c.phi0.is_some()).collect();
    if analysed.is_empty() {
        for p in ["phi_monotonicity", "classification", "mu_fit", "blowup_profile", "identities"] {
            verdicts.push(Verdict::na(p, "no free-boundary point analysed"));
        }
        return;
    }

    let worst_c = analysed.iter().map(|c| c.c_fit.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    verdicts.push(Verdict::check(
        "phi_monotonicity",
        worst_c,
        f64::INFINITY,
        worst_c.is_finite(),
        "largest fitted C over centers".into(),
    ));

    let unclassified = analysed.iter().filter(|c| c.classification == Some(Classification::NotApplicable)).count();
    verdicts.push(Verdict::check(
        "classification",
        unclassified as f64,
        0.0,
        unclassified == 0,
        format!(
            "Phi0 = {:?}",
            analysed.iter().map(|c| c.phi0.unwrap()).collect::<Vec<_>>()
        ),
    ));

    let regular: Vec<&&CenterSummary> = analysed
        .iter()
        .filter(|c| c.classification == Some(Classification::Regular3Half))
        .collect();
    let fitted: Vec<&&&CenterSummary> = regular.iter().filter(|c| c.mu.is_some()).collect();
    if fitted.is_empty() {
        verdicts.push(Verdict::na("mu_fit", "no regular point with a blow-up fit"));
        verdicts.push(Verdict::na("blowup_profile", "no regular point with a blow-up fit"));
    } else {
        let [lo, hi] = an.mu_range;
        let mut worst_gap = 0.0f64;
        let mut ok = true;
        for c in &fitted {
            let mu = c.mu.unwrap();
            let gap = (2.0 * mu + n - c.phi0.unwrap()).abs();
            worst_gap = worst_gap.max(gap);
            ok &= mu >= lo && mu <= hi && gap <= an.consistency_tol;
        }
        verdicts.push(Verdict::check(
            "mu_fit",
            worst_gap,
            an.consistency_tol,
            ok,
            format!("mu = {:?}", fitted.iter().map(|c| c.mu.unwrap()).collect::<Vec<_>>()),
        ));
        let worst_d = fitted.iter().map(|c| c.profile_distance.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        let sq = fitted.iter().all(|c| c.superquadratic == Some(true));
        verdicts.push(Verdict::check(
            "blowup_profile",
            worst_d,
            an.profile_tol,
            sq && worst_d <= an.profile_tol,
            format!("superquadratic at every regular point: {sq}"),
        ));
    }

    let ids: Vec<f64> = analysed.iter().filter_map(|c| c.identities.as_ref().map(|i| i.worst_relative)).collect();
    if ids.is_empty() {
        verdicts.push(Verdict::na("identities", "no center had room for the identity ball"));
    } else {
        let worst = ids.iter().copied().fold(0.0, f64::max);
        verdicts.push(Verdict::check("identities", worst, an.identity_tol, worst <= an.identity_tol, String::new()));
    }
}
