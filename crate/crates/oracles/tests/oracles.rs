use cohesive_core::boundary::{BoundaryOptions, BoundaryProfile};
use cohesive_core::dtn::dirichlet_to_neumann;
use cohesive_core::law::{scalar_prox, Density};
use cohesive_core::{frequency, solver, BoundaryData, CohesiveLaw, ReflectedField, SolverOptions, StripGrid};
use cohesive_oracles::*;

fn bump_data(grid: &StripGrid, amplitude: f64) -> BoundaryData {
    let profile = BoundaryProfile::Gaussian { center: [0.0, 0.0], width: 0.25, amplitude };
    let opts = BoundaryOptions { decay_tol: 1.0, ..BoundaryOptions::default() };
    BoundaryData::from_profile(grid, &profile, &opts).unwrap()
}

#[test]
fn zero_data_has_no_linear_part() {
    let raw = RawGrid { n: 1, half_width: 1.0, height: 1.0, mx: 5, my: 5 };
    let s = dense_schur(&raw, &[0.0; 5]).unwrap();
    assert!(s.linear.iter().all(|&v| v == 0.0));
    assert_eq!(s.constant, 0.0);
}

#[test]
fn degenerate_and_oversized_grids_are_refused() {
    let one_column = RawGrid { n: 1, half_width: 1.0, height: 1.0, mx: 1, my: 9 };
    assert!(matches!(dense_schur(&one_column, &[0.0]), Err(OracleError::Degenerate(_))));
    let big = RawGrid { n: 2, half_width: 1.0, height: 1.0, mx: 40, my: 40 };
    assert!(matches!(dense_schur(&big, &vec![0.0; 1600]), Err(OracleError::TooLarge { .. })));
}

#[test]
fn schur_matches_reduced_form() {
    for n in [1, 2] {
        let grid = StripGrid::new(n, 1.0, 0.7, 9, 9).unwrap();
        let data = bump_data(&grid, 0.8);
        let dense = dense_schur(&(&grid).into(), &data.top).unwrap();
        let form = dirichlet_to_neumann(&grid, &data).unwrap();
        let m = form.len();
        let t: Vec<f64> = (0..m).map(|k| ((k * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let e_fast = form.energy(&t);
        let e_dense = dense.energy(&t);
        assert!((e_fast - e_dense).abs() <= 1e-10 * e_dense.abs(), "n={n}: {e_fast} vs {e_dense}");
        let lin = form.linear();
        for k in 0..m {
            assert!((lin[k] - dense.linear[k]).abs() < 1e-10);
        }
        assert!((form.constant() - dense.constant).abs() < 1e-10 * dense.constant.abs().max(1.0));
    }
}

#[test]
fn pure_dirichlet_matches_the_extension_of_zero() {
    let grid = StripGrid::new(1, 2.0, 1.0, 33, 17).unwrap();
    let data = bump_data(&grid, 0.5);
    let u = pure_dirichlet(&(&grid).into(), &data.top, 1e-14).unwrap();
    let form = dirichlet_to_neumann(&grid, &data).unwrap();
    let field = form.extend(&vec![0.0; form.len()]);
    let worst = u.iter().zip(&field.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn prox_scan_matches_prox() {
    let law = CohesiveLaw::exponential(1.0, 1.0);
    let s = scalar_prox(&law, 1.0, 0.1).unwrap();
    let r = prox_scan(&law, 1.0, 0.1, 1_000);
    assert!((s - r).abs() < 1e-5, "{s} vs {r}");
    assert_eq!(prox_scan(&law, 0.15, 0.1, 1_000), 0.0);
}

#[test]
fn brute_force_agrees_with_solver_and_is_odd() {
    let law = CohesiveLaw::exponential(0.5, 1.0);
    let grid = StripGrid::new(1, 1.0, 0.5, 7, 5).unwrap();
    let data = bump_data(&grid, 1.0);
    let raw = (&grid).into();
    let bf = brute_force_minimize(&raw, &data.top, &law).unwrap();
    assert!(bf.within_hypotheses);
    assert!(bf.stationarity < 1e-8, "{}", bf.stationarity);
    assert!(bf.trace.iter().any(|&v| v != 0.0));
    let opts = SolverOptions { tol: 1e-11, ..SolverOptions::default() };
    let sol = solver::solve(&grid, &data, &law, &opts).unwrap();
    for (k, &v) in bf.trace.iter().enumerate() {
        assert!((sol.trace[k + 1] - v).abs() < 1e-6, "node {k}: {} vs {v}", sol.trace[k + 1]);
    }
    let flipped: Vec<f64> = data.top.iter().map(|v| -v).collect();
    let neg = brute_force_minimize(&raw, &flipped, &law).unwrap();
    for (a, b) in bf.trace.iter().zip(&neg.trace) {
        assert!((a + b).abs() < 1e-9);
    }
    let zero = brute_force_minimize(&raw, &[0.0; 7], &law).unwrap();
    assert!(zero.trace.iter().all(|&v| v == 0.0));
}

#[test]
fn brute_force_flags_laws_outside_hypotheses() {
    let law = CohesiveLaw::exponential(2.0, 2.0);
    let raw = RawGrid { n: 1, half_width: 1.0, height: 1.0, mx: 5, my: 5 };
    let bf = brute_force_minimize(&raw, &[0.0, 0.5, 1.0, 0.5, 0.0], &law).unwrap();
    assert!(!bf.within_hypotheses);
    assert!(2.0 * law.g2_sup() > 1.0);
}

#[test]
fn closed_forms_are_tagged_and_homogeneous() {
    let fields = closed_form_fields(0.25);
    let names: Vec<_> = fields.iter().map(|f| f.name).collect();
    assert_eq!(names, ["signorini_3half", "harmonic_1", "harmonic_2", "harmonic_3", "harmonic_4", "abs_y"]);
    for f in &fields {
        for n in [1, 2] {
            let r = 0.37;
            let ratio = f.sphere_mass(n, r, 512) / f.sphere_mass(n, 1.0, 512);
            let expect = r.powf(f.phi(n));
            assert!((ratio / expect - 1.0).abs() < 1e-9, "{} n={n}: {ratio} vs {expect}", f.name);
        }
    }
    assert_eq!(fields[0].phi(1), 4.0);
    assert_eq!(fields[2].phi(1), 5.0);
    assert_eq!(fields[5].mu, 1.0);
    // |y| on the unit circle: pi r^3 gp0^2
    let m = fields[5].sphere_mass(1, 1.0, 4096);
    assert!((m - std::f64::consts::PI * 0.0625).abs() < 1e-10);
}

#[test]
fn sphere_mass_matches_interpolated_quadrature() {
    for f in closed_form_fields(0.25) {
        let field = ReflectedField::from_fn(1, 1.0, 1.0, 257, 129, 0.0, |x, y| f.eval(1, x, y)).unwrap();
        let got = frequency::f_of_r(&field, [0.0, 0.0], 0.4).unwrap();
        let want = f.sphere_mass(1, 0.4, 4096);
        assert!((got / want - 1.0).abs() < 1e-4, "{}: {got} vs {want}", f.name);
    }
}
