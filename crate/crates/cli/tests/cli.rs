use std::process::Command;

use cohesive_cli::artifacts::{summary_json, write_bundle};
use cohesive_cli::pipeline::run_stages;
use cohesive_cli::sweep::{cells, sweep, sweep_csv};
use cohesive_cli::{run, shipped_scenarios_dir, Scenario, Status};

fn shipped(name: &str) -> Scenario {
    Scenario::load(shipped_scenarios_dir().join(format!("{name}.toml"))).unwrap()
}

#[test]
fn shipped_scenarios_parse_and_round_trip() {
    for name in ["zero", "bump-regular", "dipole", "no-crack"] {
        let s = shipped(name);
        assert_eq!(s.name, name);
        let again = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
        assert_eq!(again, s);
        s.strip_grid().unwrap();
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = std::fs::read_to_string(shipped_scenarios_dir().join("zero.toml")).unwrap();
    assert!(Scenario::from_toml(&format!("{text}\n[extra]\nfoo = 1\n")).is_err());
    let typo = text.replace("half_width", "halfwidth");
    assert!(Scenario::from_toml(&typo).is_err());
}

#[test]
fn zero_data_passes_every_verdict() {
    let bundle = run(&shipped("zero")).unwrap();
    let s = &bundle.summary;
    assert!(s.failed.is_none());
    assert!(s.verdicts.iter().all(|v| v.status != Status::Fail), "{:?}", s.verdicts);
    assert!(bundle.solution.as_ref().unwrap().trace.iter().all(|&t| t == 0.0));
    assert!(s.centers.is_empty());
}

#[test]
fn summary_is_deterministic() {
    let scenario = shipped("dipole");
    let a = summary_json(&run(&scenario).unwrap().summary).unwrap();
    let b = summary_json(&run(&scenario).unwrap().summary).unwrap();
    assert_eq!(a, b);
}

#[test]
fn solve_stage_skips_center_analysis() {
    let bundle = run_stages(&shipped("dipole"), false).unwrap();
    assert!(bundle.summary.centers.is_empty());
    assert!(bundle.summary.verdicts.iter().any(|v| v.property == "phase_gap"));
    assert!(!bundle.summary.verdicts.iter().any(|v| v.property == "classification"));
}

#[test]
fn overrides_follow_dotted_keys() {
    let base = shipped("bump-regular");
    let s = base.with_override("law.kappa", &toml::Value::Float(0.7)).unwrap();
    assert_eq!(s.law, cohesive_core::CohesiveLaw::Exponential { kappa: 0.7, lambda: 0.5 });
    let s = base.with_override("grid.mx", &toml::Value::Integer(65)).unwrap();
    assert_eq!(s.grid.mx, 65);
    assert!(base.with_override("grid.nope", &toml::Value::Integer(1)).is_err());
    assert!(base.with_override("grid.mx", &toml::Value::String("big".into())).is_err());
    assert!(base.with_override("", &toml::Value::Integer(1)).is_err());
}

#[test]
fn sweep_cells_form_the_cartesian_product() {
    let mut base = shipped("zero");
    assert_eq!(cells(&base).unwrap().len(), 1);
    base.sweep.insert("law.kappa".into(), vec![0.3.into(), 0.5.into()]);
    base.sweep.insert("grid.my".into(), vec![9.into(), 17.into(), 33.into()]);
    let all = cells(&base).unwrap();
    assert_eq!(all.len(), 6);
    assert!(all.iter().all(|(_, s)| s.sweep.is_empty()));
    // keys iterate in order, the last one fastest
    assert_eq!(all[0].0[0].0, "grid.my");
    assert_eq!(all[1].1.grid.my, 9);
    assert_eq!(all[2].1.grid.my, 17);
}

#[test]
fn support_radius_is_insensitive_to_the_lateral_extent() {
    let mut base = shipped("dipole");
    let grid = |half_width: f64, mx: i64| {
        let mut t = toml::Table::new();
        t.insert("n".into(), 1.into());
        t.insert("half_width".into(), half_width.into());
        t.insert("height".into(), 1.0.into());
        t.insert("mx".into(), mx.into());
        t.insert("my".into(), 33.into());
        toml::Value::Table(t)
    };
    base.sweep.clear();
    base.sweep.insert("grid".into(), vec![grid(4.0, 257), grid(8.0, 513)]);
    let dir = tempfile::tempdir().unwrap();
    let outcomes = sweep(&base, Some(2), Some(dir.path())).unwrap();
    assert_eq!(outcomes.len(), 2);
    let radii: Vec<f64> = outcomes
        .iter()
        .map(|c| c.summary.as_ref().unwrap().geometry.as_ref().unwrap().support_radius)
        .collect();
    let hx = outcomes[0].summary.as_ref().unwrap().hx;
    assert!((radii[0] - radii[1]).abs() <= 2.0 * hx, "{radii:?}");
    let csv = sweep_csv(&outcomes);
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn bundle_holds_the_artifacts() {
    let bundle = run(&shipped("dipole")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write_bundle(&bundle, dir.path()).unwrap();
    for f in ["scenario.toml", "summary.json", "verdicts.csv", "validation.json", "u.bin", "trace.csv", "geometry.json"] {
        assert!(path.join(f).is_file(), "missing {f}");
    }
    let back = Scenario::load(path.join("scenario.toml")).unwrap();
    assert_eq!(back, bundle.scenario);
    let verdicts = std::fs::read_to_string(path.join("verdicts.csv")).unwrap();
    assert_eq!(verdicts.lines().count(), bundle.summary.verdicts.len() + 1);
}

fn cohesive() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cohesive"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let zero = shipped_scenarios_dir().join("zero.toml");

    let out = cohesive().arg("--config").arg(&zero).arg("validate-law").output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let out = cohesive().arg("--config").arg(&zero).arg("--out").arg(dir.path()).arg("analyze").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("max_principle"));

    let out = cohesive().arg("--out").arg(dir.path()).arg("report").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("zero ["));

    let out = cohesive().arg("analyze").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let text = std::fs::read_to_string(&zero).unwrap().replace("kappa = 0.5\nlambda = 0.5", "kappa = 5.0\nlambda = 5.0");
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, text).unwrap();
    let out = cohesive().arg("--config").arg(&bad).arg("validate-law").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = cohesive().arg("--config").arg(&bad).arg("--out").arg(dir.path()).arg("solve").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = cohesive()
        .args(["--force-outside-hypotheses", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .arg("solve")
        .output()
        .unwrap();
    // the forced run completes but still reports the violated hypothesis
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.contains("law_hypotheses") && l.contains("fail")));
}
