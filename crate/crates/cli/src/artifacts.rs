//! Output bundles: one directory per scenario, named by the scenario and a
//! hash of its resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cohesive_core::io::{write_binary, write_csv};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::pipeline::{RunBundle, Summary, Verdict};
use crate::scenario::Scenario;
use crate::Result;

/// First 12 hex digits of SHA-256 over the canonical TOML.
pub fn config_hash(scenario: &Scenario) -> Result<String> {
    let digest = Sha256::digest(scenario.to_toml()?.as_bytes());
    Ok(hex::encode(digest)[..12].to_string())
}

pub fn bundle_dir(out: &Path, scenario: &Scenario, hash: &str) -> PathBuf {
    let safe: String = scenario
        .name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    out.join(format!("{safe}-{hash}"))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn verdict_csv(verdicts: &[Verdict]) -> String {
    let mut out = String::from("property,status,measured,threshold,detail\n");
    for v in verdicts {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            v.property,
            v.status.label(),
            opt(v.measured),
            opt(v.threshold),
            csv_field(&v.detail)
        );
    }
    out
}

pub fn summary_json(summary: &Summary) -> Result<String> {
    Ok(serde_json::to_string_pretty(summary)? + "\n")
}

fn write_json(path: PathBuf, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct ProfileSummary {
    center: [f64; 2],
    phi0: f64,
    c_fit: Option<f64>,
    classification: Option<cohesive_core::Classification>,
}

#[derive(Serialize)]
struct BlowupSummary<'a> {
    center: [f64; 2],
    mu: f64,
    superquadratic: bool,
    profile_distance: Option<f64>,
    radii: &'a [f64],
    d_r: &'a [f64],
}

/// Writes every artifact of `bundle` under `out` and returns the directory.
pub fn write_bundle(bundle: &RunBundle, out: &Path) -> Result<PathBuf> {
    let dir = bundle_dir(out, &bundle.scenario, &bundle.hash);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("scenario.toml"), bundle.scenario.to_toml()?)?;
    fs::write(dir.join("summary.json"), summary_json(&bundle.summary)?)?;
    fs::write(dir.join("verdicts.csv"), verdict_csv(&bundle.summary.verdicts))?;
    write_json(dir.join("validation.json"), &bundle.validation)?;

    if let Some(sol) = &bundle.solution {
        write_binary(&sol.u, dir.join("u.bin"))?;
        if bundle.scenario.output.field_csv {
            write_csv(&sol.u, dir.join("u.csv"))?;
        }
        let grid = &sol.grid;
        let mut trace = String::from(if grid.n == 1 { "x,trace,normal\n" } else { "x1,x2,trace,normal\n" });
        for l in 0..grid.lateral_len() {
            let p = grid.lateral_point(l);
            if grid.n == 1 {
                let _ = writeln!(trace, "{},{},{}", p[0], sol.trace[l], sol.normal[l]);
            } else {
                let _ = writeln!(trace, "{},{},{},{}", p[0], p[1], sol.trace[l], sol.normal[l]);
            }
        }
        fs::write(dir.join("trace.csv"), trace)?;
        let mut energy = String::from("iteration,energy\n");
        for (k, e) in sol.energy_history.iter().enumerate() {
            let _ = writeln!(energy, "{k},{e}");
        }
        fs::write(dir.join("energy.csv"), energy)?;
    }
    if let Some(geo) = &bundle.geometry {
        write_json(dir.join("geometry.json"), geo)?;
    }

    for (k, c) in bundle.summary.centers.iter().enumerate() {
        if let Some(p) = &c.profile {
            let mut csv = String::from("r,F,Phi,truncated\n");
            for i in 0..p.radii.len() {
                let _ = writeln!(csv, "{},{},{},{}", p.radii[i], p.f[i], p.phi[i], p.truncated[i]);
            }
            fs::write(dir.join(format!("profile_{k}.csv")), csv)?;
            write_json(
                dir.join(format!("profile_{k}.json")),
                &ProfileSummary { center: c.center, phi0: p.phi0, c_fit: p.c_fit, classification: c.classification },
            )?;
        }
        if let Some(b) = &c.blowup {
            write_json(
                dir.join(format!("blowup_{k}.json")),
                &BlowupSummary {
                    center: c.center,
                    mu: b.fit.mu,
                    superquadratic: b.fit.superquadratic,
                    profile_distance: b.alignment.map(|a| a.distance),
                    radii: &b.fit.radii,
                    d_r: &b.fit.d_r,
                },
            )?;
        }
        if let Some(g) = &c.graph {
            let mut csv = String::from("x1,f,slope\n");
            for i in 0..g.s.len() {
                let slope = g.slope.get(i).map(|v| v.to_string()).unwrap_or_default();
                let _ = writeln!(csv, "{},{},{}", g.s[i], g.f[i], slope);
            }
            fs::write(dir.join(format!("graph_{k}.csv")), csv)?;
        }
    }
    Ok(dir)
}
