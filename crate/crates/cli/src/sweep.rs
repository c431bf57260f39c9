//! Cartesian parameter sweeps over dotted-key overrides.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::artifacts::write_bundle;
use crate::pipeline::{run, Status, Summary};
use crate::scenario::Scenario;
use crate::{CliError, Result};

/// One cell of a sweep: its overrides and either a summary or an error.
#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub index: usize,
    pub overrides: Vec<(String, toml::Value)>,
    pub summary: Option<Summary>,
    pub error: Option<String>,
}

impl CellOutcome {
    fn label(&self) -> String {
        self.overrides.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

/// Overrides applied to the base scenario, and the result.
pub type Cell = (Vec<(String, toml::Value)>, Scenario);

/// Every cell of the product of `base.sweep`, in lexicographic key order
/// with the last key varying fastest. An empty table gives the base alone.
pub fn cells(base: &Scenario) -> Result<Vec<Cell>> {
    let mut root = base.clone();
    root.sweep.clear();
    let mut out = vec![(Vec::new(), root)];
    for (key, values) in &base.sweep {
        if values.is_empty() {
            return Err(CliError::Config(format!("sweep key `{key}` has no values")));
        }
        let mut next = Vec::with_capacity(out.len() * values.len());
        for (ov, sc) in &out {
            for v in values {
                let mut ov = ov.clone();
                ov.push((key.clone(), v.clone()));
                next.push((ov, sc.with_override(key, v)?));
            }
        }
        out = next;
    }
    Ok(out)
}

/// Runs all cells, `threads` at a time (`None`: rayon's default). When `out`
/// is given each cell writes its bundle there. Failing cells are recorded
/// and the sweep carries on.
pub fn sweep(base: &Scenario, threads: Option<usize>, out: Option<&Path>) -> Result<Vec<CellOutcome>> {
    let cells = cells(base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let outcomes = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(index, (overrides, scenario))| {
                let result = run(scenario).and_then(|bundle| {
                    if let Some(dir) = out {
                        write_bundle(&bundle, dir)?;
                    }
                    Ok(bundle.summary)
                });
                let (summary, error) = match result {
                    Ok(s) => (Some(s), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                CellOutcome { index, overrides: overrides.clone(), summary, error }
            })
            .collect::<Vec<_>>()
    });
    Ok(outcomes)
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per cell with the headline metrics of each verdict family.
pub fn sweep_csv(outcomes: &[CellOutcome]) -> String {
    let mut csv = String::from(
        "cell,overrides,status,hx,support_radius,phase_gap,kkt_residual,phi0,mu,profile_distance,\
         identity_r,identity_dirichlet_abs,identity_worst_relative,failed_verdicts\n",
    );
    for c in outcomes {
        let label = c.label();
        let Some(s) = &c.summary else {
            let _ = writeln!(csv, "{},{},error,,,,,,,,,,,\"{}\"", c.index, label, c.error.clone().unwrap_or_default().replace('"', "'"));
            continue;
        };
        let status = if s.failed.is_some() {
            "failed"
        } else if s.all_pass() {
            "pass"
        } else {
            "fail"
        };
        let geo = s.geometry.as_ref();
        let first = s.centers.iter().find(|c| c.phi0.is_some());
        let ident = s.centers.iter().find_map(|c| c.identities.as_ref());
        let failed: Vec<&str> = s.verdicts.iter().filter(|v| v.status == Status::Fail).map(|v| v.property).collect();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.index,
            label,
            status,
            s.hx,
            num(geo.map(|g| g.support_radius)),
            num(geo.and_then(|g| g.phase_gap)),
            num(s.solver.as_ref().map(|x| x.kkt_residual)),
            num(first.and_then(|c| c.phi0)),
            num(first.and_then(|c| c.mu)),
            num(first.and_then(|c| c.profile_distance)),
            num(ident.map(|i| i.r)),
            num(ident.map(|i| i.dirichlet_abs)),
            num(ident.map(|i| i.worst_relative)),
            failed.join(";"),
        );
    }
    csv
}
