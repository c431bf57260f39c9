//! Scenario files: one TOML document per experiment.

use std::collections::BTreeMap;
use std::path::Path;

use cohesive_core::boundary::BoundaryOptions;
use cohesive_core::{BoundaryData, BoundaryProfile, CohesiveLaw, SolverOptions, StripGrid};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Run even when the law fails `2 A sup|g''| < 1` or another axiom.
    #[serde(default)]
    pub force_outside_hypotheses: bool,
    pub grid: GridSpec,
    pub law: CohesiveLaw,
    pub boundary: BoundaryProfile,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Dotted key to list of values, e.g. `"grid.half_width" = [4.0, 8.0]`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<toml::Value>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
    pub height: f64,
    pub mx: usize,
    pub my: usize,
    /// Number of spacing halvings applied on top of `mx`, `my`.
    #[serde(default)]
    pub refine: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub open_tol: Option<f64>,
    pub step_fraction: f64,
    pub accelerate: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self { tol: d.tol, max_iter: d.max_iter, open_tol: None, step_fraction: d.step_fraction, accelerate: d.accelerate }
    }
}

/// Which points of the free boundary to analyse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Centers {
    /// `"auto"`: free-boundary points found on the trace.
    Auto(String),
    Explicit(Vec<[f64; 2]>),
}

impl Default for Centers {
    fn default() -> Self {
        Centers::Auto("auto".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    pub centers: Centers,
    /// Upper limit on automatically chosen centers.
    pub max_centers: usize,
    pub radii_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Identity radius in units of `hx` (ignored when `identity_radius` is set).
    pub identity_cells: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_radius: Option<f64>,
    pub identity_tol: f64,
    pub semiconvexity_offsets: usize,
    /// Derive finite-difference slack from one extra solve at half spacing.
    pub calibrate_fd: bool,
    pub fd_tol_floor: f64,
    pub uniqueness_seeds: usize,
    pub decay_tol: f64,
    pub mono_tol: f64,
    pub class_tol: f64,
    pub fit_points: usize,
    pub growth_tol: f64,
    pub fit_tol: f64,
    pub mu_range: [f64; 2],
    pub consistency_tol: f64,
    pub profile_tol: f64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            centers: Centers::default(),
            max_centers: 4,
            radii_count: 12,
            r_max: None,
            identity_cells: 8.0,
            identity_radius: None,
            identity_tol: 1e-2,
            semiconvexity_offsets: 4,
            calibrate_fd: true,
            fd_tol_floor: 1e-6,
            uniqueness_seeds: 0,
            decay_tol: 1e-8,
            mono_tol: 1e-3,
            class_tol: 0.15,
            fit_points: 4,
            growth_tol: 1e-2,
            fit_tol: 5e-2,
            mu_range: [1.4, 1.6],
            consistency_tol: 0.1,
            profile_tol: 0.1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Also write the displacement as CSV rows (the binary copy is always written).
    pub field_csv: bool,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Canonical TOML with every default spelled out.
    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    fn check(&self) -> Result<()> {
        if let Centers::Auto(s) = &self.analysis.centers {
            if s != "auto" {
                return Err(CliError::Config(format!("centers must be \"auto\" or a list of points, got {s:?}")));
            }
        }
        self.strip_grid()?;
        Ok(())
    }

    pub fn strip_grid(&self) -> Result<StripGrid> {
        let g = &self.grid;
        let mut grid = StripGrid::new(g.n, g.half_width, g.height, g.mx, g.my)?;
        for _ in 0..g.refine {
            grid = grid.refined();
        }
        Ok(grid)
    }

    pub fn boundary_data(&self, grid: &StripGrid) -> Result<BoundaryData> {
        let opts = BoundaryOptions { decay_tol: self.analysis.decay_tol, ..BoundaryOptions::default() };
        Ok(BoundaryData::from_profile(grid, &self.boundary, &opts)?)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            open_tol: s.open_tol,
            step_fraction: s.step_fraction,
            accelerate: s.accelerate,
            force_outside_hypotheses: self.force_outside_hypotheses,
        }
    }

    /// The same scenario with one dotted key replaced, e.g. `grid.mx`.
    pub fn with_override(&self, key: &str, value: &toml::Value) -> Result<Self> {
        let mut tree = toml::Value::try_from(self)?;
        let mut node = &mut tree;
        let parts: Vec<&str> = key.split('.').collect();
        for (k, part) in parts.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("override `{key}`: `{part}` is not inside a table")))?;
            if k + 1 == parts.len() {
                table.insert(part.to_string(), value.clone());
                break;
            }
            node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
        }
        let out: Scenario = tree.try_into()?;
        out.check()?;
        Ok(out)
    }
}
