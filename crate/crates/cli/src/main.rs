use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cohesive_cli::artifacts::{bundle_dir, config_hash, write_bundle};
use cohesive_cli::pipeline::{run_stages, Status, Summary};
use cohesive_cli::sweep::{sweep, sweep_csv};
use cohesive_cli::{CliError, Scenario};
use cohesive_core::law::{validate, ValidationOptions};

#[derive(Parser)]
#[command(name = "cohesive", version, about = "Cohesive-zone strip solver and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; each run writes `<name>-<hash>/` inside it.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run even if the law violates the admissibility hypotheses.
    #[arg(long, global = true)]
    force_outside_hypotheses: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the law's axioms against the strip height.
    ValidateLaw,
    /// Solve and check the solution-level bounds.
    Solve,
    /// Full pipeline: solve, frequency, blow-up, free boundary.
    Analyze,
    /// Run the scenario's `[sweep]` table.
    Sweep,
    /// Print the verdict tables found under `--out`.
    Report,
}

fn load(cli: &Cli) -> Result<Scenario, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut s = Scenario::load(path)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    s.force_outside_hypotheses |= cli.force_outside_hypotheses;
    Ok(s)
}

fn print_summary(summary: &Summary) {
    println!("{} [{}]", summary.scenario, summary.hash);
    if let Some(f) = &summary.failed {
        println!("  FAILED: {f}");
    }
    for v in &summary.verdicts {
        let measured = v.measured.map(|m| format!("{m:.4e}")).unwrap_or_else(|| "-".into());
        let threshold = v.threshold.map(|m| format!("{m:.4e}")).unwrap_or_else(|| "-".into());
        println!("  {:<18} {:<4} {:>12} {:>12}  {}", v.property, v.status.label(), measured, threshold, v.detail);
    }
}

fn verdict_code(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn summaries_under(dir: &Path) -> Result<Vec<Summary>, CliError> {
    let mut paths = Vec::new();
    let direct = dir.join("summary.json");
    if direct.is_file() {
        paths.push(direct);
    } else {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        entries.sort();
        for e in entries {
            let p = e.join("summary.json");
            if p.is_file() {
                paths.push(p);
            }
        }
    }
    let mut out = Vec::new();
    for p in paths {
        let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p)?)?;
        out.push(summary_from_json(&value));
    }
    Ok(out)
}

/// Rebuilds the printable part of a summary from its JSON form.
fn summary_from_json(v: &serde_json::Value) -> Summary {
    use cohesive_cli::Verdict;
    let verdicts = v["verdicts"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|x| Verdict {
                    property: Box::leak(x["property"].as_str().unwrap_or("?").to_string().into_boxed_str()),
                    status: match x["status"].as_str() {
                        Some("pass") => Status::Pass,
                        Some("fail") => Status::Fail,
                        _ => Status::Na,
                    },
                    measured: x["measured"].as_f64(),
                    threshold: x["threshold"].as_f64(),
                    detail: x["detail"].as_str().unwrap_or("").to_string(),
                })
                .collect()
        })
        .unwrap_or_default();
    Summary {
        scenario: v["scenario"].as_str().unwrap_or("?").to_string(),
        hash: v["hash"].as_str().unwrap_or("?").to_string(),
        failed: v["failed"].as_str().map(str::to_string),
        hx: v["hx"].as_f64().unwrap_or(f64::NAN),
        hy: v["hy"].as_f64().unwrap_or(f64::NAN),
        law_valid: v["law_valid"].as_bool().unwrap_or(false),
        solver: None,
        geometry: None,
        bounds: None,
        centers: vec![],
        uniqueness: None,
        verdicts,
    }
}

fn execute(cli: &Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::ValidateLaw => {
            let s = load(cli)?;
            let grid = s.strip_grid()?;
            let report = validate(&s.law, grid.height, &ValidationOptions::default())?;
            for c in &report.checks {
                println!("{:<24} {:<4} {}", c.axiom.label(), if c.passed { "pass" } else { "fail" }, c.detail);
            }
            Ok(verdict_code(report.passed()))
        }
        Command::Solve | Command::Analyze => {
            let s = load(cli)?;
            let bundle = run_stages(&s, matches!(cli.command, Command::Analyze))?;
            let dir = write_bundle(&bundle, &cli.out)?;
            print_summary(&bundle.summary);
            println!("artifacts: {}", dir.display());
            Ok(verdict_code(bundle.summary.all_pass()))
        }
        Command::Sweep => {
            let s = load(cli)?;
            let dir = bundle_dir(&cli.out, &s, &format!("sweep-{}", config_hash(&s)?));
            std::fs::create_dir_all(&dir)?;
            let outcomes = sweep(&s, cli.threads, Some(&dir))?;
            let csv = sweep_csv(&outcomes);
            std::fs::write(dir.join("sweep.csv"), &csv)?;
            print!("{csv}");
            println!("artifacts: {}", dir.display());
            let ok = outcomes.iter().all(|c| c.summary.as_ref().is_some_and(Summary::all_pass));
            Ok(verdict_code(ok))
        }
        Command::Report => {
            let summaries = summaries_under(&cli.out)?;
            if summaries.is_empty() {
                return Err(CliError::Config(format!("no summary.json under {}", cli.out.display())));
            }
            for s in &summaries {
                print_summary(s);
            }
            Ok(verdict_code(summaries.iter().all(Summary::all_pass)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
