//! Command-line front end: list scenarios, evaluate point reports, run
//! verification suites and export reconstructed meshes.
//!
//! Exit codes: 0 — everything passed; 1 — a residual check failed;
//! 2 — usage or scenario-loading error.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use gcurv_core::fundamental::{reconstruct_immersion, GridSpec};
use gcurv_core::scenario::{
    builtin_scenarios, find_scenario, load_scenario, point_report, run_suite, Scenario, Suite,
};

#[derive(Parser)]
#[command(
    name = "gcurv",
    version,
    about = "Exact Courant-algebroid curvature and hypersurface verification engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Print the ambient curvature summary at one chart point.
    Report {
        /// Registry name (see `list`) or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        /// Point in the ambient chart, e.g. "u=1,v=0"; omitted coordinates
        /// default to 0.
        #[arg(long)]
        point: String,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run a verification suite over a scenario's sample points.
    Verify {
        /// identities | flatness | constraints | fundamental | all
        #[arg(long)]
        suite: String,
        /// Registry name (see `list`) or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        /// Residual tolerance override for every entry of the suite.
        #[arg(long)]
        tol: Option<f64>,
        /// Reseed the scenario's sample-point stream (seeded plans only).
        #[arg(long)]
        seed: Option<u64>,
        /// Emit a JSON array of reports instead of tables.
        #[arg(long)]
        json: bool,
    },
    /// Integrate the immersion attached to a scenario and write the mesh.
    Reconstruct {
        /// Registry name or scenario file; needs attached reconstruction data.
        #[arg(long)]
        scenario: String,
        /// Grid nodes per axis.
        #[arg(long, default_value_t = 33)]
        grid: usize,
        /// Output path for the mesh JSON.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::List => {
            for sc in builtin_scenarios() {
                println!("{}", sc.summary());
            }
            Ok(0)
        }
        Command::Report { scenario, point, json } => {
            let sc = load_named_scenario(&scenario)?;
            let pt = parse_point(&sc.ambient.chart.coords, &point)?;
            let rep = point_report(&sc, &pt)
                .with_context(|| format!("cannot evaluate scenario `{}` at {pt:?}", sc.name))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rep)?);
            } else {
                print!("{}", rep.human_table());
            }
            Ok(0)
        }
        Command::Verify { suite, scenario, tol, seed, json } => {
            let suite: Suite = suite.parse()?;
            let mut sc = load_named_scenario(&scenario)?;
            if let Some(seed) = seed {
                sc = sc.reseeded(seed);
            }
            let reports = run_suite(suite, &sc, tol);
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                for rep in &reports {
                    print!("{}", rep.human_table());
                }
                let passed = reports.iter().filter(|r| r.pass).count();
                println!(
                    "suite {suite} on {}: {passed}/{} reports pass",
                    sc.name,
                    reports.len()
                );
            }
            if reports.is_empty() {
                eprintln!(
                    "note: suite `{suite}` has no content for scenario `{}`",
                    sc.name
                );
            }
            Ok(if reports.iter().all(|r| r.pass) { 0 } else { 1 })
        }
        Command::Reconstruct { scenario, grid, out } => {
            let sc = load_named_scenario(&scenario)?;
            let plan = sc.fundamental.as_ref().ok_or_else(|| {
                anyhow!(
                    "scenario `{}` has no reconstruction data attached; try sphere_in_flat_3",
                    sc.name
                )
            })?;
            let spec = GridSpec::new(plan.grid.u_range, plan.grid.v_range, (grid, grid));
            match reconstruct_immersion(&plan.data, &spec) {
                Ok((frame, diag)) => {
                    let points: Vec<[f64; 3]> = frame
                        .nodes
                        .iter()
                        .flat_map(|row| row.iter().map(|n| n.position))
                        .collect();
                    let mesh = serde_json::json!({
                        "grid": [spec.points.0, spec.points.1],
                        "points": points,
                        "diagnostics": {
                            "data_residual": diag.data_residual,
                            "path_residual": diag.path_residual,
                            "metric_residual": diag.metric_residual,
                        },
                    });
                    std::fs::write(&out, serde_json::to_string_pretty(&mesh)?)
                        .with_context(|| format!("cannot write `{}`", out.display()))?;
                    println!(
                        "wrote {}: {} x {} nodes, path residual {:.3e}, metric residual {:.3e}",
                        out.display(),
                        spec.points.0,
                        spec.points.1,
                        diag.path_residual,
                        diag.metric_residual
                    );
                    Ok(0)
                }
                Err(err) => {
                    eprintln!("reconstruction failed: {err}");
                    Ok(1)
                }
            }
        }
    }
}

/// Resolve a `--scenario` argument: registry names first (including the
/// synthesised `random_poly_{seed}_{dim}` family), then scenario files.
fn load_named_scenario(name: &str) -> Result<Scenario> {
    if let Some(sc) = find_scenario(name) {
        return Ok(sc);
    }
    let path = Path::new(name);
    if path.exists() {
        return load_scenario(path).map_err(|e| anyhow!(e));
    }
    Err(anyhow!(
        "unknown scenario `{name}` (neither a registry name nor a file); try `gcurv list`"
    ))
}

/// Parse "u=1,v=0" against the chart coordinate names; unspecified
/// coordinates default to 0.
fn parse_point(coords: &[String], text: &str) -> Result<Vec<f64>> {
    let mut values = vec![0.0; coords.len()];
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("point component `{part}` must look like name=value"))?;
        let name = name.trim();
        let idx = coords
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| anyhow!("unknown coordinate `{name}`; chart coordinates are {coords:?}"))?;
        values[idx] = value
            .trim()
            .parse()
            .map_err(|_| anyhow!("cannot parse value `{}` for coordinate `{name}`", value.trim()))?;
    }
    Ok(values)
}
