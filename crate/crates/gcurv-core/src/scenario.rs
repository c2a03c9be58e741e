//! Named scenarios, JSON scenario ingestion, verification suites and
//! residual reports.
//!
//! A scenario bundles an ambient structure with an optional embedded
//! hypersurface, a sample-point plan and (for the reconstruction checks) an
//! abstract data set over a grid. Suites dispatch to the curvature,
//! hypersurface, flatness and reconstruction operations and collect named
//! residuals into [`ResidualReport`]s — one report per sample point, plus
//! one grid-level report when a reconstruction runs. Evaluation errors are
//! recorded as failing entries, never panics.
//!
//! Scenario generation is deterministic: the same name (and, for the random
//! family, the same seed) always produces the same fields and the same
//! sample points, so serialised reports are byte-identical across runs.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classical::{christoffels, curvature};
use crate::fields::{
    AmbientStructure, Chart, DilatonField, FieldError, MetricField, ThreeFormField,
};
use crate::flatness::flatness_report;
use crate::fundamental::{
    classical_flat_gc_residual, flat_gc_residual, reconstruct_immersion, recovered_k_residual,
    GridSpec, HypersurfaceData,
};
use crate::gen_curvature::{
    dilaton_eom_residual, div_e, dstar_xi, gen_ricci, gen_scalar, mixed_trace_rhs, ricci_trace,
};
use crate::hypersurface::{compatibility_check, induce, EmbeddingMap};

/// One named residual with its pass tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// All residuals of one suite run at one sample point.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub scenario: String,
    pub suite: String,
    pub point: Vec<f64>,
    pub entries: Vec<ResidualEntry>,
    /// True iff every entry passes.
    pub pass: bool,
    /// Not serialised: wall time varies run to run and reports must be
    /// byte-identical for identical inputs.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ResidualReport {
    pub fn new(scenario: &str, suite: &str, point: &[f64]) -> Self {
        ResidualReport {
            scenario: scenario.to_string(),
            suite: suite.to_string(),
            point: point.to_vec(),
            entries: Vec::new(),
            pass: true,
            wall_time: Duration::ZERO,
        }
    }

    /// Record one residual; the overall flag drops as soon as an entry fails.
    pub fn push(&mut self, name: &str, residual: f64, tolerance: f64) {
        let pass = residual.abs() <= tolerance;
        self.pass &= pass;
        self.entries.push(ResidualEntry {
            name: name.to_string(),
            residual,
            tolerance,
            pass,
        });
    }

    /// Mark an evaluation error as a failing entry.
    pub fn push_error(&mut self, name: &str, message: &str) {
        self.pass = false;
        self.entries.push(ResidualEntry {
            name: format!("{name}: {message}"),
            residual: f64::NAN,
            tolerance: 0.0,
            pass: false,
        });
    }

    /// Fixed-width table for terminal output.
    pub fn human_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "scenario {} [{}] at {:?} — {}\n",
            self.scenario,
            self.suite,
            self.point,
            if self.pass { "PASS" } else { "FAIL" }
        ));
        for e in &self.entries {
            out.push_str(&format!(
                "  {:<44} {:>12.3e}  (tol {:>8.1e})  {}\n",
                e.name,
                e.residual,
                e.tolerance,
                if e.pass { "ok" } else { "FAIL" }
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

/// Verification suites a scenario can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Curvature identities: Ricci traces, scalar/trace/divergence chain
    /// and, for embedded scenarios, the Gauss and Codazzi relations.
    Identities,
    /// Flatness-theorem diagnostics of the ambient structure.
    Flatness,
    /// Energy and momentum constraints of the embedded hypersurface and
    /// their classical reductions.
    Constraints,
    /// Abstract-data Gauss/Codazzi residuals and immersion reconstruction.
    Fundamental,
    /// All of the above, concatenated in the order listed.
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Flatness => "flatness",
            Suite::Constraints => "constraints",
            Suite::Fundamental => "fundamental",
            Suite::All => "all",
        }
    }

    /// Tolerance applied when neither the caller nor the scenario overrides
    /// it. The identity suites compare exact cancellations and sit well
    /// below these bounds on healthy data.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::Identities => 1e-7,
            Suite::Flatness => 1e-8,
            Suite::Constraints => 1e-8,
            Suite::Fundamental => 1e-6,
            Suite::All => 1e-7,
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, FieldError> {
        match s {
            "identities" => Ok(Suite::Identities),
            "flatness" => Ok(Suite::Flatness),
            "constraints" => Ok(Suite::Constraints),
            "fundamental" => Ok(Suite::Fundamental),
            "all" => Ok(Suite::All),
            other => Err(FieldError::Validation(format!(
                "unknown suite `{other}`; expected identities, flatness, constraints, fundamental or all"
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// How a scenario picks its sample points.
#[derive(Debug, Clone)]
pub enum SamplePlan {
    /// A fixed list, validated at construction time.
    Explicit(Vec<Vec<f64>>),
    /// `count` points drawn coordinate-wise from `boxes` with a ChaCha
    /// stream: the same seed always yields the same points.
    Seeded {
        seed: u64,
        count: usize,
        boxes: Vec<(f64, f64)>,
    },
}

impl SamplePlan {
    fn points(&self) -> Vec<Vec<f64>> {
        match self {
            SamplePlan::Explicit(pts) => pts.clone(),
            SamplePlan::Seeded { seed, count, boxes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*count)
                    .map(|_| {
                        boxes
                            .iter()
                            .map(|&(lo, hi)| rng.random_range(lo..hi))
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// Abstract hypersurface data paired with the grid its reconstruction runs
/// on; attached to scenarios whose fundamental suite has content.
#[derive(Debug)]
pub struct FundamentalPlan {
    pub data: HypersurfaceData,
    pub grid: GridSpec,
}

/// A named, fully validated verification target: ambient structure,
/// optional hypersurface embedding, sample-point plan, optional abstract
/// data for the reconstruction checks.
///
/// When an embedding is present the sample points live in the hypersurface
/// chart; ambient-side quantities are evaluated at their images. Otherwise
/// they are ambient points.
#[derive(Debug)]
pub struct Scenario {
    pub name: String,
    pub ambient: AmbientStructure,
    pub embedding: Option<EmbeddingMap>,
    pub sample_plan: SamplePlan,
    /// Applied to every suite entry when set (callers can still override).
    pub tol_override: Option<f64>,
    pub fundamental: Option<FundamentalPlan>,
}

impl Scenario {
    /// Materialise the sample points (deterministic).
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        self.sample_plan.points()
    }

    /// Map a sample point to the ambient chart (identity without an
    /// embedding).
    pub fn ambient_point(&self, point: &[f64]) -> Result<Vec<f64>, FieldError> {
        match &self.embedding {
            Some(emb) => emb.point(point),
            None => Ok(point.to_vec()),
        }
    }

    /// Replace the seed of a seeded sample plan; explicit plans are kept.
    pub fn reseeded(mut self, new_seed: u64) -> Self {
        if let SamplePlan::Seeded { seed, .. } = &mut self.sample_plan {
            *seed = new_seed;
        }
        self
    }

    /// One-line description for listings.
    pub fn summary(&self) -> String {
        let (p, q) = self.ambient.metric.signature;
        let mut s = format!(
            "{}: dim {}, signature ({p},{q})",
            self.name,
            self.ambient.dim()
        );
        if let Some(emb) = &self.embedding {
            s.push_str(&format!(", hypersurface dim {}", emb.dim_sigma()));
        }
        if self.fundamental.is_some() {
            s.push_str(", reconstruction data");
        }
        s.push_str(&format!(", {} sample points", self.sample_points().len()));
        s
    }
}

fn coord_names(dim: usize) -> Vec<String> {
    if dim <= 4 {
        ["x", "y", "z", "w"][..dim].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=dim).map(|i| format!("x{i}")).collect()
    }
}

fn surface_coord_names(dim: usize) -> Vec<String> {
    if dim <= 3 {
        ["u", "v", "w"][..dim].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=dim).map(|i| format!("u{i}")).collect()
    }
}

fn fmt_const(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}

/// Flat Euclidean space with zero flux and divergence pair.
pub fn flat_trivial(dim: usize) -> Result<Scenario, FieldError> {
    let names = coord_names(dim);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let chart = Chart::new(&format!("flat_trivial_{dim}"), &refs)?;
    let metric = MetricField::euclidean(&chart);
    let ambient = AmbientStructure::new(
        chart,
        metric,
        ThreeFormField::zero(dim),
        DilatonField::zero(dim),
    )?;
    Ok(Scenario {
        name: format!("flat_trivial_{dim}"),
        ambient,
        embedding: None,
        sample_plan: SamplePlan::Seeded {
            seed: 2024,
            count: 3,
            boxes: vec![(-1.0, 1.0); dim],
        },
        tol_override: None,
        fundamental: None,
    })
}

/// Round unit sphere embedded in flat Euclidean space, `dim` ∈ {3, 4}.
/// The 3-dimensional variant carries the matching abstract data set and a
/// reconstruction grid.
pub fn sphere_in_flat(dim: usize) -> Result<Scenario, FieldError> {
    if dim != 3 && dim != 4 {
        return Err(FieldError::Validation(format!(
            "sphere_in_flat supports ambient dimension 3 or 4, got {dim}"
        )));
    }
    let names = coord_names(dim);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let amb_chart = Chart::new(&format!("sphere_ambient_{dim}"), &refs)?;
    let ambient = AmbientStructure::new(
        amb_chart.clone(),
        MetricField::euclidean(&amb_chart),
        ThreeFormField::zero(dim),
        DilatonField::zero(dim),
    )?;

    let (embedding, sample_plan, fundamental) = if dim == 3 {
        let cap = Chart::new("cap", &["u", "v"])?.with_domain("u", 0.05, std::f64::consts::PI - 0.05)?;
        let emb = EmbeddingMap::new(
            cap.clone(),
            amb_chart,
            &["sin(u)*cos(v)", "sin(u)*sin(v)", "cos(u)"],
            1.0,
        )?;
        let h = MetricField::from_rows(
            &cap,
            &[vec!["1", "0"], vec!["0", "sin(u)^2"]],
            (2, 0),
        )?;
        let data = HypersurfaceData::classical(
            cap,
            h,
            &[vec!["1", "0"], vec!["0", "sin(u)^2"]],
        )?;
        let grid = GridSpec::new((0.4, 1.2), (0.0, 0.8), (17, 17));
        (
            emb,
            SamplePlan::Explicit(vec![
                vec![0.7, 0.3],
                vec![1.2, -0.8],
                vec![2.0, 2.4],
            ]),
            Some(FundamentalPlan { data, grid }),
        )
    } else {
        let cap = Chart::new("cap3", &["u", "v", "w"])?
            .with_domain("u", 0.05, std::f64::consts::PI - 0.05)?
            .with_domain("v", 0.05, std::f64::consts::PI - 0.05)?;
        let emb = EmbeddingMap::new(
            cap,
            amb_chart,
            &[
                "sin(u)*sin(v)*cos(w)",
                "sin(u)*sin(v)*sin(w)",
                "sin(u)*cos(v)",
                "cos(u)",
            ],
            1.0,
        )?;
        (
            emb,
            SamplePlan::Explicit(vec![
                vec![0.9, 0.7, 0.4],
                vec![1.4, 1.1, -0.6],
                vec![2.1, 0.6, 2.8],
            ]),
            None,
        )
    };

    Ok(Scenario {
        name: format!("sphere_in_flat_{dim}"),
        ambient,
        embedding: Some(embedding),
        sample_plan,
        tol_override: None,
        fundamental,
    })
}

/// Coordinate plane inside flat 3-space carrying the constant flux
/// `H = 6 dx ∧ dy ∧ dz`; exercises every perpendicular-flux term of the
/// second-form blocks while keeping an exact (zero) divergence pair.
pub fn hyperplane_with_flux() -> Result<Scenario, FieldError> {
    let amb_chart = Chart::new("flux_space", &["x", "y", "z"])?;
    let ambient = AmbientStructure::new(
        amb_chart.clone(),
        MetricField::euclidean(&amb_chart),
        ThreeFormField::new(&amb_chart, &[((0, 1, 2), "6")])?,
        DilatonField::zero(3),
    )?;
    let plane = Chart::new("plane", &["u", "v"])?;
    let embedding = EmbeddingMap::new(plane, amb_chart, &["u", "v", "0"], 1.0)?;
    Ok(Scenario {
        name: "hyperplane_with_flux".into(),
        ambient,
        embedding: Some(embedding),
        sample_plan: SamplePlan::Explicit(vec![
            vec![0.3, -0.2],
            vec![1.0, 0.7],
            vec![-0.5, 0.4],
        ]),
        tol_override: None,
        fundamental: None,
    })
}

/// Flat 3-torus chart with the constant flux `H = c dx ∧ dy ∧ dz`; not
/// canonically flat for `c ≠ 0`, with generalised scalar `-c^2/2`.
pub fn torus_constant_h(c: f64) -> Result<Scenario, FieldError> {
    let chart = Chart::new("torus", &["x", "y", "z"])?;
    let h_expr = format!("{c:?}");
    let ambient = AmbientStructure::new(
        chart.clone(),
        MetricField::euclidean(&chart),
        ThreeFormField::new(&chart, &[((0, 1, 2), &h_expr)])?,
        DilatonField::zero(3),
    )?;
    Ok(Scenario {
        name: format!("torus_constant_H_{}", fmt_const(c)),
        ambient,
        embedding: None,
        sample_plan: SamplePlan::Explicit(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 2.0, 3.0],
            vec![4.4, 5.5, 0.6],
        ]),
        tol_override: None,
        fundamental: None,
    })
}

/// Flat space with a constant exact one-form divergence pair (zero vector
/// part) and an embedded coordinate plane: the classical decomposition of
/// the constraints applies everywhere.
pub fn linear_dilaton() -> Result<Scenario, FieldError> {
    let amb_chart = Chart::new("linear_dilaton_space", &["x", "y", "z"])?;
    let ambient = AmbientStructure::new(
        amb_chart.clone(),
        MetricField::euclidean(&amb_chart),
        ThreeFormField::zero(3),
        DilatonField::new(&amb_chart, &["0", "0", "0"], &["0.25", "0.125", "0"])?,
    )?;
    let plane = Chart::new("plane", &["u", "v"])?;
    let embedding = EmbeddingMap::new(plane, amb_chart, &["u", "v", "0"], 1.0)?;
    Ok(Scenario {
        name: "linear_dilaton".into(),
        ambient,
        embedding: Some(embedding),
        sample_plan: SamplePlan::Explicit(vec![
            vec![0.2, 0.5],
            vec![-0.7, 1.1],
            vec![1.4, -0.3],
        ]),
        tol_override: None,
        fundamental: None,
    })
}

/// The neutral-signature family of canonically flat structures in dimension
/// `2m`; every flatness diagnostic vanishes on it.
pub fn neutral_flat_example(m: usize) -> Result<Scenario, FieldError> {
    let ambient = crate::flatness::neutral_flat_example(m)?;
    let mut points = Vec::new();
    for (idx, u) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let mut p = vec![0.0; 2 * m];
        p[0] = u;
        p[1] = 0.25 - 0.2 * idx as f64;
        for (j, slot) in p.iter_mut().enumerate().skip(2) {
            *slot = 0.1 * (((idx + j) % 3) as f64 - 1.0);
        }
        points.push(p);
    }
    Ok(Scenario {
        name: format!("neutral_flat_example_m{m}"),
        ambient,
        embedding: None,
        sample_plan: SamplePlan::Explicit(points),
        tol_override: None,
        fundamental: None,
    })
}

// ---------------------------------------------------------------------------
// Random scenarios
// ---------------------------------------------------------------------------

/// A random degree-≤3 polynomial with a bounded trigonometric perturbation
/// (coefficient magnitude below 0.1), written as an expression string.
fn random_poly_expr(rng: &mut ChaCha8Rng, vars: &[String], amp: f64) -> String {
    let mut terms = Vec::new();
    for v in vars {
        terms.push(format!("({:.4})*{}", rng.random_range(-amp..amp), v));
    }
    let i = rng.random_range(0..vars.len());
    let j = rng.random_range(0..vars.len());
    terms.push(format!(
        "({:.4})*{}*{}",
        rng.random_range(-amp..amp),
        vars[i],
        vars[j]
    ));
    let i = rng.random_range(0..vars.len());
    let j = rng.random_range(0..vars.len());
    let k = rng.random_range(0..vars.len());
    terms.push(format!(
        "({:.4})*{}*{}*{}",
        rng.random_range(-amp..amp),
        vars[i],
        vars[j],
        vars[k]
    ));
    let t = rng.random_range(0..vars.len());
    let trig = if rng.random_range(0..2usize) == 0 { "sin" } else { "cos" };
    terms.push(format!(
        "({:.4})*{}({})",
        0.1 * rng.random_range(-0.5..0.5),
        trig,
        vars[t]
    ));
    terms.join(" + ")
}

/// Deterministic random scenario: a perturbed Riemannian metric, a closed
/// random flux, a random divergence pair and a random graph hypersurface.
///
/// Every flux component `H_{ijk}` depends only on the coordinates
/// `x_i, x_j, x_k` it is attached to, which makes `dH = 0` hold identically
/// in any dimension. Perturbation amplitudes keep the metric positive
/// definite on the sampling box around the origin.
pub fn random_poly(seed: u64, dim: usize) -> Result<Scenario, FieldError> {
    if dim < 3 {
        return Err(FieldError::Validation(format!(
            "random scenarios need ambient dimension >= 3, got {dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = coord_names(dim);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let name = format!("random_poly_{seed}_{dim}");
    let chart = Chart::new(&name, &refs)?;

    // Metric: identity plus small symmetric perturbations.
    let mut rows: Vec<Vec<String>> = vec![vec![String::new(); dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let entry = if i == j {
                format!("1 + {}", random_poly_expr(&mut rng, &names, 0.05))
            } else {
                random_poly_expr(&mut rng, &names, 0.05)
            };
            rows[i][j] = entry.clone();
            rows[j][i] = entry;
        }
    }
    let row_refs: Vec<Vec<&str>> = rows
        .iter()
        .map(|r| r.iter().map(String::as_str).collect())
        .collect();
    let metric = MetricField::from_rows(&chart, &row_refs, (dim, 0))?;

    // Closed flux: each component restricted to its own coordinates.
    let mut h_exprs = Vec::new();
    for i in 0..dim {
        for j in (i + 1)..dim {
            for k in (j + 1)..dim {
                let vars = vec![names[i].clone(), names[j].clone(), names[k].clone()];
                h_exprs.push(((i, j, k), random_poly_expr(&mut rng, &vars, 0.1)));
            }
        }
    }
    let h_refs: Vec<((usize, usize, usize), &str)> = h_exprs
        .iter()
        .map(|(idx, e)| (*idx, e.as_str()))
        .collect();
    let h_field = ThreeFormField::new(&chart, &h_refs)?;

    // Divergence pair.
    let x_exprs: Vec<String> = (0..dim)
        .map(|_| random_poly_expr(&mut rng, &names, 0.08))
        .collect();
    let xi_exprs: Vec<String> = (0..dim)
        .map(|_| random_poly_expr(&mut rng, &names, 0.08))
        .collect();
    let dilaton = DilatonField::new(
        &chart,
        &x_exprs.iter().map(String::as_str).collect::<Vec<_>>(),
        &xi_exprs.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;

    let ambient = AmbientStructure::new(chart.clone(), metric, h_field, dilaton)?;

    // Graph hypersurface over the first dim-1 coordinates.
    let surf = surface_coord_names(dim - 1);
    let surf_refs: Vec<&str> = surf.iter().map(String::as_str).collect();
    let sigma_chart = Chart::new(&format!("{name}_graph"), &surf_refs)?;
    let graph = random_poly_expr(&mut rng, &surf, 0.15);
    let mut components: Vec<String> = surf.clone();
    components.push(graph);
    let comp_refs: Vec<&str> = components.iter().map(String::as_str).collect();
    let embedding = EmbeddingMap::new(sigma_chart, chart, &comp_refs, 1.0)?;

    Ok(Scenario {
        name,
        ambient,
        embedding: Some(embedding),
        sample_plan: SamplePlan::Seeded {
            seed: seed.wrapping_add(101),
            count: 5,
            boxes: vec![(-0.35, 0.35); dim - 1],
        },
        tol_override: None,
        fundamental: None,
    })
}

/// The built-in scenario registry.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let build = || -> Result<Vec<Scenario>, FieldError> {
        Ok(vec![
            flat_trivial(3)?,
            flat_trivial(4)?,
            sphere_in_flat(3)?,
            sphere_in_flat(4)?,
            hyperplane_with_flux()?,
            torus_constant_h(2.0)?,
            linear_dilaton()?,
            neutral_flat_example(2)?,
            neutral_flat_example(3)?,
            random_poly(42, 3)?,
            random_poly(42, 4)?,
        ])
    };
    build().expect("builtin scenarios are well-formed")
}

/// Look a scenario up by registry name; `random_poly_{seed}_{dim}` names
/// are synthesised on demand for any seed and dimension.
pub fn find_scenario(name: &str) -> Option<Scenario> {
    if let Some(s) = builtin_scenarios().into_iter().find(|s| s.name == name) {
        return Some(s);
    }
    if let Some(rest) = name.strip_prefix("random_poly_") {
        let mut it = rest.split('_');
        if let (Some(seed), Some(dim), None) = (it.next(), it.next(), it.next()) {
            if let (Ok(seed), Ok(dim)) = (seed.parse::<u64>(), dim.parse::<usize>()) {
                return random_poly(seed, dim).ok();
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Suite runners
// ---------------------------------------------------------------------------

fn effective_tolerance(suite: Suite, scenario: &Scenario, tol: Option<f64>) -> f64 {
    tol.or(scenario.tol_override)
        .unwrap_or_else(|| suite.default_tolerance())
}

/// Run one suite (or `all`) over every sample point of the scenario.
///
/// Returns one report per sample point and suite; the fundamental suite
/// appends one grid-level report for the reconstruction. Evaluation errors
/// become failing entries, so a returned report list always covers the full
/// plan.
pub fn run_suite(suite: Suite, scenario: &Scenario, tol: Option<f64>) -> Vec<ResidualReport> {
    match suite {
        Suite::Identities => identities_suite(scenario, effective_tolerance(suite, scenario, tol)),
        Suite::Flatness => flatness_suite(scenario, effective_tolerance(suite, scenario, tol)),
        Suite::Constraints => {
            constraints_suite(scenario, effective_tolerance(suite, scenario, tol))
        }
        Suite::Fundamental => {
            fundamental_suite(scenario, effective_tolerance(suite, scenario, tol))
        }
        Suite::All => {
            let mut out = identities_suite(
                scenario,
                effective_tolerance(Suite::Identities, scenario, tol),
            );
            out.extend(flatness_suite(
                scenario,
                effective_tolerance(Suite::Flatness, scenario, tol),
            ));
            out.extend(constraints_suite(
                scenario,
                effective_tolerance(Suite::Constraints, scenario, tol),
            ));
            out.extend(fundamental_suite(
                scenario,
                effective_tolerance(Suite::Fundamental, scenario, tol),
            ));
            out
        }
    }
}

fn identities_suite(sc: &Scenario, tol: f64) -> Vec<ResidualReport> {
    sc.sample_points()
        .iter()
        .map(|p| {
            let start = Instant::now();
            let mut rep = ResidualReport::new(&sc.name, "identities", p);
            if let Err(e) = identity_entries(sc, p, tol, &mut rep) {
                rep.push_error("evaluation", &e.to_string());
            }
            rep.wall_time = start.elapsed();
            rep
        })
        .collect()
}

fn identity_entries(
    sc: &Scenario,
    point: &[f64],
    tol: f64,
    rep: &mut ResidualReport,
) -> Result<(), FieldError> {
    let pa = sc.ambient_point(point)?;
    let sj = sc.ambient.jets_at(&pa)?;
    let chr = christoffels(&sj);
    let ric = gen_ricci(&sj, &chr);
    let trace_rhs = mixed_trace_rhs(&sj, &chr);
    rep.push(
        "ricci_trace_plus",
        ricci_trace(&sj, &ric.plus) - trace_rhs,
        tol,
    );
    rep.push(
        "ricci_trace_minus",
        ricci_trace(&sj, &ric.minus) - trace_rhs,
        tol,
    );
    rep.push(
        "divergence_pair_identity",
        div_e(&sj, &chr, 1.0) - div_e(&sj, &chr, -1.0) + 2.0 * dstar_xi(&sj, &chr),
        tol,
    );
    rep.push(
        "scalar_trace_dilaton_chain",
        (gen_scalar(&sj, &chr) - trace_rhs) - dilaton_eom_residual(&sj, &chr),
        tol,
    );

    if let Some(emb) = &sc.embedding {
        let ind = induce(&sc.ambient, emb, point)?;
        let ga = ind.gauss_residuals();
        rep.push("gauss_pure_plus", ga.pure_plus, tol);
        rep.push("gauss_pure_minus", ga.pure_minus, tol);
        rep.push("gauss_mixed_plus", ga.mixed_plus, tol);
        rep.push("gauss_mixed_minus", ga.mixed_minus, tol);
        let co = ind.codazzi_residuals();
        rep.push("codazzi_mixed_plus", co.mixed_plus, tol);
        rep.push("codazzi_mixed_minus", co.mixed_minus, tol);
        rep.push("codazzi_pure_plus", co.pure_plus, tol);
        rep.push("codazzi_pure_minus", co.pure_minus, tol);
        rep.push("codazzi_normal_plus", co.normal_plus, tol);
        rep.push("codazzi_normal_minus", co.normal_minus, tol);
        rep.push("codazzi_cross_plus", co.cross_plus, tol);
        rep.push("codazzi_cross_minus", co.cross_minus, tol);
    }
    Ok(())
}

fn flatness_suite(sc: &Scenario, tol: f64) -> Vec<ResidualReport> {
    sc.sample_points()
        .iter()
        .map(|p| {
            let start = Instant::now();
            let mut rep = ResidualReport::new(&sc.name, "flatness", p);
            match sc
                .ambient_point(p)
                .and_then(|pa| flatness_report(&sc.ambient, &pa))
            {
                Ok(fr) => {
                    rep.push("max_riemann", fr.max_riemann, tol);
                    rep.push("weyl", fr.weyl, tol);
                    rep.push("nabla_h", fr.nabla_h, tol);
                    rep.push("e_gradient_plus", fr.e_gradient_plus, tol);
                    rep.push("e_gradient_minus", fr.e_gradient_minus, tol);
                    rep.push("dilaton_eom", fr.dilaton_eom, tol);
                    rep.push("q_vs_h2", fr.q_vs_h2, tol);
                    rep.push("div_antisymmetry", fr.div_antisymmetry, tol);
                    rep.push("quadratic_riemann", fr.quadratic_riemann, tol);
                }
                Err(e) => rep.push_error("evaluation", &e.to_string()),
            }
            rep.wall_time = start.elapsed();
            rep
        })
        .collect()
}

fn constraints_suite(sc: &Scenario, tol: f64) -> Vec<ResidualReport> {
    let Some(emb) = &sc.embedding else {
        return Vec::new();
    };
    sc.sample_points()
        .iter()
        .map(|p| {
            let start = Instant::now();
            let mut rep = ResidualReport::new(&sc.name, "constraints", p);
            if let Err(e) = constraint_entries(sc, emb, p, tol, &mut rep) {
                rep.push_error("evaluation", &e.to_string());
            }
            rep.wall_time = start.elapsed();
            rep
        })
        .collect()
}

fn constraint_entries(
    sc: &Scenario,
    emb: &EmbeddingMap,
    point: &[f64],
    tol: f64,
    rep: &mut ResidualReport,
) -> Result<(), FieldError> {
    let ind = induce(&sc.ambient, emb, point)?;
    let energy = ind.energy_constraint();
    rep.push("energy", energy.residual, tol);

    // The momentum identity needs a compatible divergence pair (generalised
    // Killing generator); skip it otherwise rather than reporting an
    // inapplicable equation as broken.
    let comp = compatibility_check(&sc.ambient, Some(emb), point)?;
    let momentum = if comp.max() <= 1e-8 {
        let m = ind.momentum_constraint();
        rep.push("momentum", m.residual, tol);
        Some(m)
    } else {
        None
    };

    // Classical reduction, defined only for exact pairs: compare the
    // classical gaps against the band combinations of the generalised
    // sides.
    match ind.classical_constraints() {
        Ok(cls) => {
            rep.push(
                "classical_energy_agreement",
                cls.hamiltonian_gap - energy.rhs,
                tol,
            );
            if let Some(m) = &momentum {
                let mut worst_mom = 0.0f64;
                let mut worst_flux = 0.0f64;
                for al in 0..ind.dim_sigma {
                    let plus = m.rhs_plus.get(&[al]);
                    let minus = m.rhs_minus.get(&[al]);
                    worst_mom = worst_mom
                        .max((2.0 * cls.momentum_gap.get(&[al]) - (plus + minus)).abs());
                    worst_flux =
                        worst_flux.max((cls.flux_gap.get(&[al]) - (minus - plus)).abs());
                }
                rep.push("classical_momentum_agreement", worst_mom, tol);
                rep.push("classical_flux_agreement", worst_flux, tol);
            }
        }
        Err(FieldError::Validation(_)) => {} // pair not exact: reduction undefined
        Err(e) => return Err(e),
    }
    Ok(())
}

fn fundamental_suite(sc: &Scenario, tol: f64) -> Vec<ResidualReport> {
    let Some(plan) = &sc.fundamental else {
        return Vec::new();
    };
    let mut out: Vec<ResidualReport> = sc
        .sample_points()
        .iter()
        .map(|p| {
            let start = Instant::now();
            let mut rep = ResidualReport::new(&sc.name, "fundamental", p);
            match flat_gc_residual(&plan.data, p, tol) {
                Ok(inner) => {
                    rep.pass &= inner.pass;
                    rep.entries.extend(inner.entries);
                }
                Err(e) => rep.push_error("banded identities", &e.to_string()),
            }
            match classical_flat_gc_residual(&plan.data, p) {
                Ok((gauss, codazzi)) => {
                    rep.push("classical_gauss", gauss, tol);
                    rep.push("classical_codazzi", codazzi, tol);
                }
                Err(e) => rep.push_error("classical identities", &e.to_string()),
            }
            rep.wall_time = start.elapsed();
            rep
        })
        .collect();

    // Grid-level reconstruction report. The tolerances here are set by the
    // grid resolution (fourth-order path dependence, second-order metric
    // check), not by the pointwise identity tolerance.
    let start = Instant::now();
    let corner = vec![plan.grid.u_range.0, plan.grid.v_range.0];
    let mut rep = ResidualReport::new(&sc.name, "fundamental", &corner);
    match reconstruct_immersion(&plan.data, &plan.grid) {
        Ok((frame, diag)) => {
            rep.push("reconstruction_data_residual", diag.data_residual, 1e-6);
            rep.push("reconstruction_path_residual", diag.path_residual, 1e-4);
            rep.push("reconstruction_metric_residual", diag.metric_residual, 1e-2);
            match recovered_k_residual(&plan.data, &frame) {
                Ok(rk) => rep.push("recovered_second_form", rk, 1e-3),
                Err(e) => rep.push_error("recovered second form", &e.to_string()),
            }
        }
        Err(e) => rep.push_error("reconstruction", &e.to_string()),
    }
    rep.wall_time = start.elapsed();
    out.push(rep);
    out
}

// ---------------------------------------------------------------------------
// Point reports
// ---------------------------------------------------------------------------

/// Pointwise structural summary of a scenario's ambient geometry.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub scenario: String,
    /// Ambient point the quantities are evaluated at.
    pub point: Vec<f64>,
    pub signature: (usize, usize),
    pub classical_scalar: f64,
    pub gen_scalar: f64,
    pub h_norm2: f64,
    pub e_plus_norm2: f64,
    pub e_minus_norm2: f64,
    pub div_e_plus: f64,
    pub div_e_minus: f64,
    pub dstar_xi: f64,
    pub dilaton_eom: f64,
}

impl PointReport {
    /// Fixed-width table for terminal output.
    pub fn human_table(&self) -> String {
        let mut out = format!(
            "scenario {} at {:?} — signature ({},{})\n",
            self.scenario, self.point, self.signature.0, self.signature.1
        );
        let rows = [
            ("classical scalar curvature", self.classical_scalar),
            ("generalised scalar curvature", self.gen_scalar),
            ("|H|^2", self.h_norm2),
            ("|pi e_+|^2", self.e_plus_norm2),
            ("|pi e_-|^2", self.e_minus_norm2),
            ("div(pi e_+)", self.div_e_plus),
            ("div(pi e_-)", self.div_e_minus),
            ("d* xi", self.dstar_xi),
            ("dilaton field equation", self.dilaton_eom),
        ];
        for (name, value) in rows {
            out.push_str(&format!("  {name:<32} {value:>18.12}\n"));
        }
        out
    }
}

/// Evaluate the ambient summary at a point given in the ambient chart.
pub fn point_report(scenario: &Scenario, point: &[f64]) -> Result<PointReport, FieldError> {
    let sj = scenario.ambient.jets_at(point)?;
    let chr = christoffels(&sj);
    let hc = sj.h_contractions();
    let ds = sj.dilaton_split();
    Ok(PointReport {
        scenario: scenario.name.clone(),
        point: point.to_vec(),
        signature: sj.signature,
        classical_scalar: curvature(&sj, &chr).sc,
        gen_scalar: gen_scalar(&sj, &chr),
        h_norm2: hc.h_norm2,
        e_plus_norm2: ds.e_plus_norm2,
        e_minus_norm2: ds.e_minus_norm2,
        div_e_plus: div_e(&sj, &chr, 1.0),
        div_e_minus: div_e(&sj, &chr, -1.0),
        dstar_xi: dstar_xi(&sj, &chr),
        dilaton_eom: dilaton_eom_residual(&sj, &chr),
    })
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

/// Errors raised while loading a scenario description from disk.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario file `{path}`: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn default_orientation() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DilatonSection {
    #[serde(rename = "X")]
    x: Vec<String>,
    xi: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HypersurfaceSection {
    coords: Vec<String>,
    embedding: Vec<String>,
    #[serde(default = "default_orientation")]
    orientation: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    dim: usize,
    coords: Vec<String>,
    #[serde(default)]
    domain: BTreeMap<String, [f64; 2]>,
    signature: [usize; 2],
    metric: Vec<Vec<String>>,
    #[serde(default, rename = "H")]
    h: BTreeMap<String, String>,
    #[serde(default)]
    dilaton: Option<DilatonSection>,
    #[serde(default)]
    hypersurface: Option<HypersurfaceSection>,
    points: Vec<Vec<f64>>,
}

fn parse_flux_key(name: &str, key: &str) -> Result<(usize, usize, usize), FieldError> {
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    let bad = || {
        FieldError::Validation(format!(
            "scenario `{name}`: flux key `{key}` must be three comma-separated indices like \"0,1,2\""
        ))
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut idx = [0usize; 3];
    for (slot, part) in idx.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| bad())?;
    }
    Ok((idx[0], idx[1], idx[2]))
}

/// Sampling bound on `|dH|` above which a scenario file is rejected.
const DH_CLOSURE_TOL: f64 = 1e-8;

/// Load and validate a scenario description.
///
/// Beyond the schema, this checks — at every declared sample point — that
/// the metric is nondegenerate with the declared signature, that the flux
/// three-form is closed, and that the embedding (when present) is an
/// immersion with non-null normal.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|source| ScenarioError::Json {
            path: path.display().to_string(),
            source,
        })?;
    scenario_from_file(file).map_err(ScenarioError::from)
}

fn scenario_from_file(file: ScenarioFile) -> Result<Scenario, FieldError> {
    let name = file.name.clone();
    if file.coords.len() != file.dim {
        return Err(FieldError::Validation(format!(
            "scenario `{name}`: `coords` lists {} names but `dim` is {}",
            file.coords.len(),
            file.dim
        )));
    }
    let coord_refs: Vec<&str> = file.coords.iter().map(String::as_str).collect();
    let mut chart = Chart::new(&name, &coord_refs)?;
    for (coord, [lo, hi]) in &file.domain {
        chart = chart.with_domain(coord, *lo, *hi)?;
    }

    if file.metric.len() != file.dim {
        return Err(FieldError::Validation(format!(
            "scenario `{name}`: `metric` must be a {0}x{0} array of expressions",
            file.dim
        )));
    }
    let rows: Vec<Vec<&str>> = file
        .metric
        .iter()
        .map(|r| r.iter().map(String::as_str).collect())
        .collect();
    let metric = MetricField::from_rows(&chart, &rows, (file.signature[0], file.signature[1]))?;

    let mut h_components = Vec::new();
    for (key, expr) in &file.h {
        h_components.push((parse_flux_key(&name, key)?, expr.as_str()));
    }
    let h_field = ThreeFormField::new(&chart, &h_components)?;

    let dilaton = match &file.dilaton {
        Some(sec) => DilatonField::new(
            &chart,
            &sec.x.iter().map(String::as_str).collect::<Vec<_>>(),
            &sec.xi.iter().map(String::as_str).collect::<Vec<_>>(),
        )?,
        None => DilatonField::zero(file.dim),
    };

    let ambient = AmbientStructure::new(chart.clone(), metric, h_field, dilaton)?;

    let embedding = match &file.hypersurface {
        Some(sec) => {
            let surf_refs: Vec<&str> = sec.coords.iter().map(String::as_str).collect();
            let sigma_chart = Chart::new(&format!("{name}_hypersurface"), &surf_refs)?;
            let comp_refs: Vec<&str> = sec.embedding.iter().map(String::as_str).collect();
            Some(EmbeddingMap::new(
                sigma_chart,
                chart,
                &comp_refs,
                sec.orientation,
            )?)
        }
        None => None,
    };

    if file.points.is_empty() {
        return Err(FieldError::Validation(format!(
            "scenario `{name}`: at least one sample point is required"
        )));
    }

    let scenario = Scenario {
        name,
        ambient,
        embedding,
        sample_plan: SamplePlan::Explicit(file.points),
        tol_override: None,
        fundamental: None,
    };

    for point in scenario.sample_points() {
        let pa = scenario.ambient_point(&point)?;
        let sj = scenario.ambient.jets_at(&pa)?;
        let dh = sj.h_contractions().dh.max_abs();
        if dh > DH_CLOSURE_TOL {
            return Err(FieldError::Validation(format!(
                "dH residual {dh:.3} at point {pa:?}; the flux three-form must be closed"
            )));
        }
        if let Some(emb) = &scenario.embedding {
            induce(&scenario.ambient, emb, &point)?;
        }
    }
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn registry_contains_the_documented_scenarios() {
        let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        for expected in [
            "flat_trivial_3",
            "flat_trivial_4",
            "sphere_in_flat_3",
            "sphere_in_flat_4",
            "hyperplane_with_flux",
            "torus_constant_H_2",
            "linear_dilaton",
            "neutral_flat_example_m2",
            "neutral_flat_example_m3",
            "random_poly_42_3",
            "random_poly_42_4",
        ] {
            assert!(names.iter().any(|n| n == expected), "missing {expected}");
        }
    }

    #[test]
    fn every_builtin_evaluates_at_its_sample_points() {
        for sc in builtin_scenarios() {
            let points = sc.sample_points();
            assert!(!points.is_empty(), "{} has no sample points", sc.name);
            for p in &points {
                let pa = sc.ambient_point(p).unwrap();
                sc.ambient
                    .jets_at(&pa)
                    .unwrap_or_else(|e| panic!("{} at {:?}: {e}", sc.name, p));
                if let Some(emb) = &sc.embedding {
                    induce(&sc.ambient, emb, p)
                        .unwrap_or_else(|e| panic!("{} induce at {:?}: {e}", sc.name, p));
                }
            }
        }
    }

    #[test]
    fn find_scenario_synthesises_random_names() {
        assert!(find_scenario("sphere_in_flat_3").is_some());
        assert!(find_scenario("random_poly_7_3").is_some());
        assert_eq!(find_scenario("random_poly_7_3").unwrap().name, "random_poly_7_3");
        assert!(find_scenario("random_poly_7_2").is_none()); // dimension too small
        assert!(find_scenario("no_such_scenario").is_none());
    }

    #[test]
    fn identities_suite_passes_on_random_scenarios() {
        for sc in [random_poly(42, 3).unwrap(), random_poly(42, 4).unwrap()] {
            let reports = run_suite(Suite::Identities, &sc, None);
            assert_eq!(reports.len(), 5);
            for rep in &reports {
                assert!(rep.pass, "{}", rep.human_table());
                assert_eq!(rep.suite, "identities");
                // Embedded scenario: ambient identities plus Gauss/Codazzi.
                assert_eq!(rep.entries.len(), 16);
            }
        }
    }

    #[test]
    fn flatness_suite_passes_on_the_neutral_example() {
        let sc = neutral_flat_example(2).unwrap();
        let reports = run_suite(Suite::Flatness, &sc, None);
        assert_eq!(reports.len(), 3);
        for rep in &reports {
            assert!(rep.pass, "{}", rep.human_table());
        }
    }

    #[test]
    fn flatness_suite_flags_the_flux_torus() {
        let sc = torus_constant_h(2.0).unwrap();
        let reports = run_suite(Suite::Flatness, &sc, None);
        assert!(!reports.is_empty());
        for rep in &reports {
            assert!(!rep.pass);
            let riemann = rep
                .entries
                .iter()
                .find(|e| e.name == "max_riemann")
                .expect("the canonical curvature bound is reported");
            assert!(!riemann.pass);
            assert!(riemann.residual > 0.1, "expected a visible obstruction");
        }
    }

    #[test]
    fn constraints_suite_passes_on_embedded_builtins() {
        for name in [
            "sphere_in_flat_3",
            "sphere_in_flat_4",
            "hyperplane_with_flux",
            "linear_dilaton",
        ] {
            let sc = find_scenario(name).unwrap();
            let reports = run_suite(Suite::Constraints, &sc, None);
            assert!(!reports.is_empty(), "{name} yields constraint reports");
            for rep in &reports {
                assert!(rep.pass, "{name}: {}", rep.human_table());
                // Exact pairs throughout the registry: energy, momentum and
                // the three classical agreements are all present.
                assert_eq!(rep.entries.len(), 5, "{name}: {}", rep.human_table());
            }
        }
        // Scenarios without an embedding have no constraint content.
        assert!(run_suite(Suite::Constraints, &flat_trivial(3).unwrap(), None).is_empty());
    }

    #[test]
    fn fundamental_suite_checks_sphere_data_and_reconstruction() {
        let sc = find_scenario("sphere_in_flat_3").unwrap();
        let reports = run_suite(Suite::Fundamental, &sc, None);
        // One per sample point plus the grid-level reconstruction report.
        assert_eq!(reports.len(), sc.sample_points().len() + 1);
        for rep in &reports {
            assert!(rep.pass, "{}", rep.human_table());
        }
        let grid_rep = reports.last().unwrap();
        assert!(grid_rep
            .entries
            .iter()
            .any(|e| e.name == "reconstruction_path_residual"));
        assert!(grid_rep
            .entries
            .iter()
            .any(|e| e.name == "recovered_second_form"));
    }

    #[test]
    fn all_suite_completes_on_every_builtin() {
        let start = Instant::now();
        for sc in builtin_scenarios() {
            let reports = run_suite(Suite::All, &sc, None);
            assert!(!reports.is_empty(), "{} produced no reports", sc.name);
            for rep in &reports {
                for e in &rep.entries {
                    assert!(
                        e.residual.is_nan() || e.residual.is_finite(),
                        "{}: non-finite residual in {}",
                        sc.name,
                        e.name
                    );
                    assert!(
                        !e.residual.is_nan(),
                        "{}: evaluation error: {}",
                        sc.name,
                        e.name
                    );
                }
            }
        }
        assert!(
            start.elapsed() < Duration::from_secs(60),
            "registry run took {:?}",
            start.elapsed()
        );
    }

    #[test]
    fn reports_are_deterministic_across_rebuilds() {
        let a = run_suite(Suite::Identities, &random_poly(7, 3).unwrap(), None);
        let b = run_suite(Suite::Identities, &random_poly(7, 3).unwrap(), None);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(
            random_poly(7, 4).unwrap().sample_points(),
            random_poly(7, 4).unwrap().sample_points()
        );
    }

    #[test]
    fn reseeding_moves_sample_points() {
        let base = random_poly(42, 3).unwrap();
        let same = random_poly(42, 3).unwrap();
        assert_eq!(base.sample_points(), same.sample_points());
        let moved = random_poly(42, 3).unwrap().reseeded(1);
        assert_ne!(base.sample_points(), moved.sample_points());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [
            Suite::Identities,
            Suite::Flatness,
            Suite::Constraints,
            Suite::Fundamental,
            Suite::All,
        ] {
            assert_eq!(Suite::from_str(s.name()).unwrap(), s);
        }
        let err = Suite::from_str("everything").unwrap_err();
        assert!(err.to_string().contains("unknown suite"));
    }

    #[test]
    fn point_report_matches_frozen_flux_values() {
        let sc = find_scenario("hyperplane_with_flux").unwrap();
        let rep = point_report(&sc, &[0.2, -0.3, 0.5]).unwrap();
        assert!((rep.h_norm2 - 216.0).abs() < 1e-10);
        assert!((rep.gen_scalar + 18.0).abs() < 1e-10);
        assert!(rep.human_table().contains("generalised scalar curvature"));

        let torus = find_scenario("torus_constant_H_2").unwrap();
        let rep = point_report(&torus, &[1.0, 2.0, 3.0]).unwrap();
        assert!((rep.gen_scalar + 2.0).abs() < 1e-12);
    }

    const PLANE_SCENARIO: &str = r#"{
        "name": "flux_plane_file",
        "dim": 3,
        "coords": ["x", "y", "z"],
        "signature": [3, 0],
        "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
        "H": {"0,1,2": "6"},
        "dilaton": {"X": ["0", "0", "0"], "xi": ["0", "0", "0"]},
        "hypersurface": {
            "coords": ["u", "v"],
            "embedding": ["u", "v", "0"],
            "orientation": 1
        },
        "points": [[0.3, -0.2], [1.0, 0.7]]
    }"#;

    #[test]
    fn scenario_files_load_and_run() {
        let path = write_temp("gcurv_scenario_ok.json", PLANE_SCENARIO);
        let sc = load_scenario(&path).unwrap();
        assert_eq!(sc.name, "flux_plane_file");
        assert_eq!(sc.ambient.dim(), 3);
        let reports = run_suite(Suite::Identities, &sc, None);
        assert_eq!(reports.len(), 2);
        for rep in &reports {
            assert!(rep.pass, "{}", rep.human_table());
        }
    }

    #[test]
    fn scenario_files_respect_domains() {
        let text = r#"{
            "name": "half_space",
            "dim": 2,
            "coords": ["u", "v"],
            "domain": {"u": [0.0, 10.0]},
            "signature": [2, 0],
            "metric": [["1/u", "0"], ["0", "1"]],
            "points": [[2.0, 0.0]]
        }"#;
        let path = write_temp("gcurv_scenario_domain.json", text);
        let sc = load_scenario(&path).unwrap();
        let err = sc.ambient.jets_at(&[-1.0, 0.0]).unwrap_err();
        assert!(matches!(err, FieldError::OutsideDomain { .. }));
    }

    #[test]
    fn scenario_file_schema_errors_name_the_problem() {
        // Missing metric field.
        let path = write_temp(
            "gcurv_scenario_missing.json",
            r#"{"name": "m", "dim": 2, "coords": ["x", "y"], "signature": [2, 0], "points": [[0, 0]]}"#,
        );
        let err = load_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("metric"), "got: {err}");

        // Mis-shaped coords list.
        let path = write_temp(
            "gcurv_scenario_coords.json",
            r#"{"name": "m", "dim": 3, "coords": ["x", "y"], "signature": [3, 0],
                "metric": [["1"]], "points": [[0, 0, 0]]}"#,
        );
        let err = load_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("coords"), "got: {err}");

        // Malformed flux key.
        let path = write_temp(
            "gcurv_scenario_key.json",
            r#"{"name": "m", "dim": 3, "coords": ["x", "y", "z"], "signature": [3, 0],
                "metric": [["1","0","0"],["0","1","0"],["0","0","1"]],
                "H": {"0;1;2": "1"}, "points": [[0, 0, 0]]}"#,
        );
        let err = load_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("flux key"), "got: {err}");
    }

    #[test]
    fn scenario_files_reject_non_closed_flux() {
        // In four dimensions H = w dx^dy^dz has (dH)_{xyzw} = -1.
        let text = r#"{
            "name": "open_flux",
            "dim": 4,
            "coords": ["x", "y", "z", "w"],
            "signature": [4, 0],
            "metric": [["1","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]],
            "H": {"0,1,2": "w"},
            "points": [[0.1, 0.2, 0.3, 0.4]]
        }"#;
        let path = write_temp("gcurv_scenario_dh.json", text);
        let err = load_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("dH residual"), "got: {err}");
    }

    #[test]
    fn scenario_files_reject_wrong_signature_and_bad_embeddings() {
        let text = r#"{
            "name": "wrong_sig",
            "dim": 3,
            "coords": ["x", "y", "z"],
            "signature": [2, 1],
            "metric": [["1","0","0"],["0","1","0"],["0","0","1"]],
            "points": [[0, 0, 0]]
        }"#;
        let path = write_temp("gcurv_scenario_sig.json", text);
        let err = load_scenario(&path).unwrap_err();
        assert!(
            matches!(err, ScenarioError::Field(FieldError::SignatureMismatch { .. })),
            "got: {err}"
        );

        let text = r#"{
            "name": "degenerate_map",
            "dim": 3,
            "coords": ["x", "y", "z"],
            "signature": [3, 0],
            "metric": [["1","0","0"],["0","1","0"],["0","0","1"]],
            "hypersurface": {"coords": ["u", "v"], "embedding": ["u", "u", "0"]},
            "points": [[0.1, 0.2]]
        }"#;
        let path = write_temp("gcurv_scenario_rank.json", text);
        let err = load_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("rank-deficient"), "got: {err}");
    }
}
