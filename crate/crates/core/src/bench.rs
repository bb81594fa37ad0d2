//! Scenario harness: reads a TOML description of an experiment family,
//! runs the method x parameter matrix through the full pipeline and emits
//! CSV plus aligned text tables.
//!
//! Every experiment family has a built-in preset (`tab1` .. `tab_mu_holes`),
//! see [`preset`] and [`PRESET_NAMES`]. Scenario outputs are desk-scale
//! analogues: iteration counts are meaningful as trends across `N`, `gamma`
//! or coefficient contrast, not as absolute values of any larger-scale study.

use crate::assembly::{CoefficientField, CoefficientPattern, DofMap, System};
use crate::coarse::{
    assemble_coarse, build_geneo_columns, build_local_problems, build_nk_columns,
    build_snk_columns, geneo_all, CoarseKind, CoarseSpace, ColOrigin, GeneoSpectrum, LocalProblem,
};
use crate::decomposition::{
    build_partition_of_unity, compute_k0, compute_k1, extend_overlap, partition_rcb,
    partition_strips, OverlappingDecomposition, PartitionOfUnity,
};
use crate::mesh::{build_beam_mesh, tag_boundary, BcSpec, BeamGeometry, BoundaryTags, HoleSpec, Mesh};
use crate::solver::{
    estimate_extremes, gmres_solve, GmresOptions, Method, Preconditioner, SpectralEstimate,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub bc: BcSection,
    #[serde(default)]
    pub coefficients: CoefficientSection,
    pub decomposition: DecompositionSection,
    #[serde(default)]
    pub coarse: CoarseSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Run the (N, gamma, value) tuples concurrently; each tuple owns its
    /// whole state. Off by default, where tuples run in order.
    #[serde(default)]
    pub concurrent: bool,
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// Beam length in unit cubes. Ignored when `weak_scaling` is set.
    #[serde(default = "default_length")]
    pub length_units: usize,
    /// Grow the beam with the subdomain count: `L = max(1, N / 2)`.
    #[serde(default)]
    pub weak_scaling: bool,
    /// Cells per unit length (the mesh spacing is its inverse).
    #[serde(default = "default_cells")]
    pub cells_per_unit: usize,
    /// Carve the standard hole family out of the beam.
    #[serde(default)]
    pub holes: bool,
    #[serde(default = "default_hole_width")]
    pub hole_width_cells: usize,
}

fn default_length() -> usize {
    2
}
fn default_cells() -> usize {
    8
}
fn default_hole_width() -> usize {
    1
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSection {
    #[serde(default)]
    pub preset: BcPreset,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcPreset {
    #[default]
    AllDirichlet,
    MixedLateral,
}

impl BcPreset {
    pub fn spec(self) -> BcSpec {
        match self {
            BcPreset::AllDirichlet => BcSpec::all_dirichlet(),
            BcPreset::MixedLateral => BcSpec::mixed_lateral(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    #[serde(default)]
    pub pattern: PatternName,
    /// Sweep of the pattern parameter (ignored for `uniform`).
    #[serde(default = "default_values")]
    pub values: Vec<f64>,
    /// Sweep of the mass scaling.
    #[serde(default = "default_gammas")]
    pub gamma: Vec<f64>,
}

impl Default for CoefficientSection {
    fn default() -> Self {
        Self { pattern: PatternName::Uniform, values: default_values(), gamma: default_gammas() }
    }
}

fn default_values() -> Vec<f64> {
    vec![1.0]
}
fn default_gammas() -> Vec<f64> {
    vec![1e-3]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternName {
    #[default]
    Uniform,
    LayersEps,
    LayersMu,
    HolesEps,
    HolesMu,
}

impl PatternName {
    fn pattern(self, value: f64) -> CoefficientPattern {
        match self {
            PatternName::Uniform => CoefficientPattern::Uniform,
            PatternName::LayersEps => CoefficientPattern::LayersEps { value },
            PatternName::LayersMu => CoefficientPattern::LayersMu { value },
            PatternName::HolesEps => CoefficientPattern::HolesEps { value },
            PatternName::HolesMu => CoefficientPattern::HolesMu { value },
        }
    }

    /// The (eps, mu) summary reported in result rows.
    fn coefficient_summary(self, value: f64) -> (f64, f64) {
        match self {
            PatternName::Uniform => (1.0, 1.0),
            PatternName::LayersEps | PatternName::HolesEps => (value, 1.0),
            PatternName::LayersMu | PatternName::HolesMu => (1.0, value),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSection {
    #[serde(default)]
    pub partition: PartitionName,
    pub subdomains: Vec<usize>,
    #[serde(default = "default_overlap")]
    pub overlap_layers: usize,
}

fn default_overlap() -> usize {
    1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionName {
    #[default]
    Strips,
    Rcb,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseSection {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_prune_tol")]
    pub prune_tol: f64,
}

impl Default for CoarseSection {
    fn default() -> Self {
        Self { tau: default_tau(), delta: default_delta(), prune_tol: default_prune_tol() }
    }
}

fn default_tau() -> f64 {
    10.0
}
fn default_delta() -> f64 {
    crate::coarse::GEVP_DELTA
}
fn default_prune_tol() -> f64 {
    crate::coarse::PRUNE_TOL
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_maxit")]
    pub max_iterations: usize,
    /// 0 disables restarting (full GMRES).
    #[serde(default)]
    pub restart: usize,
    /// Estimate extreme eigenvalues for every row.
    #[serde(default)]
    pub estimate_spectrum: bool,
    /// Problems up to this size use the dense spectrum path.
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            tol: default_tol(),
            max_iterations: default_maxit(),
            restart: 0,
            estimate_spectrum: false,
            dense_limit: default_dense_limit(),
        }
    }
}

fn default_methods() -> Vec<String> {
    vec!["as".into(), "as-snk".into(), "as-snk-geneo".into()]
}
fn default_tol() -> f64 {
    1e-6
}
fn default_maxit() -> usize {
    1000
}
fn default_dense_limit() -> usize {
    4000
}

impl ScenarioConfig {
    pub fn methods(&self) -> Result<Vec<Method>> {
        self.solver.methods.iter().map(|s| Method::parse(s)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.decomposition.subdomains.is_empty() {
            return Err(Error::Config("decomposition.subdomains must not be empty".into()));
        }
        if self.coefficients.gamma.is_empty() || self.coefficients.values.is_empty() {
            return Err(Error::Config("coefficient sweeps must not be empty".into()));
        }
        self.methods()?;
        Ok(())
    }

    fn geometry_for(&self, n_subdomains: usize) -> Result<BeamGeometry> {
        let length = if self.geometry.weak_scaling {
            (n_subdomains / 2).max(1)
        } else {
            self.geometry.length_units
        };
        let holes = if self.geometry.holes {
            HoleSpec::Beam { width_cells: self.geometry.hole_width_cells }
        } else {
            HoleSpec::None
        };
        BeamGeometry::new(length, self.geometry.cells_per_unit, holes)
    }
}

/// Parses a TOML scenario; syntax errors keep their line/column diagnostics.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let config: ScenarioConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Loads a scenario from a file path or from `preset:<name>`.
pub fn load_config(source: &str) -> Result<ScenarioConfig> {
    if let Some(name) = source.strip_prefix("preset:") {
        return preset(name);
    }
    let text = std::fs::read_to_string(source)
        .map_err(|e| Error::Config(format!("cannot read {source}: {e}")))?;
    parse_config(&text)
}

pub const PRESET_NAMES: [&str; 9] = [
    "tab1",
    "tab2",
    "tab3",
    "tab4",
    "tab_gamma",
    "tab_eps_layers",
    "tab_mu_layers",
    "tab_eps_holes",
    "tab_mu_holes",
];

/// Built-in desk-scale scenario for each experiment family.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let all_methods: Vec<String> =
        ["as", "as-snk", "as-snk-geneo", "as-nk", "as-nk-geneo"].map(String::from).to_vec();
    let weak = |name: &str, holes: bool, bc: BcPreset| ScenarioConfig {
        scenario: ScenarioSection { name: name.into(), seed: default_seed(), concurrent: false },
        geometry: GeometrySection {
            length_units: 2,
            weak_scaling: true,
            cells_per_unit: 8,
            holes,
            hole_width_cells: 1,
        },
        bc: BcSection { preset: bc },
        coefficients: CoefficientSection::default(),
        decomposition: DecompositionSection {
            partition: PartitionName::Strips,
            subdomains: vec![2, 4, 8],
            overlap_layers: 1,
        },
        coarse: CoarseSection::default(),
        solver: SolverSection { methods: all_methods.clone(), ..SolverSection::default() },
    };
    let sweep = |name: &str, pattern: PatternName, holes: bool| {
        let mut config = weak(name, holes, BcPreset::MixedLateral);
        config.geometry.weak_scaling = false;
        config.geometry.length_units = 2;
        config.decomposition.subdomains = vec![4];
        config.coefficients.pattern = pattern;
        config.coefficients.values =
            vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4];
        config
    };
    match name {
        "tab1" => Ok(weak("tab1", false, BcPreset::AllDirichlet)),
        "tab2" => Ok(weak("tab2", false, BcPreset::MixedLateral)),
        "tab3" => Ok(weak("tab3", true, BcPreset::MixedLateral)),
        "tab4" => {
            // strong scaling: fixed geometry, coordinate-bisection partition
            let mut config = weak("tab4", true, BcPreset::MixedLateral);
            config.geometry.weak_scaling = false;
            config.geometry.length_units = 4;
            config.decomposition.partition = PartitionName::Rcb;
            config.decomposition.subdomains = vec![2, 4, 8];
            Ok(config)
        }
        "tab_gamma" => {
            let mut config = weak("tab_gamma", true, BcPreset::MixedLateral);
            config.geometry.weak_scaling = false;
            config.geometry.length_units = 2;
            config.decomposition.subdomains = vec![4];
            config.coefficients.gamma = vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2];
            Ok(config)
        }
        "tab_eps_layers" => Ok(sweep("tab_eps_layers", PatternName::LayersEps, false)),
        "tab_mu_layers" => Ok(sweep("tab_mu_layers", PatternName::LayersMu, false)),
        "tab_eps_holes" => Ok(sweep("tab_eps_holes", PatternName::HolesEps, false)),
        "tab_mu_holes" => Ok(sweep("tab_mu_holes", PatternName::HolesMu, false)),
        other => Err(Error::Config(format!(
            "unknown preset '{other}' (available: {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// One solve outcome, one CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub method: Method,
    pub n_subdomains: usize,
    pub gamma: f64,
    pub eps: f64,
    pub mu: f64,
    pub dofs: usize,
    pub nk: usize,
    pub snk: usize,
    pub geneo: usize,
    pub iterations: usize,
    pub converged: bool,
    pub kappa: Option<f64>,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

/// Theorem bound check for one enriched run.
#[derive(Clone, Debug)]
pub struct BoundCheck {
    pub scenario: String,
    pub method: Method,
    pub n_subdomains: usize,
    pub gamma: f64,
    pub value: f64,
    pub k0: usize,
    pub k1: usize,
    pub tau: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub bound: f64,
    pub margin: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Check the spectral bound for every GenEO-enriched row that fits the
    /// dense path.
    pub verify_bounds: bool,
    /// Zero out wall-clock fields so identical runs emit identical bytes.
    pub deterministic: bool,
}

#[derive(Debug, Default)]
pub struct ScenarioOutcome {
    pub rows: Vec<ResultRow>,
    pub bounds: Vec<BoundCheck>,
}

/// Assembled problem for one coefficient configuration.
pub struct ProblemContext {
    pub geometry: BeamGeometry,
    pub mesh: Mesh,
    pub tags: BoundaryTags,
    pub coeff: CoefficientField,
    pub system: System,
}

/// Builds mesh, tags, coefficients and the assembled system. Hole-located
/// coefficient patterns are painted over the standard hole family of
/// `paint_width_cells`, whether or not the mesh itself is holed.
pub fn build_problem_with_paint(
    geometry: &BeamGeometry,
    bc: &BcSpec,
    pattern: CoefficientPattern,
    paint_width_cells: usize,
    gamma: f64,
) -> Result<ProblemContext> {
    let mesh = build_beam_mesh(geometry)?;
    let tags = tag_boundary(&mesh, bc);
    let boxes = BeamGeometry::beam_hole_boxes(
        geometry.length_units,
        geometry.cells_per_unit,
        paint_width_cells,
    )
    .unwrap_or_default();
    let coeff = CoefficientField::from_pattern(&mesh, pattern, &boxes, gamma)?;
    let system = System::build(&mesh, &coeff, &tags)?;
    Ok(ProblemContext { geometry: geometry.clone(), mesh, tags, coeff, system })
}

/// [`build_problem_with_paint`] with the paint width taken from the geometry's
/// own hole spec (or the default width when the beam is unholed).
pub fn build_problem(
    geometry: &BeamGeometry,
    bc: &BcSpec,
    pattern: CoefficientPattern,
    gamma: f64,
) -> Result<ProblemContext> {
    let width = match geometry.holes {
        HoleSpec::Beam { width_cells } => width_cells,
        _ => default_hole_width(),
    };
    build_problem_with_paint(geometry, bc, pattern, width, gamma)
}

/// Decomposition plus per-subdomain operators for one subdomain count.
pub struct SubdomainContext {
    pub decomp: OverlappingDecomposition,
    pub pou: PartitionOfUnity,
    pub locals: Arc<Vec<LocalProblem>>,
    pub k0: usize,
    pub k1: usize,
}

pub fn decompose_problem(
    problem: &ProblemContext,
    partition: PartitionName,
    n_subdomains: usize,
    overlap_layers: usize,
) -> Result<SubdomainContext> {
    let ownership = match partition {
        PartitionName::Strips => partition_strips(&problem.mesh, n_subdomains)?,
        PartitionName::Rcb => partition_rcb(&problem.mesh, n_subdomains)?,
    };
    let edge_map = DofMap::edges(&problem.tags);
    let decomp = extend_overlap(&problem.mesh, &edge_map, &ownership, overlap_layers)?;
    let pou = build_partition_of_unity(&decomp);
    let locals = build_local_problems(
        &problem.mesh,
        &problem.coeff,
        &problem.tags,
        &problem.system.a,
        &problem.system.gradient,
        &decomp,
        &pou,
    )?;
    let k0 = compute_k0(&problem.system.a, &decomp);
    let k1 = compute_k1(&decomp);
    Ok(SubdomainContext { decomp, pou, locals: Arc::new(locals), k0, k1 })
}

/// Coarse spaces shared by the methods of one tuple group.
pub struct CoarseSet {
    pub spectra: Option<Vec<GeneoSpectrum>>,
    pub geneo_retained: usize,
    nk: Option<Arc<CoarseSpace>>,
    snk: Option<Arc<CoarseSpace>>,
    nk_geneo: Option<Arc<CoarseSpace>>,
    snk_geneo: Option<Arc<CoarseSpace>>,
    pub nk_size: usize,
    pub snk_size: usize,
}

impl CoarseSet {
    /// Builds exactly what the requested methods need.
    pub fn build(
        problem: &ProblemContext,
        sub: &SubdomainContext,
        methods: &[Method],
        coarse_cfg: &CoarseSection,
    ) -> Result<CoarseSet> {
        let a = &problem.system.a;
        let n = problem.system.n_dofs();
        let nk_cols = build_nk_columns(&problem.system.gradient);
        let snk_cols = build_snk_columns(&sub.locals, n);
        let nk_size = nk_cols.ncols();
        let snk_size = snk_cols.ncols();
        let needs = |m: Method| methods.contains(&m);
        let needs_geneo = methods.iter().any(|m| m.uses_geneo());
        let spectra = if needs_geneo {
            Some(geneo_all(&sub.locals, coarse_cfg.tau, coarse_cfg.delta)?)
        } else {
            None
        };
        let geneo_retained =
            spectra.as_ref().map(|s| s.iter().map(|g| g.n_retained()).sum()).unwrap_or(0);
        let geneo_cols = spectra
            .as_ref()
            .map(|s| build_geneo_columns(&sub.locals, s, n));

        let mut set = CoarseSet {
            spectra,
            geneo_retained,
            nk: None,
            snk: None,
            nk_geneo: None,
            snk_geneo: None,
            nk_size,
            snk_size,
        };
        if needs(Method::AsNk) {
            let space = assemble_coarse(
                CoarseKind::Nk,
                vec![(ColOrigin::Nk, nk_cols.clone())],
                a,
                coarse_cfg.prune_tol,
            )?;
            set.nk = Some(Arc::new(space));
        }
        if needs(Method::AsSnk) {
            let space = assemble_coarse(
                CoarseKind::Snk,
                vec![(ColOrigin::Snk, snk_cols.clone())],
                a,
                coarse_cfg.prune_tol,
            )?;
            set.snk = Some(Arc::new(space));
        }
        if needs(Method::AsNkGeneo) {
            let space = assemble_coarse(
                CoarseKind::NkGeneo,
                vec![
                    (ColOrigin::Nk, nk_cols.clone()),
                    (ColOrigin::Geneo, geneo_cols.clone().expect("spectra built")),
                ],
                a,
                coarse_cfg.prune_tol,
            )?;
            set.nk_geneo = Some(Arc::new(space));
        }
        if needs(Method::AsSnkGeneo) {
            let space = assemble_coarse(
                CoarseKind::SnkGeneo,
                vec![
                    (ColOrigin::Snk, snk_cols.clone()),
                    (ColOrigin::Geneo, geneo_cols.expect("spectra built")),
                ],
                a,
                coarse_cfg.prune_tol,
            )?;
            set.snk_geneo = Some(Arc::new(space));
        }
        Ok(set)
    }

    pub fn for_method(&self, method: Method) -> Option<Arc<CoarseSpace>> {
        match method {
            Method::Identity | Method::As => None,
            Method::AsNk => self.nk.clone(),
            Method::AsSnk => self.snk.clone(),
            Method::AsNkGeneo => self.nk_geneo.clone(),
            Method::AsSnkGeneo => self.snk_geneo.clone(),
        }
    }
}

/// Builds the preconditioner for one method from the shared contexts.
pub fn build_preconditioner(
    method: Method,
    a: Arc<crate::sparse::CsrMatrix>,
    sub: &SubdomainContext,
    coarse: &CoarseSet,
) -> Result<Preconditioner> {
    match method {
        Method::Identity => Ok(Preconditioner::identity(a.nrows())),
        Method::As => Ok(Preconditioner::one_level(a, sub.locals.clone())),
        _ => {
            let space = coarse
                .for_method(method)
                .ok_or_else(|| Error::Config(format!("coarse space for {method} not built")))?;
            Preconditioner::two_level(method, a, sub.locals.clone(), space)
        }
    }
}

/// Runs the whole scenario matrix; failures are recorded per row and the run
/// continues.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    run_scenario_with(config, &RunOptions::default()).map(|o| o.rows)
}

pub fn run_scenario_with(config: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioOutcome> {
    config.validate()?;
    let methods = config.methods()?;
    let mut outcome = ScenarioOutcome::default();
    if methods.is_empty() {
        return Ok(outcome);
    }
    let mut tuples = Vec::new();
    for &n_subdomains in &config.decomposition.subdomains {
        for &gamma in &config.coefficients.gamma {
            for &value in &config.coefficients.values {
                tuples.push((n_subdomains, gamma, value));
            }
        }
    }
    let work = |&(n_subdomains, gamma, value): &(usize, f64, f64)| {
        run_tuple(config, opts, &methods, n_subdomains, gamma, value)
    };
    let results: Vec<(Vec<ResultRow>, Vec<BoundCheck>)> = if config.scenario.concurrent {
        use rayon::prelude::*;
        tuples.par_iter().map(work).collect()
    } else {
        tuples.iter().map(work).collect()
    };
    for (rows, bounds) in results {
        outcome.rows.extend(rows);
        outcome.bounds.extend(bounds);
    }
    sort_rows(&mut outcome.rows);
    Ok(outcome)
}

/// One (N, gamma, value) tuple: shared setup once, then every method.
fn run_tuple(
    config: &ScenarioConfig,
    opts: &RunOptions,
    methods: &[Method],
    n_subdomains: usize,
    gamma: f64,
    value: f64,
) -> (Vec<ResultRow>, Vec<BoundCheck>) {
    let bc = config.bc.preset.spec();
    let pattern = config.coefficients.pattern.pattern(value);
    let (eps, mu) = config.coefficients.pattern.coefficient_summary(value);
    let mut rows = Vec::new();
    let mut bounds = Vec::new();
    let setup_start = Instant::now();
    let shared = config.geometry_for(n_subdomains).and_then(|geometry| {
        let problem = build_problem_with_paint(
            &geometry,
            &bc,
            pattern,
            config.geometry.hole_width_cells,
            gamma,
        )?;
        let sub = decompose_problem(
            &problem,
            config.decomposition.partition,
            n_subdomains,
            config.decomposition.overlap_layers,
        )?;
        let coarse = CoarseSet::build(&problem, &sub, methods, &config.coarse)?;
        Ok((problem, sub, coarse))
    });
    let (problem, sub, coarse) = match shared {
        Ok(t) => t,
        Err(e) => {
            eprintln!(
                "[{}] N={n_subdomains} gamma={gamma:.1e} value={value:.1e}: setup failed: {e}",
                config.scenario.name
            );
            for &method in methods {
                rows.push(failed_row(config, method, n_subdomains, gamma, eps, mu));
            }
            return (rows, bounds);
        }
    };
    let shared_setup = setup_start.elapsed().as_secs_f64();
    let a = Arc::new(problem.system.a.clone());

    for &method in methods {
        let row = run_one(
            config,
            opts,
            &problem,
            &sub,
            &coarse,
            a.clone(),
            method,
            n_subdomains,
            gamma,
            value,
            eps,
            mu,
            shared_setup,
            &mut bounds,
        );
        match row {
            Ok(row) => rows.push(row),
            Err(e) => {
                eprintln!(
                    "[{}] {method} N={n_subdomains} gamma={gamma:.1e}: {e}",
                    config.scenario.name
                );
                rows.push(failed_row(config, method, n_subdomains, gamma, eps, mu));
            }
        }
    }
    (rows, bounds)
}

fn failed_row(
    config: &ScenarioConfig,
    method: Method,
    n_subdomains: usize,
    gamma: f64,
    eps: f64,
    mu: f64,
) -> ResultRow {
    ResultRow {
        scenario: config.scenario.name.clone(),
        method,
        n_subdomains,
        gamma,
        eps,
        mu,
        dofs: 0,
        nk: 0,
        snk: 0,
        geneo: 0,
        iterations: 0,
        converged: false,
        kappa: None,
        setup_seconds: 0.0,
        solve_seconds: 0.0,
    }
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    config: &ScenarioConfig,
    opts: &RunOptions,
    problem: &ProblemContext,
    sub: &SubdomainContext,
    coarse: &CoarseSet,
    a: Arc<crate::sparse::CsrMatrix>,
    method: Method,
    n_subdomains: usize,
    gamma: f64,
    value: f64,
    eps: f64,
    mu: f64,
    shared_setup: f64,
    bounds: &mut Vec<BoundCheck>,
) -> Result<ResultRow> {
    let setup_start = Instant::now();
    let preconditioner = build_preconditioner(method, a.clone(), sub, coarse)?;
    let setup_seconds = shared_setup + setup_start.elapsed().as_secs_f64();

    let gmres_opts = GmresOptions {
        tol: config.solver.tol,
        max_iterations: config.solver.max_iterations,
        restart: (config.solver.restart > 0).then_some(config.solver.restart),
    };
    let (_, report) = gmres_solve(&problem.system.a, &problem.system.rhs, &preconditioner, &gmres_opts);

    // The condition number theorem covers the split near-kernel plus GenEO
    // coarse space; the plain NK variants fall outside it (and do violate
    // the bound in practice), so only AS-SNK-GenEO rows are checked.
    let wants_bound = opts.verify_bounds
        && method == Method::AsSnkGeneo
        && problem.system.n_dofs() <= config.solver.dense_limit;
    let spectral: Option<SpectralEstimate> = if config.solver.estimate_spectrum || wants_bound {
        Some(estimate_extremes(
            &problem.system.a,
            &preconditioner,
            config.solver.dense_limit,
            config.scenario.seed,
        )?)
    } else {
        None
    };
    if wants_bound {
        let est = spectral.expect("spectrum was just computed");
        let tau = config.coarse.tau;
        let bound = (1.0 + sub.k1 as f64 * tau) * sub.k0 as f64;
        let lower = 1.0 / (1.0 + sub.k1 as f64 * tau);
        let tol = 1e-6;
        let ok = est.lambda_max <= sub.k0 as f64 + tol && est.lambda_min >= lower - tol;
        bounds.push(BoundCheck {
            scenario: config.scenario.name.clone(),
            method,
            n_subdomains,
            gamma,
            value,
            k0: sub.k0,
            k1: sub.k1,
            tau,
            lambda_min: est.lambda_min,
            lambda_max: est.lambda_max,
            kappa: est.kappa,
            bound,
            margin: bound - est.kappa,
            ok,
        });
    }

    Ok(ResultRow {
        scenario: config.scenario.name.clone(),
        method,
        n_subdomains,
        gamma,
        eps,
        mu,
        dofs: problem.system.n_dofs(),
        nk: coarse.nk_size,
        snk: coarse.snk_size,
        geneo: if method.uses_geneo() { coarse.geneo_retained } else { 0 },
        iterations: report.iterations,
        converged: report.converged,
        kappa: spectral.map(|s| s.kappa),
        setup_seconds: if opts.deterministic { 0.0 } else { setup_seconds },
        solve_seconds: if opts.deterministic { 0.0 } else { report.solve_seconds },
    })
}

/// Runs the scenario with bound verification enabled and returns the checks.
pub fn verify_bounds(config: &ScenarioConfig) -> Result<Vec<BoundCheck>> {
    let opts = RunOptions { verify_bounds: true, deterministic: false };
    Ok(run_scenario_with(config, &opts)?.bounds)
}

fn method_order(m: Method) -> usize {
    Method::ALL.iter().position(|&x| x == m).unwrap()
}

/// Sort by (scenario, method, N, gamma, value).
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        (a.scenario.as_str(), method_order(a.method), a.n_subdomains)
            .cmp(&(b.scenario.as_str(), method_order(b.method), b.n_subdomains))
            .then(a.gamma.total_cmp(&b.gamma))
            .then(a.eps.total_cmp(&b.eps))
            .then(a.mu.total_cmp(&b.mu))
    });
}

pub const CSV_HEADER: &str =
    "scenario,method,N,gamma,eps,mu,dofs,nk,snk,geneo,iters,converged,kappa,setup_s,solve_s";

/// Writes the fixed-header CSV.
pub fn emit_csv<W: Write>(rows: &[ResultRow], out: &mut W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))
        .map_err(|e| Error::Config(format!("csv write: {e}")))?;
    for r in rows {
        let kappa = r.kappa.map(|k| format!("{k:.6e}")).unwrap_or_default();
        w.write_record([
            r.scenario.as_str(),
            &r.method.to_string(),
            &r.n_subdomains.to_string(),
            &format!("{:e}", r.gamma),
            &format!("{:e}", r.eps),
            &format!("{:e}", r.mu),
            &r.dofs.to_string(),
            &r.nk.to_string(),
            &r.snk.to_string(),
            &r.geneo.to_string(),
            &r.iterations.to_string(),
            &r.converged.to_string(),
            &kappa,
            &format!("{:.3}", r.setup_seconds),
            &format!("{:.3}", r.solve_seconds),
        ])
        .map_err(|e| Error::Config(format!("csv write: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows back from the CSV format emitted by [`emit_csv`].
pub fn parse_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Config(format!("csv parse: {e}")))?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let parse_f = |i: usize| -> Result<f64> {
            field(i).parse().map_err(|e| Error::Config(format!("csv field {i}: {e}")))
        };
        let parse_u = |i: usize| -> Result<usize> {
            field(i).parse().map_err(|e| Error::Config(format!("csv field {i}: {e}")))
        };
        rows.push(ResultRow {
            scenario: field(0),
            method: Method::parse(&field(1))?,
            n_subdomains: parse_u(2)?,
            gamma: parse_f(3)?,
            eps: parse_f(4)?,
            mu: parse_f(5)?,
            dofs: parse_u(6)?,
            nk: parse_u(7)?,
            snk: parse_u(8)?,
            geneo: parse_u(9)?,
            iterations: parse_u(10)?,
            converged: field(11)
                .parse()
                .map_err(|e| Error::Config(format!("csv field 11: {e}")))?,
            kappa: {
                let s = field(12);
                if s.is_empty() { None } else { Some(s.parse().map_err(|e| Error::Config(format!("csv field 12: {e}")))?) }
            },
            setup_seconds: parse_f(13)?,
            solve_seconds: parse_f(14)?,
        });
    }
    Ok(rows)
}

type ColumnKey = (String, Box<dyn Fn(&ResultRow) -> bool>);

/// Aligned text tables: one block per scenario, methods as rows and the swept
/// parameter (N, gamma or the coefficient value) as columns.
pub fn emit_text<W: Write>(rows: &[ResultRow], out: &mut W) -> Result<()> {
    use std::collections::BTreeSet;
    let scenarios: Vec<String> = {
        let mut seen = Vec::new();
        for r in rows {
            if !seen.contains(&r.scenario) {
                seen.push(r.scenario.clone());
            }
        }
        seen
    };
    for scenario in scenarios {
        let group: Vec<&ResultRow> = rows.iter().filter(|r| r.scenario == scenario).collect();
        let ns: BTreeSet<usize> = group.iter().map(|r| r.n_subdomains).collect();
        let gammas: BTreeSet<u64> = group.iter().map(|r| r.gamma.to_bits()).collect();
        let values: BTreeSet<(u64, u64)> =
            group.iter().map(|r| (r.eps.to_bits(), r.mu.to_bits())).collect();
        // the swept axis with more than one entry drives the columns
        let (axis_name, keys): (&str, Vec<ColumnKey>) =
            if ns.len() > 1 {
                ("N", ns
                    .iter()
                    .map(|&n| {
                        let label = n.to_string();
                        (label, Box::new(move |r: &ResultRow| r.n_subdomains == n) as Box<dyn Fn(&ResultRow) -> bool>)
                    })
                    .collect())
            } else if gammas.len() > 1 {
                ("gamma", gammas
                    .iter()
                    .map(|&bits| {
                        let g = f64::from_bits(bits);
                        (format!("{g:.0e}"), Box::new(move |r: &ResultRow| r.gamma.to_bits() == bits) as Box<dyn Fn(&ResultRow) -> bool>)
                    })
                    .collect())
            } else {
                ("value", values
                    .iter()
                    .map(|&(e, m)| {
                        let val = if f64::from_bits(e) != 1.0 { f64::from_bits(e) } else { f64::from_bits(m) };
                        (format!("{val:.0e}"), Box::new(move |r: &ResultRow| {
                            r.eps.to_bits() == e && r.mu.to_bits() == m
                        }) as Box<dyn Fn(&ResultRow) -> bool>)
                    })
                    .collect())
            };

        let mut text = String::new();
        let _ = writeln!(text, "scenario {scenario}");
        let width = 12usize;
        let label_width = 14usize;
        let pick = |f: &dyn Fn(&ResultRow) -> bool| -> Option<&ResultRow> {
            group.iter().find(|r| f(r)).copied()
        };
        let mut header = format!("{:<label_width$}", axis_name);
        for (label, _) in &keys {
            let _ = write!(header, "{label:>width$}");
        }
        let _ = writeln!(text, "{header}");
        for (stat, get) in [
            ("#dofs", &(|r: &ResultRow| r.dofs.to_string()) as &dyn Fn(&ResultRow) -> String),
            ("NK size", &|r: &ResultRow| r.nk.to_string()),
            ("SNK size", &|r: &ResultRow| r.snk.to_string()),
            ("GenEO size", &|r: &ResultRow| {
                group
                    .iter()
                    .filter(|x| x.n_subdomains == r.n_subdomains && x.gamma == r.gamma && x.eps == r.eps && x.mu == r.mu)
                    .map(|x| x.geneo)
                    .max()
                    .unwrap_or(0)
                    .to_string()
            }),
        ] {
            let mut line = format!("{stat:<label_width$}");
            for (_, f) in &keys {
                let cell = pick(f).map(get).unwrap_or_default();
                let _ = write!(line, "{cell:>width$}");
            }
            let _ = writeln!(text, "{line}");
        }
        let mut methods: Vec<Method> = Vec::new();
        for r in &group {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        methods.sort_by_key(|&m| method_order(m));
        for method in methods {
            let mut line = format!("{:<label_width$}", method.to_string());
            for (_, f) in &keys {
                let cell = group
                    .iter()
                    .find(|r| r.method == method && f(r))
                    .map(|r| {
                        if r.converged {
                            r.iterations.to_string()
                        } else {
                            format!("{}*", r.iterations)
                        }
                    })
                    .unwrap_or_default();
                let _ = write!(line, "{cell:>width$}");
            }
            let _ = writeln!(text, "{line}");
        }
        let _ = writeln!(text);
        out.write_all(text.as_bytes())?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Text,
}

/// Writes one file per scenario into `dir`; returns the created paths.
pub fn write_outputs(rows: &[ResultRow], dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut names: Vec<String> = Vec::new();
    for r in rows {
        if !names.contains(&r.scenario) {
            names.push(r.scenario.clone());
        }
    }
    let mut paths = Vec::new();
    for name in names {
        let group: Vec<ResultRow> =
            rows.iter().filter(|r| r.scenario == name).cloned().collect();
        let (ext, path) = match format {
            OutputFormat::Csv => ("csv", dir.join(format!("{name}.csv"))),
            OutputFormat::Text => ("txt", dir.join(format!("{name}.txt"))),
        };
        let _ = ext;
        let mut file = std::fs::File::create(&path)?;
        match format {
            OutputFormat::Csv => emit_csv(&group, &mut file)?,
            OutputFormat::Text => emit_text(&group, &mut file)?,
        }
        paths.push(path);
    }
    Ok(paths)
}
