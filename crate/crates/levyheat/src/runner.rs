//! Scenario files, execution of sweeps against limit laws, corpus runs and
//! plot data.
//!
//! A scenario is a strict TOML document with the sections `process`,
//! `geometry`, `data` (optional), `sweep`, `law` and `output` (optional).
//! Unknown keys are rejected; parse and validation errors carry the line of
//! the offending key or section.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{convergence_report, derive_law, AsymptoticLaw, ConvergenceReport, Theorem, DEFAULT_PASS_TOL};
use crate::error::{Error, Result};
use crate::geometry::{GFunction, InitialData, MuMeasure, SetGeometry};
use crate::heatcontent::{geometric_grid, heat_deficit_sweep, Estimator, HeatScenario, QuadratureMethod, SweepTable, Tolerances};
use crate::levy_models::{JumpMeasure, LevyMeasure, LevyModel, PowerTerm, RadialProfile, SphereMeasure};

// ---------------------------------------------------------------------------
// Descriptors
// ---------------------------------------------------------------------------

/// Angular measure of a spherical stable-like process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SphereSpec {
    Uniform { total_mass: f64 },
    /// Each direction is paired with its antipode.
    SymmetricAtoms { directions: Vec<Vec<f64>>, weights: Vec<f64> },
}

/// Jump law of a compound Poisson process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpSpec {
    Atoms { points: Vec<Vec<f64>>, weights: Vec<f64> },
    Gaussian { rate: f64, mean: Vec<f64>, std: f64 },
}

/// Lévy measure of a finite-variation process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    RadialPowerLaw { alpha: f64, constant: f64 },
    AxesProduct { alphas: Vec<f64>, constants: Vec<f64> },
    Atoms { points: Vec<Vec<f64>>, weights: Vec<f64> },
    Gaussian { rate: f64, mean: Vec<f64>, std: f64 },
    Sum { parts: Vec<MeasureSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTermSpec {
    pub coef: f64,
    pub alpha: f64,
}

/// The `[process]` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessSpec {
    /// `ψ(ξ) = λ‖ξ‖²`.
    Brownian { dim: usize, lambda: f64 },
    /// `ψ(ξ) = scale · ‖ξ‖^α`.
    IsotropicStable { dim: usize, alpha: f64, scale: f64 },
    /// Lévy density `c ‖y‖^{-d-α}`.
    StableLevyDensity { dim: usize, alpha: f64, c: f64 },
    /// `ψ(ξ) = Σ |ξ_k|^{α_k}`.
    ProductOfStables { alphas: Vec<f64> },
    SphericalStableLike { dim: usize, sphere: SphereSpec, profile: Vec<PowerTermSpec> },
    /// Exactly one of `gamma` (triplet drift) and `drift_free = true` (γ₀ = 0).
    CompoundPoisson {
        dim: usize,
        jumps: JumpSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drift_free: Option<bool>,
    },
    FiniteVariation { dim: usize, nu: MeasureSpec, gamma: Vec<f64> },
    Superposition { parts: Vec<ProcessSpec> },
}

/// The `[geometry]` section and nested set descriptors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    Interval { a: f64, b: f64 },
    /// Box centred at the origin with the given side lengths.
    CenteredBox { sides: Vec<f64> },
    Box { center: Vec<f64>, half_widths: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
    Union { parts: Vec<GeometrySpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GSpec {
    /// Indicator of `set`, or of the scenario geometry when omitted.
    Indicator {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        set: Option<GeometrySpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MuSpec {
    /// Lebesgue measure on `set`, or on the scenario geometry when omitted.
    Lebesgue {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        set: Option<GeometrySpec>,
    },
    Gaussian { mean: Vec<f64>, std: f64 },
}

/// The `[data]` section; omitted means the classical heat content of the geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub g: GSpec,
    pub mu: MuSpec,
    /// Multiplier of `g` (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// The `[sweep]` section: either `t = [...]` or `t_max`, `t_min`, `points`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// `quadrature`, `montecarlo` or `both`.
    pub estimator: String,
    /// Monte-Carlo draws per time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Default 0; overridden by `--seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `auto` (default), `spectral`, `separable-boxes`, `poisson-series` or `density-grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Relative target of the deterministic estimators (default 1e-9).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    /// Mass tolerance of the density grids (default by dimension).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_tol: Option<f64>,
}

/// The `[law]` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub theorem: String,
    /// Required by the regularly varying laws, rejected by the linear ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// PASS threshold at the smallest time (default 0.02).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory (default `<out root>/<scenario name>`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// A whole scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub process: ProcessSpec,
    pub geometry: GeometrySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSpec>,
    pub sweep: SweepSpec,
    pub law: LawSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ScenarioFile {
    /// Strict parse; errors carry the line of the offending key.
    pub fn parse(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_of(src, s.start));
            Error::Config { line: line.map(|l| refine_unknown_key(src, l, e.message())), message: e.message().to_string() }
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config { line: None, message: e.to_string() })
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Tagged sections report errors at their header; an unknown key is moved to
/// the line that spells it.
fn refine_unknown_key(src: &str, line: usize, message: &str) -> usize {
    let Some(key) = message.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) else {
        return line;
    };
    src.lines()
        .enumerate()
        .skip(line.saturating_sub(1))
        .take_while(|(i, l)| *i + 1 == line || !l.trim_start().starts_with('['))
        .find(|(_, l)| {
            l.trim_start().strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
        })
        .map(|(i, _)| i + 1)
        .unwrap_or(line)
}

/// Line of the `[section]` header (or of its first sub-table).
fn section_line(src: &str, section: &str) -> Option<usize> {
    src.lines().position(|l| {
        let t = l.trim();
        t.strip_prefix('[')
            .and_then(|r| r.strip_prefix(section))
            .is_some_and(|r| r.starts_with(']') || r.starts_with('.'))
    })
    .map(|i| i + 1)
}

impl SphereSpec {
    pub fn build(&self) -> Result<SphereMeasure> {
        match self {
            SphereSpec::Uniform { total_mass } => Ok(SphereMeasure::Uniform { total_mass: *total_mass }),
            SphereSpec::SymmetricAtoms { directions, weights } => {
                SphereMeasure::symmetric_atoms(directions.clone(), weights.clone())
            }
        }
    }
}

impl JumpSpec {
    pub fn build(&self) -> JumpMeasure {
        match self {
            JumpSpec::Atoms { points, weights } => JumpMeasure::Atoms { points: points.clone(), weights: weights.clone() },
            JumpSpec::Gaussian { rate, mean, std } => JumpMeasure::Gaussian { rate: *rate, mean: mean.clone(), std: *std },
        }
    }
}

impl MeasureSpec {
    pub fn build(&self) -> LevyMeasure {
        match self {
            MeasureSpec::RadialPowerLaw { alpha, constant } => {
                LevyMeasure::RadialPowerLaw { alpha: *alpha, constant: *constant }
            }
            MeasureSpec::AxesProduct { alphas, constants } => {
                LevyMeasure::AxesProduct { alphas: alphas.clone(), constants: constants.clone() }
            }
            MeasureSpec::Atoms { points, weights } => {
                LevyMeasure::Finite(JumpMeasure::Atoms { points: points.clone(), weights: weights.clone() })
            }
            MeasureSpec::Gaussian { rate, mean, std } => {
                LevyMeasure::Finite(JumpMeasure::Gaussian { rate: *rate, mean: mean.clone(), std: *std })
            }
            MeasureSpec::Sum { parts } => LevyMeasure::Sum(parts.iter().map(|p| p.build()).collect()),
        }
    }
}

impl ProcessSpec {
    pub fn build(&self) -> Result<LevyModel> {
        match self {
            ProcessSpec::Brownian { dim, lambda } => LevyModel::brownian(*dim, *lambda),
            ProcessSpec::IsotropicStable { dim, alpha, scale } => LevyModel::isotropic_stable(*dim, *alpha, *scale),
            ProcessSpec::StableLevyDensity { dim, alpha, c } => LevyModel::stable_from_levy_density(*dim, *alpha, *c),
            ProcessSpec::ProductOfStables { alphas } => LevyModel::product_of_stables(alphas.clone()),
            ProcessSpec::SphericalStableLike { dim, sphere, profile } => LevyModel::spherical_stable_like(
                *dim,
                sphere.build()?,
                RadialProfile { terms: profile.iter().map(|t| PowerTerm { coef: t.coef, alpha: t.alpha }).collect() },
            ),
            ProcessSpec::CompoundPoisson { dim, jumps, gamma, drift_free } => match (gamma, drift_free) {
                (Some(g), None) => LevyModel::compound_poisson(*dim, jumps.build(), g.clone()),
                (None, Some(true)) => LevyModel::compound_poisson_without_drift(*dim, jumps.build()),
                _ => Err(Error::Argument(
                    "compound_poisson needs exactly one of `gamma = [...]` and `drift_free = true`".into(),
                )),
            },
            ProcessSpec::FiniteVariation { dim, nu, gamma } => LevyModel::finite_variation(*dim, nu.build(), gamma.clone()),
            ProcessSpec::Superposition { parts } => {
                LevyModel::superposition(parts.iter().map(|p| p.build()).collect::<Result<Vec<_>>>()?)
            }
        }
    }
}

impl GeometrySpec {
    pub fn build(&self) -> Result<SetGeometry> {
        match self {
            GeometrySpec::Interval { a, b } => SetGeometry::interval(*a, *b),
            GeometrySpec::CenteredBox { sides } => SetGeometry::centered_box(sides),
            GeometrySpec::Box { center, half_widths } => SetGeometry::cube_box(center.clone(), half_widths.clone()),
            GeometrySpec::Ball { center, radius } => SetGeometry::ball(center.clone(), *radius),
            GeometrySpec::Annulus { center, r_in, r_out } => SetGeometry::annulus(center.clone(), *r_in, *r_out),
            GeometrySpec::Union { parts } => {
                SetGeometry::disjoint_union(parts.iter().map(|p| p.build()).collect::<Result<Vec<_>>>()?)
            }
        }
    }
}

impl DataSpec {
    pub fn build(&self, omega: &SetGeometry) -> Result<InitialData> {
        let g = match &self.g {
            GSpec::Indicator { set } => GFunction::Indicator(match set {
                Some(s) => s.build()?,
                None => omega.clone(),
            }),
        };
        let mu = match &self.mu {
            MuSpec::Lebesgue { set } => MuMeasure::LebesgueOnSet(match set {
                Some(s) => s.build()?,
                None => omega.clone(),
            }),
            MuSpec::Gaussian { mean, std } => MuMeasure::Gaussian { mean: mean.clone(), std: *std },
        };
        Ok(InitialData::new(g, mu).with_scale(self.scale.unwrap_or(1.0)))
    }
}

// ---------------------------------------------------------------------------
// Loading and running
// ---------------------------------------------------------------------------

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tolerance_override: Option<f64>,
    /// Root of the output directories (default `results`).
    pub out_root: Option<PathBuf>,
    /// Disables the on-disk density cache.
    pub no_cache: bool,
}

impl RunOptions {
    fn out_root(&self) -> PathBuf {
        self.out_root.clone().unwrap_or_else(|| PathBuf::from("results"))
    }
}

/// A validated scenario, ready to run.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: HeatScenario,
    pub law: AsymptoticLaw,
    pub tolerance: f64,
    pub output_dir: PathBuf,
}

fn at_section<T>(src: &str, section: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::Config { line: section_line(src, section), message: format!("[{section}] {other}") },
    })
}

fn parse_estimator(s: &SweepSpec) -> Result<Estimator> {
    let need_n = || s.n.ok_or_else(|| Error::Argument("Monte Carlo needs `n`".into()));
    match s.estimator.as_str() {
        "quadrature" => {
            if s.n.is_some() {
                return Err(Error::Argument("`n` is only used by the Monte-Carlo estimator".into()));
            }
            Ok(Estimator::Quadrature)
        }
        "montecarlo" => Ok(Estimator::MonteCarlo { n: need_n()? }),
        "both" => Ok(Estimator::Both { n: need_n()? }),
        other => Err(Error::Argument(format!("unknown estimator `{other}`; use quadrature, montecarlo or both"))),
    }
}

fn parse_method(s: Option<&str>) -> Result<QuadratureMethod> {
    Ok(match s.unwrap_or("auto") {
        "auto" => QuadratureMethod::Auto,
        "spectral" => QuadratureMethod::Spectral,
        "separable-boxes" => QuadratureMethod::SeparableBoxes,
        "poisson-series" => QuadratureMethod::PoissonSeries,
        "density-grid" => QuadratureMethod::DensityGrid,
        other => return Err(Error::Argument(format!("unknown quadrature method `{other}`"))),
    })
}

fn parse_t_grid(s: &SweepSpec) -> Result<Vec<f64>> {
    match (&s.t, s.t_max, s.t_min, s.points) {
        (Some(t), None, None, None) => Ok(t.clone()),
        (None, Some(hi), Some(lo), Some(n)) => {
            if !(hi > lo && lo > 0.0 && n >= 1) {
                return Err(Error::Argument("need t_max > t_min > 0 and points ≥ 1".into()));
            }
            Ok(geometric_grid(hi, lo, n))
        }
        _ => Err(Error::Argument("give either `t = [...]` or all of `t_max`, `t_min`, `points`".into())),
    }
}

/// Parses and validates a scenario held in memory. `stem` names it when the
/// file has no `name`.
pub fn load_scenario_str(src: &str, stem: &str, opts: &RunOptions) -> Result<LoadedScenario> {
    let file = ScenarioFile::parse(src)?;
    let name = file.name.clone().unwrap_or_else(|| stem.to_string());
    let model = at_section(src, "process", file.process.build())?;
    let omega = at_section(src, "geometry", file.geometry.build())?;
    let data = match &file.data {
        Some(d) => at_section(src, "data", d.build(&omega))?,
        None => InitialData::classical(omega),
    };
    let estimator = at_section(src, "sweep", parse_estimator(&file.sweep))?;
    let t_grid = at_section(src, "sweep", parse_t_grid(&file.sweep))?;
    let method = at_section(src, "sweep", parse_method(file.sweep.method.as_deref()))?;
    let theorem: Theorem = at_section(src, "law", file.law.theorem.parse())?;
    let beta = match (theorem.is_first_order(), file.law.beta) {
        (true, None) => 1.0,
        (true, Some(_)) => {
            return at_section(src, "law", Err(Error::Argument(format!("{theorem} uses the scale 1/t; remove `beta`"))))
        }
        (false, Some(b)) => b,
        (false, None) => return at_section(src, "law", Err(Error::Argument(format!("{theorem} needs `beta`")))),
    };
    let tolerance = opts.tolerance_override.or(file.law.tolerance).unwrap_or(DEFAULT_PASS_TOL);
    if !(tolerance > 0.0) {
        return at_section(src, "law", Err(Error::Argument("the tolerance must be positive".into())));
    }
    let mut scenario = at_section(src, "data", HeatScenario::new(name.clone(), model, data, t_grid, estimator))?;
    let mut tol = Tolerances::default();
    if let Some(r) = file.sweep.rel_tol {
        tol.rel = r;
    }
    tol.grid.mass_tol = file.sweep.mass_tol;
    let output_dir = match file.output.as_ref().and_then(|o| o.dir.clone()) {
        Some(d) => PathBuf::from(d),
        None => opts.out_root().join(&name),
    };
    if !opts.no_cache {
        tol.cache_dir = Some(output_dir.join("density_cache"));
    }
    scenario = scenario
        .with_seed(opts.seed.or(file.sweep.seed).unwrap_or(0))
        .with_method(method)
        .with_tolerances(tol);
    let law = at_section(src, "law", derive_law(theorem, &scenario.model, &scenario.r, beta))?;
    Ok(LoadedScenario { file, scenario, law, tolerance, output_dir })
}

pub fn load_scenario(path: &Path, opts: &RunOptions) -> Result<LoadedScenario> {
    let src = fs::read_to_string(path)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
    load_scenario_str(&src, &stem, opts)
}

/// Sweep table and one report per estimator.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub name: String,
    pub table: SweepTable,
    pub reports: Vec<ConvergenceReport>,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn summary(&self) -> String {
        let blocks: Vec<String> = self.reports.iter().map(|r| r.to_string()).collect();
        blocks.join("\n\n") + "\n"
    }
}

/// Runs the sweep of a loaded scenario and judges it; does not write files.
pub fn execute(loaded: &LoadedScenario) -> Result<RunOutcome> {
    let table = heat_deficit_sweep(&loaded.scenario, &loaded.law.scaling)?;
    let mut reports = Vec::new();
    for est in ["quadrature", "montecarlo"] {
        if table.estimator_rows(est).next().is_some() {
            reports.push(convergence_report(&table, &loaded.law, est, loaded.tolerance)?);
        }
    }
    Ok(RunOutcome { name: loaded.scenario.name.clone(), table, reports, output_dir: loaded.output_dir.clone() })
}

/// Writes `sweep.csv`, `report_<estimator>.csv` and `summary.txt`.
pub fn write_outputs(outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(&outcome.output_dir)?;
    outcome.table.save_csv(&outcome.output_dir.join("sweep.csv"))?;
    for r in &outcome.reports {
        r.write_csv(fs::File::create(outcome.output_dir.join(format!("report_{}.csv", r.estimator)))?)?;
    }
    fs::write(outcome.output_dir.join("summary.txt"), outcome.summary())?;
    Ok(())
}

/// Loads, runs and writes one scenario.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let loaded = load_scenario(path, opts)?;
    let outcome = execute(&loaded)?;
    write_outputs(&outcome)?;
    Ok(outcome)
}

/// Verdict of one corpus entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Error => "ERROR",
        })
    }
}

/// One row of the corpus summary (one per estimator, or one per failed file).
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusRow {
    pub file: String,
    pub scenario: String,
    pub theorem: String,
    pub estimator: String,
    pub limit: Option<f64>,
    pub final_t: Option<f64>,
    pub final_scaled: Option<f64>,
    pub final_error: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorpusSummary {
    pub rows: Vec<CorpusRow>,
}

impl CorpusSummary {
    /// 0 when everything passed, 2 when some scenario failed, 1 when some file errored.
    pub fn exit_code(&self) -> u8 {
        if self.rows.iter().any(|r| r.verdict == Verdict::Error) {
            1
        } else if self.rows.iter().any(|r| r.verdict == Verdict::Fail) {
            2
        } else {
            0
        }
    }

    /// Columns `file, scenario, theorem, estimator, limit, final_t, final_scaled, final_error, tolerance, verdict, message`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        w.write_record([
            "file", "scenario", "theorem", "estimator", "limit", "final_t", "final_scaled", "final_error", "tolerance",
            "verdict", "message",
        ])
        .map_err(io)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.file.clone(),
                r.scenario.clone(),
                r.theorem.clone(),
                r.estimator.clone(),
                opt(r.limit),
                opt(r.final_t),
                opt(r.final_scaled),
                opt(r.final_error),
                opt(r.tolerance),
                r.verdict.to_string(),
                r.message.clone(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn corpus_rows(file: &str, result: Result<RunOutcome>) -> Vec<CorpusRow> {
    match result {
        Ok(o) => o
            .reports
            .iter()
            .map(|r| {
                let last = r.rows.last();
                CorpusRow {
                    file: file.to_string(),
                    scenario: o.name.clone(),
                    theorem: r.theorem.to_string(),
                    estimator: r.estimator.clone(),
                    limit: Some(r.limit),
                    final_t: last.map(|l| l.t),
                    final_scaled: last.map(|l| l.scaled),
                    final_error: last.map(|l| l.error),
                    tolerance: Some(r.tolerance),
                    verdict: if r.pass { Verdict::Pass } else { Verdict::Fail },
                    message: if r.converging { String::new() } else { "errors do not decrease".into() },
                }
            })
            .collect(),
        Err(e) => vec![CorpusRow {
            file: file.to_string(),
            scenario: String::new(),
            theorem: String::new(),
            estimator: String::new(),
            limit: None,
            final_t: None,
            final_scaled: None,
            final_error: None,
            tolerance: None,
            verdict: Verdict::Error,
            message: e.to_string(),
        }],
    }
}

/// Runs every `*.toml` in `dir` (in parallel), ordered by file name, and
/// writes `corpus_summary.csv` under the output root. Errors of single
/// files become error rows.
pub fn run_corpus(dir: &Path, opts: &RunOptions) -> Result<CorpusSummary> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    let per_file: Vec<Vec<CorpusRow>> = files
        .par_iter()
        .map(|p| {
            let file = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            corpus_rows(&file, run_scenario(p, opts))
        })
        .collect();
    let summary = CorpusSummary { rows: per_file.into_iter().flatten().collect() };
    let root = opts.out_root();
    fs::create_dir_all(&root)?;
    summary.write_csv(fs::File::create(root.join("corpus_summary.csv"))?)?;
    Ok(summary)
}

/// Reads a report CSV and writes the plotting series
/// `series, x, y, limit`: `log10_rel_error` (or `log10_abs_error`) against
/// `log10 t`, and `scaled` against the scale. Returns the rows per series.
pub fn emit_plotdata(report_csv: &Path, out: &Path) -> Result<usize> {
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    let mut rd = csv::Reader::from_path(report_csv).map_err(io)?;
    let headers = rd.headers().map_err(io)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config { line: Some(1), message: format!("report has no `{name}` column") })
    };
    let (it, isc, isv, il, ie, im) =
        (col("t")?, col("scale")?, col("scaled_value")?, col("limit")?, col("error")?, col("error_mode")?);
    let num = |rec: &csv::StringRecord, i: usize, line: usize| -> Result<f64> {
        rec.get(i)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| Error::Config { line: Some(line), message: "malformed number".into() })
    };
    let mut errors = Vec::new();
    let mut scaled = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(io)?;
        let line = k + 2;
        let mode = rec.get(im).unwrap_or("relative");
        let label = if mode == "absolute" { "log10_abs_error" } else { "log10_rel_error" };
        let limit = num(&rec, il, line)?;
        errors.push((label, num(&rec, it, line)?.log10(), num(&rec, ie, line)?.log10(), limit));
        scaled.push(("scaled", num(&rec, isc, line)?, num(&rec, isv, line)?, limit));
    }
    let mut w = csv::Writer::from_path(out).map_err(io)?;
    w.write_record(["series", "x", "y", "limit"]).map_err(io)?;
    for (s, x, y, l) in errors.iter().chain(&scaled) {
        w.write_record([s.to_string(), format!("{x:e}"), format!("{y:e}"), format!("{l:e}")]).map_err(io)?;
    }
    w.flush()?;
    Ok(errors.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    const STABLE: &str = r#"
name = "stable"

[process]
family = "isotropic_stable"
dim = 1
alpha = 1.5
scale = 1.0

[geometry]
kind = "interval"
a = 0.0
b = 1.0

[sweep]
t_max = 1e-2
t_min = 1e-4
points = 3
estimator = "quadrature"

[law]
theorem = "Corollary1"
beta = 1.0
"#;

    #[test]
    fn parses_and_round_trips() {
        let f = ScenarioFile::parse(STABLE).unwrap();
        let back = ScenarioFile::parse(&f.to_toml().unwrap()).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let bad = STABLE.replace("scale = 1.0", "scale = 1.0\nspeed = 3");
        match ScenarioFile::parse(&bad) {
            Err(Error::Config { line: Some(l), .. }) => assert_eq!(l, 9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_errors_point_at_their_section() {
        let bad = STABLE.replace("alpha = 1.5", "alpha = 0.9");
        match load_scenario_str(&bad, "x", &RunOptions { no_cache: true, ..Default::default() }) {
            Err(Error::Config { line: Some(l), message }) => {
                assert_eq!(l, section_line(&bad, "law").unwrap());
                assert!(message.contains("hypothesis"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn first_order_laws_reject_beta() {
        let bad = STABLE.replace("Corollary1", "T1_case1");
        assert!(load_scenario_str(&bad, "x", &RunOptions::default()).is_err());
    }
}
