//! The `membrane` command line: JSON run configurations, the five workflows
//! and their output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BoundaryLoad, FemSpace, SolverConfig};
use crate::io;
use crate::mesh::{build_mesh, DomainKind, DomainSpec, Mesh};
use crate::optimize::{
    lq_optimal_load, multistart_bathtub, multistart_rearrangement, optimality_residual, trace_extremal,
    AdmissibleClass, AscentConfig, AscentTrace, Termination,
};
use crate::oracle::{best_arc_search, compare_refinements, solve_disk, ArcConfig, CompareRow, FourierLoad};
use crate::region::{arc_region, BoundaryRegion};
use crate::shape::{fd_check, DerivativeReport, TangentialVelocity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    Rearrangement,
    Lq,
    Linfty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Vtk,
    Svg,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    pub class: Option<ClassTag>,
    pub q: Option<f64>,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    /// CSV with an `f` column, one row per boundary edge. Relative paths are
    /// resolved against the directory of the configuration file.
    pub f0_file: Option<PathBuf>,
    /// Inline alternative to `f0_file`.
    pub f0: Option<Vec<f64>>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            class: None,
            q: None,
            a: None,
            f0_file: None,
            f0: None,
        }
    }
}

/// Solver settings; the exponent comes from `problem.p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub continuation_factor: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub line_search_beta: f64,
    pub line_search_c: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            epsilon_start: d.epsilon_start,
            epsilon_min: d.epsilon_min,
            continuation_factor: d.continuation_factor,
            newton_tol: d.newton_tol,
            max_newton: d.max_newton,
            line_search_beta: d.line_search_beta,
            line_search_c: d.line_search_c,
        }
    }
}

impl SolverSection {
    pub fn with_p(&self, p: f64) -> SolverConfig {
        SolverConfig {
            p,
            epsilon_start: self.epsilon_start,
            epsilon_min: self.epsilon_min,
            continuation_factor: self.continuation_factor,
            newton_tol: self.newton_tol,
            max_newton: self.max_newton,
            line_search_beta: self.line_search_beta,
            line_search_c: self.line_search_c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Vtk, Format::Svg, Format::Json],
        }
    }
}

/// Boundary load for `solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadConfig {
    Constant {
        value: f64,
    },
    /// Fourier series in the angle `2πs/P`.
    Fourier {
        #[serde(default)]
        a0: f64,
        #[serde(default)]
        a: Vec<f64>,
        #[serde(default)]
        b: Vec<f64>,
    },
    /// Indicator of a union of arcs given as `[s_begin, s_end]` pairs.
    Arcs {
        intervals: Vec<(f64, f64)>,
    },
    PerEdge {
        values: Vec<f64>,
    },
    Nodal {
        values: Vec<f64>,
    },
}

impl LoadConfig {
    pub fn build(&self, mesh: &Mesh) -> Result<BoundaryLoad> {
        let load = match self {
            Self::Constant { value } => BoundaryLoad::constant(mesh, *value),
            Self::Fourier { a0, a, b } => {
                let series = FourierLoad {
                    a0: *a0,
                    a: a.clone(),
                    b: b.clone(),
                };
                series.validate()?;
                let scale = 2.0 * std::f64::consts::PI / mesh.perimeter();
                BoundaryLoad::from_fn(mesh, |s| series.eval(scale * s))
            }
            Self::Arcs { intervals } => {
                BoundaryLoad::Region(BoundaryRegion::from_intervals(intervals, mesh.perimeter())?)
            }
            Self::PerEdge { values } => BoundaryLoad::PerEdge(values.clone()),
            Self::Nodal { values } => BoundaryLoad::NodalTrace(values.clone()),
        };
        load.check(mesh)?;
        Ok(load)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerivativeConfig {
    /// Region as `[s_begin, s_end]` pairs; defaults to the arc of a quarter
    /// of the perimeter centered at `s = 0`.
    pub intervals: Option<Vec<(f64, f64)>>,
    /// Endpoint speeds; defaults to moving only the first endpoint.
    pub velocity: Option<Vec<f64>>,
    pub steps: Vec<f64>,
}

impl Default for DerivativeConfig {
    fn default() -> Self {
        Self {
            intervals: None,
            velocity: None,
            steps: vec![1e-2, 5e-3, 2.5e-3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Arc length for the arc search; falls back to `problem.A`.
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub configs: usize,
    pub modes: usize,
    /// Optional extra load whose oracle `J` is reported.
    pub load: Option<FourierLoad>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            a: None,
            configs: 20,
            modes: crate::oracle::DEFAULT_MODES,
            load: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub load: FourierLoad,
    pub min_refine: usize,
    pub max_refine: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            load: FourierLoad::cosine(1, 1.0),
            min_refine: 0,
            max_refine: 3,
        }
    }
}

/// A complete run description, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub ascent: AscentConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub load: Option<LoadConfig>,
    #[serde(default)]
    pub derivative: Option<DerivativeConfig>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    /// Reads the file and resolves `f0_file` against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        if let Some(f0) = &config.problem.f0_file {
            if f0.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.problem.f0_file = Some(base.join(f0));
            }
        }
        Ok(config)
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.with_p(self.problem.p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Workflow {
    Solve,
    Optimize,
    CheckDerivative,
    Oracle,
    Compare,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `|I(u) - J| / J` at the final state.
    pub energy_identity: Option<f64>,
    /// Spread of the boundary trace over the region endpoints.
    pub optimality_residual: Option<f64>,
    /// Euclidean norm of the final Newton residual.
    pub newton_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub start: Vec<(f64, f64)>,
    #[serde(rename = "J")]
    pub j: f64,
    pub iterations: usize,
    pub terminated: Termination,
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    State {
        converged: bool,
        newton_iterations: usize,
        max_u: f64,
    },
    Region {
        /// `(begin, end)` per arc, see [`arc_pairs`].
        intervals: Vec<(f64, f64)>,
        measure: f64,
        best_run: usize,
        runs: Vec<RunSummary>,
    },
    Rearrangement {
        load: Vec<f64>,
        best_run: usize,
        runs: Vec<RunSummary>,
    },
    Lq {
        q: f64,
        q_conj: f64,
        #[serde(rename = "S")]
        s: f64,
        #[serde(rename = "predicted_J")]
        predicted_j: f64,
        norm_before_rescale: f64,
        warning: Option<String>,
    },
    Derivative(DerivativeReport),
    Oracle {
        best: usize,
        table: Vec<ArcConfig>,
        #[serde(rename = "load_J")]
        load_j: Option<f64>,
    },
    Compare {
        rows: Vec<CompareRow>,
    },
}

/// Everything a run reports, written to `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Workflow,
    pub class: Option<ClassTag>,
    pub p: f64,
    pub seed: u64,
    #[serde(rename = "J_best")]
    pub j_best: f64,
    pub iterations: usize,
    pub residuals: Residuals,
    pub payload: Payload,
}

/// Data behind the output files of a run.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub mesh: Option<Mesh>,
    pub u: Option<Vec<f64>>,
    pub load: Option<BoundaryLoad>,
    pub trace: Option<AscentTrace>,
    pub region: Option<BoundaryRegion>,
    pub rearrangement: Option<Vec<f64>>,
    pub extremal: Option<Vec<f64>>,
    pub derivative: Option<DerivativeReport>,
    pub oracle: Option<Vec<ArcConfig>>,
    pub compare: Option<Vec<CompareRow>>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub artifacts: Artifacts,
}

fn relative_identity_gap(i: f64, j: f64) -> f64 {
    if j == 0.0 {
        (i - j).abs()
    } else {
        ((i - j) / j).abs()
    }
}

/// `(begin, end)` of each arc; `end` exceeds the perimeter for an arc through `s = 0`.
pub fn arc_pairs(region: &BoundaryRegion) -> Vec<(f64, f64)> {
    region.arcs().iter().map(|a| (a.begin, a.end())).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn space_for(config: &RunConfig) -> Result<FemSpace> {
    config.domain.validate()?;
    Ok(FemSpace::new(build_mesh(&config.domain)?))
}

/// Checks everything that can be checked without solving.
pub fn validate(workflow: Workflow, config: &RunConfig, class: Option<ClassTag>) -> Result<()> {
    config.domain.validate()?;
    config.solver_config().validate()?;
    config.ascent.validate()?;
    if config.output.formats.is_empty() {
        return Err(Error::Config("output.formats is empty".into()));
    }
    match workflow {
        Workflow::Solve => {
            if config.load.is_none() {
                return Err(Error::Config("solve needs a load section".into()));
            }
        }
        Workflow::Optimize => {
            if class.is_none() {
                return Err(Error::Config("optimize needs problem.class or --class".into()));
            }
        }
        Workflow::Compare | Workflow::Oracle if config.problem.p != 2.0 => {
            return Err(Error::Config("the disk oracle needs p = 2".into()));
        }
        _ => {}
    }
    if workflow == Workflow::Compare && config.domain.kind != (DomainKind::Disk { radius: 1.0 }) {
        return Err(Error::Config("compare runs on the unit disk".into()));
    }
    Ok(())
}

fn read_f0(config: &RunConfig) -> Result<Vec<f64>> {
    match (&config.problem.f0, &config.problem.f0_file) {
        (Some(f0), None) => Ok(f0.clone()),
        (None, Some(path)) => {
            let mut reader = csv::Reader::from_path(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let column = reader
                .headers()
                .map_err(|e| Error::Config(e.to_string()))?
                .iter()
                .position(|h| h.trim() == "f")
                .ok_or_else(|| Error::Config(format!("{} has no `f` column", path.display())))?;
            reader
                .records()
                .map(|rec| {
                    let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
                    let field = rec.get(column).unwrap_or("").trim();
                    field
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad f0 value `{field}`")))
                })
                .collect()
        }
        (Some(_), Some(_)) => Err(Error::Config("give either problem.f0 or problem.f0_file".into())),
        (None, None) => Err(Error::Config(
            "rearrangement needs problem.f0 or problem.f0_file".into(),
        )),
    }
}

fn run_summaries<'a>(runs: impl Iterator<Item = (Vec<(f64, f64)>, f64, &'a AscentTrace)>) -> Vec<RunSummary> {
    runs.map(|(start, j, trace)| RunSummary {
        start,
        j,
        iterations: trace.steps.len(),
        terminated: trace.terminated,
        monotone: trace.is_monotone(1e-12),
    })
    .collect()
}

fn report(
    config: &RunConfig,
    command: Workflow,
    class: Option<ClassTag>,
    j_best: f64,
    iterations: usize,
    residuals: Residuals,
    payload: Payload,
) -> RunReport {
    RunReport {
        command,
        class,
        p: config.problem.p,
        seed: config.ascent.seed,
        j_best,
        iterations,
        residuals,
        payload,
    }
}

/// Runs one workflow. No files are written.
pub fn execute(workflow: Workflow, config: &RunConfig, class: Option<ClassTag>) -> Result<Outcome> {
    validate(workflow, config, class)?;
    let solver = config.solver_config();
    match workflow {
        Workflow::Solve => {
            let space = space_for(config)?;
            let load = config.load.as_ref().expect("validated").build(space.mesh())?;
            let sol = space.solve_state(&load, &solver)?;
            if !sol.converged {
                return Err(Error::NonConvergence(format!(
                    "Newton stalled at residual {:e}",
                    sol.residual_norm
                )));
            }
            let j = space.cost_j(&load, &sol.nodal_u)?;
            let i = space.functional_i(&load, &sol.nodal_u, solver.p)?;
            let residuals = Residuals {
                energy_identity: Some(relative_identity_gap(i, j)),
                optimality_residual: None,
                newton_residual: Some(sol.residual_norm),
            };
            let payload = Payload::State {
                converged: sol.converged,
                newton_iterations: sol.newton_iterations,
                max_u: max_abs(&sol.nodal_u),
            };
            let report = report(
                config,
                workflow,
                None,
                j,
                sol.newton_iterations,
                residuals,
                payload,
            );
            Ok(Outcome {
                report,
                artifacts: Artifacts {
                    mesh: Some(space.mesh().clone()),
                    u: Some(sol.nodal_u),
                    load: Some(load),
                    ..Artifacts::default()
                },
            })
        }
        Workflow::Optimize => optimize(config, class.expect("validated"), &solver),
        Workflow::CheckDerivative => {
            let space = space_for(config)?;
            let perimeter = space.mesh().perimeter();
            let settings = config.derivative.clone().unwrap_or_default();
            let region = match &settings.intervals {
                Some(iv) => BoundaryRegion::from_intervals(iv, perimeter)?,
                None => arc_region(0.0, 0.25 * perimeter, perimeter)?,
            };
            let velocity = match settings.velocity {
                Some(v) => TangentialVelocity::new(v),
                None => {
                    let mut v = TangentialVelocity::zero(&region);
                    if let Some(first) = v.speeds.first_mut() {
                        *first = 1.0;
                    }
                    v
                }
            };
            let rep = fd_check(&space, &region, &velocity, &solver, &settings.steps)?;
            let load = BoundaryLoad::Region(region.clone());
            let sol = space.solve_state(&load, &solver)?;
            let i = space.functional_i(&load, &sol.nodal_u, solver.p)?;
            let residuals = Residuals {
                energy_identity: Some(relative_identity_gap(i, rep.j)),
                optimality_residual: Some(optimality_residual(space.mesh(), &sol.nodal_u, &region).value),
                newton_residual: Some(sol.residual_norm),
            };
            let report = report(
                config,
                workflow,
                None,
                rep.j,
                rep.entries.len(),
                residuals,
                Payload::Derivative(rep.clone()),
            );
            Ok(Outcome {
                report,
                artifacts: Artifacts {
                    mesh: Some(space.mesh().clone()),
                    u: Some(sol.nodal_u),
                    load: Some(load),
                    region: Some(region),
                    derivative: Some(rep),
                    ..Artifacts::default()
                },
            })
        }
        Workflow::Oracle => {
            let settings = config.oracle.clone().unwrap_or_default();
            let a = settings
                .a
                .or(config.problem.a)
                .ok_or_else(|| Error::Config("oracle needs oracle.A or problem.A".into()))?;
            let search = best_arc_search(a, settings.configs, settings.modes, config.ascent.seed)?;
            let load_j = settings.load.as_ref().map(solve_disk).transpose()?.map(|s| s.j);
            let j_best = search.table[search.best].j;
            let payload = Payload::Oracle {
                best: search.best,
                table: search.table.clone(),
                load_j,
            };
            let report = report(
                config,
                workflow,
                None,
                j_best,
                search.table.len(),
                Residuals::default(),
                payload,
            );
            Ok(Outcome {
                report,
                artifacts: Artifacts {
                    oracle: Some(search.table),
                    ..Artifacts::default()
                },
            })
        }
        Workflow::Compare => {
            let settings = config.compare.clone().unwrap_or_default();
            let rows = compare_refinements(
                &settings.load,
                config.domain.n_boundary,
                settings.min_refine,
                settings.max_refine,
                &solver,
            )?;
            let last = rows
                .last()
                .ok_or_else(|| Error::Internal("empty refinement study".into()))?;
            let report = report(
                config,
                workflow,
                None,
                last.j_fem,
                rows.len(),
                Residuals::default(),
                Payload::Compare { rows: rows.clone() },
            );
            Ok(Outcome {
                report,
                artifacts: Artifacts {
                    compare: Some(rows),
                    ..Artifacts::default()
                },
            })
        }
    }
}

fn optimize(config: &RunConfig, class: ClassTag, solver: &SolverConfig) -> Result<Outcome> {
    let space = space_for(config)?;
    let mesh = space.mesh();
    let ascent = &config.ascent;
    match class {
        ClassTag::Linfty => {
            let a = config
                .problem
                .a
                .ok_or_else(|| Error::Config("class linfty needs problem.A".into()))?;
            AdmissibleClass::SurfaceFraction { a }.validate(mesh)?;
            let ms = multistart_bathtub(&space, a, solver, ascent)?;
            let best = ms.best_run();
            let load = BoundaryLoad::Region(best.region.clone());
            let i = space.functional_i(&load, &best.solution.nodal_u, solver.p)?;
            let residuals = Residuals {
                energy_identity: Some(relative_identity_gap(i, best.j)),
                optimality_residual: Some(
                    optimality_residual(mesh, &best.solution.nodal_u, &best.region).value,
                ),
                newton_residual: Some(best.solution.residual_norm),
            };
            let payload = Payload::Region {
                intervals: arc_pairs(&best.region),
                measure: best.region.measure(),
                best_run: ms.best,
                runs: run_summaries(ms.runs.iter().map(|r| (arc_pairs(&r.start), r.j, &r.trace))),
            };
            let report = report(
                config,
                Workflow::Optimize,
                Some(class),
                best.trace.best_j(),
                best.trace.steps.len(),
                residuals,
                payload,
            );
            Ok(Outcome {
                report,
                artifacts: Artifacts {
                    mesh: Some(mesh.clone()),
                    u: Some(best.solution.nodal_u.clone()),
                    load: Some(load),
                    trace: Some(best.trace.clone()),
                    region: Some(best.region.clone()),
                    ..Artifacts::default()
                },
            })
        }
        ClassTag::Rearrangement => {
            let f0 = read_f0(config)?;
            AdmissibleClass::Rearrangement { f0: f0.clone() }.validate(mesh)?;
            let ms = multistart_rearrangement(&space, &f0, solver, ascent)?;
            let best = ms.best_run();
            let load = BoundaryLoad::PerEdge(best.load.clone());
            let i = space.functional_i(&load, &best.solution.nodal_u, solver.p)?;
            let residuals = Residuals {
                energy_identity: Some(relative_identity_gap(i, best.j)),
                optimality_residual: None,
                newton_residual: Some(best.solution.residual_norm),
            };
            let payload = Payload::Rearrangement {
                load: best.load.clone(),
                best_run: ms.best,
                runs: run_summaries(ms.runs.iter().map(|r| (Vec::new(), r.j, &r.trace))),
            };
            let report = report(
                config,
                Workflow::Optimize,
                Some(class),
                best.trace.best_j(),
                best.trace.steps.len(),
                residuals,
                payload,
            );
            Ok(Outcome {
                report,
                artifacts: Artifacts {
                    mesh: Some(mesh.clone()),
                    u: Some(best.solution.nodal_u.clone()),
                    load: Some(load),
                    trace: Some(best.trace.clone()),
                    rearrangement: Some(best.load.clone()),
                    ..Artifacts::default()
                },
            })
        }
        ClassTag::Lq => {
            let q = config
                .problem
                .q
                .ok_or_else(|| Error::Config("class lq needs problem.q".into()))?;
            AdmissibleClass::LqBall { q }.validate(mesh)?;
            let ex = trace_extremal(&space, q, solver.p, solver)?;
            if let Some(w) = &ex.warning {
                eprintln!("warning: {w}");
            }
            let lq = lq_optimal_load(&space, &ex)?;
            let sol = space.solve_state(&lq.load, solver)?;
            if !sol.converged {
                return Err(Error::NonConvergence(format!(
                    "Newton stalled at residual {:e}",
                    sol.residual_norm
                )));
            }
            let j = space.cost_j(&lq.load, &sol.nodal_u)?;
            let i = space.functional_i(&lq.load, &sol.nodal_u, solver.p)?;
            let residuals = Residuals {
                energy_identity: Some(relative_identity_gap(i, j)),
                optimality_residual: None,
                newton_residual: Some(sol.residual_norm),
            };
            let payload = Payload::Lq {
                q,
                q_conj: ex.q_conj,
                s: ex.s,
                predicted_j: lq.predicted_j,
                norm_before_rescale: lq.norm_before_rescale,
                warning: ex.warning.clone(),
            };
            let report = report(
                config,
                Workflow::Optimize,
                Some(class),
                j,
                ex.iterations,
                residuals,
                payload,
            );
            Ok(Outcome {
                report,
                artifacts: Artifacts {
                    mesh: Some(mesh.clone()),
                    u: Some(sol.nodal_u),
                    load: Some(lq.load),
                    extremal: Some(ex.v),
                    ..Artifacts::default()
                },
            })
        }
    }
}

/// Writes the files of `outcome` for the requested formats and returns their paths.
pub fn emit_outputs(outcome: &Outcome, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let has = |f: Format| formats.contains(&f);
    let art = &outcome.artifacts;
    let mut written = Vec::new();
    let mut out = |name: &str| {
        let path = dir.join(name);
        written.push(path.clone());
        path
    };

    if has(Format::Csv) {
        if let (Some(mesh), Some(u)) = (&art.mesh, &art.u) {
            io::write_solution_csv(&out("solution.csv"), mesh, u)?;
            if let Some(load) = &art.load {
                io::write_trace_csv(&out("trace.csv"), mesh, load, u)?;
            }
        }
        if let Some(trace) = &art.trace {
            io::write_ascent_csv(&out("ascent.csv"), trace)?;
        }
        if let Some(region) = &art.region {
            io::write_region_csv(&out("region.csv"), region)?;
        }
        if let Some(f) = &art.rearrangement {
            io::write_rearrangement_csv(&out("rearrangement.csv"), f)?;
        }
        if let Some(v) = &art.extremal {
            io::write_extremal_csv(&out("extremal.csv"), v)?;
        }
        if let Some(rep) = &art.derivative {
            io::write_derivative_csv(&out("derivative.csv"), rep)?;
        }
        if let Some(table) = &art.oracle {
            io::write_oracle_csv(&out("oracle.csv"), table)?;
        }
        if let Some(rows) = &art.compare {
            io::write_compare_csv(&out("compare.csv"), rows)?;
        }
    }
    if has(Format::Vtk) {
        if let (Some(mesh), Some(u)) = (&art.mesh, &art.u) {
            let mut fields: Vec<(&str, &[f64])> = vec![("u", u)];
            if let Some(v) = &art.extremal {
                fields.push(("v", v));
            }
            io::write_vtk(&out("solution.vtk"), mesh, &fields)?;
        }
    }
    if has(Format::Svg) {
        if let Some(trace) = &art.trace {
            io::write_svg(&out("ascent.svg"), &io::ascent_plot(trace))?;
        }
        if let (Some(mesh), Some(u), Some(load)) = (&art.mesh, &art.u, &art.load) {
            io::write_svg(&out("trace.svg"), &io::trace_plot(mesh, load, u))?;
        }
        if let Some(rep) = &art.derivative {
            io::write_svg(&out("derivative.svg"), &io::derivative_plot(rep))?;
        }
        if let Some(rows) = &art.compare {
            let pts = rows.iter().map(|r| (r.n_refine as f64, r.abs_err)).collect();
            let svg = io::line_plot(
                "FEM against oracle",
                "refinements",
                "|J_fem - J_oracle|",
                &[io::Series::new("abs_err", pts)],
                io::Scale::Linear,
                io::Scale::Log10,
            );
            io::write_svg(&out("compare.svg"), &svg)?;
        }
    }
    if has(Format::Json) {
        io::write_json(&out("report.json"), &outcome.report)?;
    }
    Ok(written)
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding `ascent.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the state equation for the configured load.
    Solve(CommonArgs),
    /// Maximize J over an admissible class.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Admissible class, overriding `problem.class`.
        #[arg(long, value_enum)]
        class: Option<ClassTag>,
    },
    /// Compare finite differences of J with the shape derivative.
    CheckDerivative(CommonArgs),
    /// Evaluate the disk oracle on single and split arcs.
    Oracle(CommonArgs),
    /// FEM against oracle refinement study on the unit disk.
    Compare(CommonArgs),
}

#[derive(Debug, Parser)]
#[command(
    name = "membrane",
    version,
    about = "Load optimization for p-Laplacian membranes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Domain(_)
        | Error::ClassViolation(_)
        | Error::PerturbationTooLarge(_)
        | Error::Json(_) => 1,
        Error::Solver(_) | Error::NonConvergence(_) | Error::AscentStopped { .. } => 2,
        Error::Internal(_) | Error::Io(_) => 3,
    }
}

#[derive(Serialize)]
struct Summary {
    command: Workflow,
    #[serde(rename = "J_best")]
    j_best: f64,
    iterations: usize,
    wall_time_s: f64,
    files: Vec<String>,
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    let (workflow, common, class) = match cli.command {
        Command::Solve(c) => (Workflow::Solve, c, None),
        Command::Optimize { common, class } => (Workflow::Optimize, common, class),
        Command::CheckDerivative(c) => (Workflow::CheckDerivative, c, None),
        Command::Oracle(c) => (Workflow::Oracle, c, None),
        Command::Compare(c) => (Workflow::Compare, c, None),
    };
    let mut config = RunConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        config.ascent.seed = seed;
    }
    if let Some(dir) = common.out {
        config.output.directory = dir;
    }
    let class = class.or(config.problem.class);
    let outcome = execute(workflow, &config, class)?;
    let files = emit_outputs(&outcome, &config.output.formats, &config.output.directory)?;
    let summary = Summary {
        command: workflow,
        j_best: outcome.report.j_best,
        iterations: outcome.report.iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
        files: files.iter().map(|p| p.display().to_string()).collect(),
    };
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

/// Parses `argv` (including the program name), runs the workflow and returns
/// the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
