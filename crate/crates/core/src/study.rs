//! Convergence studies and single solves driven by a TOML configuration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::LinearSystem;
use crate::eafe_high::{assemble_high_order, HighOrderOptions};
use crate::eafe_low::{assemble_eafe, EafeOptions};
use crate::error::{Error, Result};
use crate::fem::{error_norms, LagrangeSpace};
use crate::linalg::{solve, SolverOptions, SolverReport};
use crate::mesh::SimplicialMesh;
use crate::problem::{Preset, SpaceTimeProblem};
use crate::sd::{assemble_sd, SdParameters, DEFAULT_THETA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Sd,
    #[default]
    Eafe,
    EafeHigh,
}

impl Scheme {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sd" => Ok(Scheme::Sd),
            "eafe" => Ok(Scheme::Eafe),
            "eafe_high" | "eafe-high" => Ok(Scheme::EafeHigh),
            other => Err(Error::Config(format!("unknown scheme '{other}' (sd, eafe, eafe_high)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub preset: Preset,
    /// Artificial time diffusion of the fitted schemes.
    pub eps: f64,
    /// Time rescaling `t̃ = κt`, applied before meshing.
    pub kappa: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            preset: Preset::Heat2d,
            eps: 1e-5,
            kappa: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationSection {
    pub scheme: Scheme,
    /// Polynomial order; the lowest-order fitted scheme ignores it.
    pub order: usize,
    pub theta: f64,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::Eafe,
            order: 1,
            theta: DEFAULT_THETA,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    /// Inclusive range of levels; level `ℓ` has `2^ℓ` cells per axis.
    pub levels: [u32; 2],
    /// Report zero seconds so reruns give byte-identical tables.
    pub deterministic: bool,
    /// Lift the desk-scale level cap.
    pub large: bool,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            levels: [1, 4],
            deterministic: true,
            large: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub vtk: Option<PathBuf>,
    pub slice_csv: Option<PathBuf>,
    /// First coordinate of the slicing plane for `slice_csv`.
    pub slice_x: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            csv: None,
            vtk: None,
            slice_csv: None,
            slice_x: 0.5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub problem: ProblemSection,
    pub discretization: DiscretizationSection,
    pub study: StudySection,
    pub solver: SolverOptions,
    pub output: OutputSection,
}

/// Finest level run without `large`, by domain dimension.
pub fn level_cap(dim: usize) -> u32 {
    if dim >= 3 {
        5
    } else {
        8
    }
}

impl StudyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let [first, last] = self.study.levels;
        if first > last {
            return Err(Error::Config(format!("levels [{first}, {last}] are out of order")));
        }
        if last > 12 {
            return Err(Error::Config(format!("level {last} is beyond any supported size")));
        }
        let dim = self.build_problem_unscaled().dim();
        if !self.study.large && last > level_cap(dim) {
            return Err(Error::Config(format!(
                "level {last} exceeds the desk-scale cap {} for a {dim}D mesh (set large = true)",
                level_cap(dim)
            )));
        }
        let order = self.discretization.order;
        if self.discretization.scheme != Scheme::Eafe && !(1..=2).contains(&order) {
            return Err(Error::Config(format!("order {order} is not supported (1 or 2)")));
        }
        if !(self.problem.kappa > 0.0 && self.problem.kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be positive, got {}", self.problem.kappa)));
        }
        if !(self.discretization.theta >= 0.0) {
            return Err(Error::Config(format!("theta must be ≥ 0, got {}", self.discretization.theta)));
        }
        Ok(())
    }

    fn build_problem_unscaled(&self) -> SpaceTimeProblem {
        self.problem.preset.build(self.problem.eps)
    }

    /// The configured problem, rescaled in time when `kappa ≠ 1`.
    pub fn build_problem(&self) -> Result<SpaceTimeProblem> {
        let problem = self.build_problem_unscaled();
        if self.problem.kappa == 1.0 {
            Ok(problem)
        } else {
            problem.time_rescale(self.problem.kappa)
        }
    }

    /// Lagrange order of the discrete solution.
    pub fn solution_order(&self) -> usize {
        match self.discretization.scheme {
            Scheme::Eafe => 1,
            _ => self.discretization.order,
        }
    }
}

/// Assemble `problem` on `mesh` with the configured scheme.
pub fn assemble(config: &StudyConfig, mesh: &SimplicialMesh, problem: &SpaceTimeProblem) -> Result<LinearSystem> {
    let disc = &config.discretization;
    match disc.scheme {
        Scheme::Eafe => assemble_eafe(mesh, problem, &EafeOptions::default()),
        Scheme::EafeHigh => assemble_high_order(mesh, problem, &HighOrderOptions::new(disc.order)),
        Scheme::Sd => {
            let params = SdParameters::from_problem(problem, disc.theta, disc.order)?;
            assemble_sd(mesh, problem, &params)
        }
    }
}

/// A discrete solution on one level.
#[derive(Clone, Debug)]
pub struct LevelSolution {
    pub level: u32,
    pub mesh: SimplicialMesh,
    pub space: LagrangeSpace,
    pub u: Vec<f64>,
    pub report: SolverReport,
    pub seconds: f64,
}

pub fn solve_level(config: &StudyConfig, problem: &SpaceTimeProblem, level: u32) -> Result<LevelSolution> {
    let start = Instant::now();
    let mesh = problem.mesh(1 << level)?;
    let space = LagrangeSpace::new(&mesh, config.solution_order())?;
    let system = assemble(config, &mesh, problem)?;
    let (u, report) = solve(&system.matrix, &system.rhs, &config.solver)?;
    Ok(LevelSolution {
        level,
        mesh,
        space,
        u,
        report,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h: f64,
    pub dofs: usize,
    pub l2_error: f64,
    pub h1_error: f64,
    /// `log₂(e_{k−1}/e_k)` against the previous row; `None` on the first.
    pub order_l2: Option<f64>,
    pub order_h1: Option<f64>,
    pub iters: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelFailure {
    pub level: u32,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub failures: Vec<LevelFailure>,
}

impl ConvergenceTable {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    /// Append a row, filling in the observed orders when it directly
    /// refines the previous one.
    pub fn push(&mut self, mut row: ConvergenceRow) {
        if let Some(prev) = self.rows.last().filter(|p| p.level + 1 == row.level) {
            row.order_l2 = Some((prev.l2_error / row.l2_error).log2());
            row.order_h1 = Some((prev.h1_error / row.h1_error).log2());
        }
        self.rows.push(row);
    }

    /// Observed L² order between the two finest levels.
    pub fn finest_order_l2(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order_l2)
    }
}

/// Solve on every configured level and tabulate errors against the exact
/// solution. Per-level failures are recorded and the study continues.
pub fn run_convergence_study(config: &StudyConfig) -> Result<ConvergenceTable> {
    config.validate()?;
    let problem = config.build_problem()?;
    let exact = problem
        .exact
        .clone()
        .ok_or_else(|| Error::Config(format!("preset '{}' has no exact solution", problem.name)))?;
    let [first, last] = config.study.levels;
    let mut table = ConvergenceTable::default();
    for level in first..=last {
        let sol = match solve_level(config, &problem, level) {
            Ok(sol) => sol,
            Err(e) => {
                table.failures.push(LevelFailure {
                    level,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if !sol.report.converged {
            table.failures.push(LevelFailure {
                level,
                message: format!(
                    "solver did not converge: residual {:e} after {} iterations",
                    sol.report.relative_residual, sol.report.iterations
                ),
            });
        }
        let norms = error_norms(&sol.mesh, &sol.space, &sol.u, &*exact.value, &*exact.gradient, 2)?;
        table.push(ConvergenceRow {
            level,
            h: 0.5f64.powi(level as i32),
            dofs: sol.space.num_dofs(),
            l2_error: norms.l2,
            h1_error: norms.h1_semi,
            order_l2: None,
            order_h1: None,
            iters: sol.report.iterations,
            seconds: if config.study.deterministic { 0.0 } else { sol.seconds },
        });
    }
    if let Some(path) = &config.output.csv {
        crate::export::write_convergence_csv(&table, path)?;
    }
    Ok(table)
}

/// One solve with summary data and the plane slice `x₀ = slice_x`.
#[derive(Clone, Debug)]
pub struct SingleRun {
    pub solution: LevelSolution,
    pub min: f64,
    pub max: f64,
    /// Rows of `(remaining coordinates…, u)` at nodes on the slice plane.
    pub slice: Vec<Vec<f64>>,
}

impl SingleRun {
    pub fn is_finite(&self) -> bool {
        self.solution.u.iter().all(|v| v.is_finite())
    }
}

pub fn run_single(config: &StudyConfig, level: u32) -> Result<SingleRun> {
    config.validate()?;
    let problem = config.build_problem()?;
    let solution = solve_level(config, &problem, level)?;
    let (min, max) = solution
        .u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let slice = slice_plane(&solution.space, &solution.u, config.output.slice_x);
    if let Some(path) = &config.output.vtk {
        crate::export::write_vtk(&solution.mesh, &solution.u[..solution.mesh.num_vertices()], path)?;
    }
    if let Some(path) = &config.output.slice_csv {
        crate::export::write_slice_csv(&slice, solution.mesh.dim(), path)?;
    }
    Ok(SingleRun {
        solution,
        min,
        max,
        slice,
    })
}

/// Nodes with first coordinate `x` (to 1e-12), sorted by the remaining
/// coordinates.
pub fn slice_plane(space: &LagrangeSpace, u: &[f64], x: f64) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = (0..space.num_dofs())
        .filter(|&i| (space.node(i)[0] - x).abs() <= 1e-12)
        .map(|i| {
            let mut row = space.node(i)[1..].to_vec();
            row.push(u[i]);
            row
        })
        .collect();
    rows.sort_by(|a, b| {
        let n = a.len() - 1;
        a[..n].iter().rev().partial_cmp(b[..n].iter().rev()).unwrap()
    });
    rows
}
