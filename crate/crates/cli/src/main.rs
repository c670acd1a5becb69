//! `stfem`: command-line driver for the space-time solvers.
//!
//! Exit codes: 0 success, 2 solver failure, 3 configuration error, 1 for
//! anything else (I/O).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spacetime_fem::eafe_low::m_matrix_check;
use spacetime_fem::export::{convergence_csv, write_convergence_csv, write_vtk};
use spacetime_fem::mesh::perturb_vertices;
use spacetime_fem::problem::Preset;
use spacetime_fem::study::{self, run_convergence_study, run_single, Scheme, StudyConfig};
use spacetime_fem::Error;

#[derive(Parser)]
#[command(name = "stfem", version, about = "Space-time finite elements for parabolic convection-diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the mesh of a preset and print its statistics.
    Mesh(Common),
    /// Solve once and report the solution range.
    Solve(Common),
    /// Run a convergence study over a range of levels.
    Converge(Common),
    /// Solve the original and time-rescaled problems and compare nodal values.
    RescaleDemo(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// heat2d, heat1d, zero or oscillating-convection.
    #[arg(long)]
    preset: Option<String>,
    /// sd, eafe or eafe_high.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// One level `L` or an inclusive range `A:B`; level `L` has 2^L cells per axis.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    kappa: Option<f64>,
    /// CSV output: the convergence table, or the x-slice for `solve`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    vtk: Option<PathBuf>,
    /// Allow levels beyond the desk-scale cap.
    #[arg(long)]
    large: bool,
    /// Seed for the random vertex perturbation of `mesh --jitter`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturb vertices by up to this fraction of the shortest edge (`mesh` only).
    #[arg(long)]
    jitter: Option<f64>,
    /// Report wall-clock seconds instead of zeros in the convergence table.
    #[arg(long)]
    timings: bool,
}

fn parse_levels(text: &str) -> Result<[u32; 2], Error> {
    let bad = || Error::Config(format!("bad level spec '{text}' (use L or A:B)"));
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<u32> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    match nums[..] {
        [l] => Ok([l, l]),
        [a, b] => Ok([a, b]),
        _ => Err(bad()),
    }
}

impl Common {
    fn config(&self) -> Result<StudyConfig, Error> {
        let mut c = match &self.config {
            Some(path) => StudyConfig::from_file(path)?,
            None => StudyConfig::default(),
        };
        if let Some(p) = &self.preset {
            c.problem.preset = Preset::parse(p)?;
        }
        if let Some(s) = &self.scheme {
            c.discretization.scheme = Scheme::parse(s)?;
        }
        if let Some(o) = self.order {
            c.discretization.order = o;
        }
        if let Some(e) = self.eps {
            c.problem.eps = e;
        }
        if let Some(t) = self.theta {
            c.discretization.theta = t;
        }
        if let Some(l) = &self.levels {
            c.study.levels = parse_levels(l)?;
        }
        if let Some(k) = self.kappa {
            c.problem.kappa = k;
        }
        if let Some(v) = &self.vtk {
            c.output.vtk = Some(v.clone());
        }
        c.study.large |= self.large;
        if self.timings {
            c.study.deterministic = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn mesh(args: &Common) -> Result<ExitCode, Error> {
    let c = args.config()?;
    let problem = c.build_problem()?;
    let level = c.study.levels[1];
    let mut mesh = problem.mesh(1 << level)?;
    if let Some(amp) = args.jitter {
        mesh = perturb_vertices(&mesh, amp, args.seed)?;
    }
    println!("preset      {}", c.problem.preset.name());
    println!("dimension   {}", mesh.dim());
    println!("level       {level}");
    println!("vertices    {}", mesh.num_vertices());
    println!("simplices   {}", mesh.num_simplices());
    println!("boundary    {} facets", mesh.boundary_facets().len());
    println!("mesh size   {:.6e}", mesh.mesh_size());
    if mesh.dim() == 2 {
        println!("delaunay    {}", mesh.is_delaunay(1e-12)?);
    }
    if let Some(path) = &c.output.vtk {
        write_vtk(&mesh, &vec![0.0; mesh.num_vertices()], path)?;
        println!("wrote       {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn solve(args: &Common) -> Result<ExitCode, Error> {
    let mut c = args.config()?;
    if let Some(out) = &args.out {
        c.output.slice_csv = Some(out.clone());
    }
    let level = c.study.levels[1];
    let run = run_single(&c, level)?;
    let sol = &run.solution;
    let problem = c.build_problem()?;
    let system = study::assemble(&c, &sol.mesh, &problem)?;
    let m_matrix = m_matrix_check(&system.matrix, Some(&system.dirichlet)).is_m_matrix;
    println!("preset      {}", c.problem.preset.name());
    println!("scheme      {:?}", c.discretization.scheme);
    println!("level       {level}");
    println!("dofs        {}", sol.space.num_dofs());
    println!("iterations  {}", sol.report.iterations);
    println!("residual    {:.3e}", sol.report.relative_residual);
    println!("converged   {}", sol.report.converged);
    println!("m-matrix    {m_matrix}");
    println!("min         {:.16e}", run.min);
    println!("max         {:.16e}", run.max);
    println!("finite      {}", run.is_finite());
    Ok(if sol.report.converged && run.is_finite() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn converge(args: &Common) -> Result<ExitCode, Error> {
    let c = args.config()?;
    let table = run_convergence_study(&c)?;
    print!("{}", convergence_csv(&table));
    if let Some(out) = &args.out {
        write_convergence_csv(&table, out)?;
    }
    for f in &table.failures {
        eprintln!("level {}: {}", f.level, f.message);
    }
    Ok(if table.is_success() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn rescale_demo(args: &Common) -> Result<ExitCode, Error> {
    let c = args.config()?;
    let kappa = c.problem.kappa;
    let mut original = c.clone();
    original.problem.kappa = 1.0;
    let level = c.study.levels[1];
    let base = study::solve_level(&original, &original.build_problem()?, level)?;
    let scaled = study::solve_level(&c, &c.build_problem()?, level)?;
    let diff = base.u.iter().zip(&scaled.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = base.u.iter().map(|v| v.abs()).fold(0.0, f64::max);
    println!("kappa               {kappa}");
    println!("level               {level}");
    println!("t_max               {} -> {}", original.build_problem()?.t_max.unwrap_or(0.0), c.build_problem()?.t_max.unwrap_or(0.0));
    println!("max |u - u_kappa|   {diff:.3e}");
    println!("max |u|             {scale:.3e}");
    let ok = base.report.converged && scaled.report.converged;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidInput(_) | Error::InvalidCoefficient(_) | Error::Unsupported(_) => 3,
        Error::SolverFailure(_)
        | Error::SingularMatrix { .. }
        | Error::Unisolvence { .. }
        | Error::CoefficientOutOfRange { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Mesh(a) => mesh(a),
        Command::Solve(a) => solve(a),
        Command::Converge(a) => converge(a),
        Command::RescaleDemo(a) => rescale_demo(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
