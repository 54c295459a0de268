use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use soc_amg::bench::{self, ExperimentConfig, Family, Solver};
use soc_amg::fem::{assemble_spec, criterion_curves};
use soc_amg::geometric::{geo_solve, GeoConfig};
use soc_amg::hierarchy::{build_hierarchy, Smoother, StopLimits};
use soc_amg::lumping::filter;
use soc_amg::mesh::{write_coordinates, BoundaryCondition, MeshSpec};
use soc_amg::sparse::market::write_matrix_market;
use soc_amg::strength::{build_strength_detailed, Classifier, DropConfig, Lumping, Scaling, SocKind};
use soc_amg::Result;

#[derive(Parser)]
#[command(name = "soc-amg", version, about = "Strength-of-connection experiments for smoothed-aggregation AMG")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assemble a stretched-mesh Poisson system and export it.
    Assemble {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Output directory for A.mtx, rhs.txt and coords.txt.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Build the strength graph of a problem and report edge counts.
    Strength {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        drop: DropArgs,
        /// Write the strong edges as "i j" lines.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Build an AMG hierarchy and solve one problem.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        drop: DropArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the hierarchy summary as CSV.
        #[arg(long)]
        summary_csv: Option<PathBuf>,
    },
    /// Run a stretch-factor sweep and emit CSV.
    Sweep {
        /// JSON experiment configuration; flags below override its keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        /// Pipeline label SOC/scaling/classifier, e.g. DLap/Sgn/Val.
        #[arg(long)]
        pipeline: Option<String>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, value_enum)]
        lumping: Option<LumpingArg>,
        #[arg(long, value_enum)]
        solver: Option<SolverArg>,
        /// Use this many log-spaced stretch factors instead of the config's.
        #[arg(long)]
        points: Option<usize>,
        /// CSV output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Geometric semi-coarsening multigrid on the z-stretched cube.
    Geo {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Semi-coarsening threshold; "inf" coarsens every axis.
        #[arg(long, default_value_t = f64::INFINITY)]
        abar: f64,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        /// Cells per axis; the grid has n+1 points per axis.
        #[arg(long, default_value_t = 81)]
        n: usize,
    },
    /// Print the interior stencil and the scaled strength values per class.
    Stencil {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Uniform box stretched by alpha along the last axis.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Tensor-stretch family: x stretch factor (selects the graded mesh).
    #[arg(long)]
    gamma1: Option<f64>,
    /// Tensor-stretch family: y stretch factor (defaults to gamma1).
    #[arg(long)]
    gamma2: Option<f64>,
    /// Cells per axis for the stretched box.
    #[arg(long, default_value_t = 16)]
    cells: usize,
    /// Boundary condition on every face of the stretched box.
    #[arg(long, value_enum, default_value_t = BcArg::Dirichlet)]
    bc: BcArg,
}

impl ProblemArgs {
    fn spec(&self) -> Result<MeshSpec> {
        if let Some(g1) = self.gamma1 {
            let g2 = self.gamma2.unwrap_or(g1);
            return match self.dim {
                3 => MeshSpec::tensor_3d(g1, g2),
                _ => MeshSpec::tensor_2d(g1, g2),
            };
        }
        let h = 1.0 / self.cells as f64;
        let bc = match self.bc {
            BcArg::Dirichlet => BoundaryCondition::Dirichlet,
            BcArg::Neumann => BoundaryCondition::Neumann,
        };
        Ok(MeshSpec::uniaxial(self.dim, self.cells, h, self.alpha)?.with_all_faces(bc))
    }
}

#[derive(Args)]
struct DropArgs {
    #[arg(long, value_enum, default_value_t = SocArg::Dlap)]
    soc: SocArg,
    #[arg(long, value_enum, default_value_t = ScalingArg::Sgn)]
    scaling: ScalingArg,
    #[arg(long, value_enum, default_value_t = ClassifierArg::Val)]
    classifier: ClassifierArg,
    /// Threshold, or gap tolerance for the Gap classifier.
    #[arg(long, default_value_t = 0.16)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = LumpingArg::Diagonal)]
    lumping: LumpingArg,
}

impl DropArgs {
    fn config(&self) -> Result<DropConfig> {
        let cfg = DropConfig {
            soc: match self.soc {
                SocArg::A => SocKind::SystemMatrix,
                SocArg::Dlap => SocKind::DistanceLaplacian,
            },
            scaling: match self.scaling {
                ScalingArg::Sa => Scaling::SymmetricSa,
                ScalingArg::Sgn => Scaling::SignedClassical,
            },
            classifier: match self.classifier {
                ClassifierArg::Val => Classifier::Threshold,
                ClassifierArg::Gap => Classifier::CutDrop,
            },
            theta: self.theta,
            theta_gap: self.theta,
            lumping: self.lumping.into(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SolverArg::Pcg)]
    solver: SolverArg,
    /// Relative residual tolerance (1e-10 for CG, 1e-6 for GMRES).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// "sgs" or "jacobi:<omega>".
    #[arg(long, default_value = "sgs", value_parser = parse_smoother)]
    smoother: Smoother,
}

fn parse_smoother(s: &str) -> std::result::Result<Smoother, String> {
    if s.eq_ignore_ascii_case("sgs") {
        return Ok(Smoother::SymmetricGaussSeidel);
    }
    match s.split_once(':') {
        Some(("jacobi", w)) => w
            .parse()
            .map(|omega| Smoother::Jacobi { omega })
            .map_err(|e| format!("bad damping {w:?}: {e}")),
        _ if s == "jacobi" => Ok(Smoother::GEOMETRIC_DEFAULT),
        _ => Err(format!("unknown smoother {s:?}")),
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, ValueEnum)]
enum SocArg {
    A,
    Dlap,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    Sa,
    Sgn,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Val,
    Gap,
}

#[derive(Clone, Copy, ValueEnum)]
enum LumpingArg {
    Diagonal,
    Distributed,
}

impl From<LumpingArg> for Lumping {
    fn from(l: LumpingArg) -> Lumping {
        match l {
            LumpingArg::Diagonal => Lumping::Diagonal,
            LumpingArg::Distributed => Lumping::Distributed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Tensor2d,
    Tensor3d,
    Geo3d,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Pcg,
    Gmres,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Solver {
        match s {
            SolverArg::Pcg => Solver::Pcg,
            SolverArg::Gmres => Solver::Gmres,
        }
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Assemble { problem, out } => {
            let (mesh, sys) = assemble_spec(&problem.spec()?)?;
            std::fs::create_dir_all(&out)?;
            write_matrix_market(&sys.a, create(&out.join("A.mtx"))?)?;
            let mut rhs = create(&out.join("rhs.txt"))?;
            for v in &sys.f {
                writeln!(rhs, "{v:.16e}")?;
            }
            write_coordinates(&sys.free_coords, &mut create(&out.join("coords.txt"))?)?;
            println!(
                "{} vertices, {} free dofs, nnz {} -> {}",
                mesh.num_vertices(),
                sys.num_dofs(),
                sys.a.nnz(),
                out.display()
            );
        }
        Cmd::Strength { problem, drop, edges } => {
            let cfg = drop.config()?;
            let (_, sys) = assemble_spec(&problem.spec()?)?;
            let s = build_strength_detailed(&sys.a, Some(&sys.free_coords), &cfg)?;
            let filtered = filter(&sys.a, &s.graph, cfg.lumping)?;
            println!("pipeline       {} theta {} {} lumping", cfg.label(), cfg.theta, cfg.lumping);
            println!("rows           {}", sys.num_dofs());
            println!("off-diagonals  {}", sys.a.nnz() - sys.num_dofs());
            println!("strong edges   {}", s.graph.num_edges());
            println!("symmetric      {}", s.graph.is_symmetric());
            println!("diag <= 0 rows {}", filtered.nonpositive_diagonal.len());
            println!("fallback rows  {}", filtered.fallback_rows.len());
            if let Some(path) = edges {
                s.graph.write_edge_list(create(&path)?)?;
            }
        }
        Cmd::Solve {
            problem,
            drop,
            solver,
            summary_csv,
        } => {
            let cfg = drop.config()?;
            let spec = problem.spec()?;
            let (_, sys) = assemble_spec(&spec)?;
            let h = build_hierarchy(&sys.a, Some(&sys.free_coords), &cfg, solver.smoother, &StopLimits::default())?;
            print!("{}", h.summary_text());
            if let Some(path) = summary_csv {
                create(&path)?.write_all(h.summary_csv().as_bytes())?;
            }
            let mut exp = ExperimentConfig::new(Family::Tensor2d, cfg);
            exp.solver = solver.solver.into();
            exp.tol = solver.tol;
            let opts = soc_amg::krylov::SolveOptions {
                tol: exp.tolerance(),
                max_iter: solver.max_iter,
                restart: exp.restart,
            };
            let mut x = sys.u0.clone();
            let report = match exp.solver {
                Solver::Pcg => soc_amg::krylov::pcg(&sys.a, &sys.f, &h, &mut x, &opts)?,
                Solver::Gmres => soc_amg::krylov::gmres(&sys.a, &sys.f, &h, &mut x, &opts)?,
            };
            let err = x.iter().zip(&sys.exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            println!("{}", soc_amg::krylov::SolveReport::CSV_HEADER);
            println!("{}", report.csv_row());
            println!("max nodal error {err:.3e}");
        }
        Cmd::Sweep {
            config,
            family,
            pipeline,
            theta,
            lumping,
            solver,
            points,
            out,
        } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::new(Family::Tensor2d, bench::default_drop()),
            };
            if let Some(f) = family {
                cfg.family = match f {
                    FamilyArg::Tensor2d => Family::Tensor2d,
                    FamilyArg::Tensor3d => Family::Tensor3d,
                    FamilyArg::Geo3d => Family::Geo3d,
                };
            }
            let theta = theta.unwrap_or(cfg.drop.theta);
            let lumping = lumping.map(Lumping::from).unwrap_or(cfg.drop.lumping);
            cfg.drop = match &pipeline {
                Some(label) => DropConfig::from_label(label, theta, lumping)?,
                None => DropConfig {
                    theta,
                    theta_gap: theta,
                    lumping,
                    ..cfg.drop
                },
            };
            if let Some(s) = solver {
                cfg.solver = s.into();
            }
            if let Some(k) = points {
                cfg.gamma1 = bench::log_spaced(0.5, 200.0, k);
                cfg.gamma2 = cfg.gamma1.clone();
            }
            let rows = bench::run_sweep(&cfg)?;
            let csv = bench::to_csv(&rows);
            match out {
                Some(p) => create(&p)?.write_all(csv.as_bytes())?,
                None => io::stdout().write_all(csv.as_bytes())?,
            }
            let failed = rows.iter().filter(|r| !r.converged()).count();
            eprintln!("{} points, {failed} without a converged solve", rows.len());
        }
        Cmd::Geo { alpha, abar, levels, n } => {
            let cfg = GeoConfig {
                cells: n,
                levels,
                ..GeoConfig::table(alpha, abar)
            };
            let r = geo_solve(&cfg)?;
            println!("plan        {}", r.plan.describe());
            println!("dofs        {}", r.dofs);
            println!("iterations  {}", r.report.iterations);
            println!("converged   {}", r.report.converged);
            println!("complexity  {:.4}", r.report.operator_complexity);
        }
        Cmd::Stencil { dim, alpha } => {
            let spec = MeshSpec::uniaxial(dim, 4, 1.0, alpha)?;
            let (_, sys) = assemble_spec(&spec)?;
            println!("interior stencil, h = 1, alpha = {alpha}");
            for (off, v) in sys.interior_stencil(sys.center_vertex())? {
                println!("  {:>2} {:>2} {:>2}  {v:>22.16e}", off[0], off[1], off[2]);
            }
            for (soc, scaling) in [
                (SocKind::SystemMatrix, Scaling::SymmetricSa),
                (SocKind::SystemMatrix, Scaling::SignedClassical),
                (SocKind::DistanceLaplacian, Scaling::SymmetricSa),
                (SocKind::DistanceLaplacian, Scaling::SignedClassical),
            ] {
                println!("{soc}/{scaling}");
                for p in criterion_curves(dim, soc, scaling, &[alpha])? {
                    println!("  {:<4} {:>12.6}", p.class.name(), p.value);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
