//! Stretch-factor sweeps, the semi-coarsening iteration table and the
//! iterations × complexity cost metric.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_spec, AssembledSystem};
use crate::geometric::{random_rhs, solve_with_plan, GeoConfig, RHS_SEED};
use crate::hierarchy::{build_hierarchy, Hierarchy, Smoother, StopLimits};
use crate::krylov::{gmres, pcg, SolveOptions, SolveReport};
use crate::mesh::MeshSpec;
use crate::strength::{Classifier, DropConfig, Lumping, Scaling, SocKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Graded nine-region 2D mesh, Dirichlet on y = 0.
    Tensor2d,
    /// The 2D layout extruded through 80 z-cells.
    Tensor3d,
    /// Uniform cube stretched in z by γ₁ (γ₂ is ignored).
    Geo3d,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Tensor2d => "tensor2d",
            Family::Tensor3d => "tensor3d",
            Family::Geo3d => "geo3d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Pcg,
    Gmres,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rhs {
    /// Load of the multilinear manufactured solution.
    Manufactured,
    /// Seeded uniform(-1, 1).
    Random,
}

/// `n` values spaced logarithmically from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect(),
    }
}

/// The twenty stretch factors between 0.5 and 200.
pub fn sweep_gammas() -> Vec<f64> {
    log_spaced(0.5, 200.0, 20)
}

fn default_gammas() -> Vec<f64> {
    sweep_gammas()
}
fn default_max_iter() -> usize {
    500
}
fn default_restart() -> usize {
    300
}
fn default_seed() -> u64 {
    RHS_SEED
}
fn default_cells() -> usize {
    81
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    #[serde(default = "default_gammas")]
    pub gamma1: Vec<f64>,
    #[serde(default = "default_gammas")]
    pub gamma2: Vec<f64>,
    pub drop: DropConfig,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    /// Defaults to 1e-10 for CG and 1e-6 for GMRES.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default)]
    pub smoother: Smoother,
    #[serde(default = "default_rhs")]
    pub rhs: Rhs,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Cells per axis for the `geo3d` family.
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default)]
    pub limits: StopLimits,
}

fn default_solver() -> Solver {
    Solver::Pcg
}
fn default_rhs() -> Rhs {
    Rhs::Manufactured
}

impl ExperimentConfig {
    pub fn new(family: Family, drop: DropConfig) -> Self {
        ExperimentConfig {
            family,
            gamma1: default_gammas(),
            gamma2: default_gammas(),
            drop,
            solver: Solver::Pcg,
            tol: None,
            max_iter: default_max_iter(),
            restart: default_restart(),
            smoother: Smoother::default(),
            rhs: Rhs::Manufactured,
            seed: RHS_SEED,
            cells: default_cells(),
            limits: StopLimits::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.drop.validate()?;
        if self.gamma1.is_empty() || self.gamma2.is_empty() {
            return Err(Error::InvalidConfig("empty stretch-factor list".into()));
        }
        if let Some(g) = self.gamma1.iter().chain(&self.gamma2).find(|&&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidConfig(format!("stretch factor {g} must be positive")));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidConfig(format!("tolerance {t} outside (0, 1)")));
            }
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(Error::InvalidConfig("iteration limits must be positive".into()));
        }
        if let Smoother::Jacobi { omega } = self.smoother {
            if !(omega > 0.0 && omega < 2.0) {
                return Err(Error::InvalidConfig(format!("Jacobi damping {omega} outside (0, 2)")));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self) -> f64 {
        self.tol.unwrap_or(match self.solver {
            Solver::Pcg => 1e-10,
            Solver::Gmres => 1e-6,
        })
    }

    /// (γ₁, γ₂) pairs with γ₂ ≥ γ₁, γ₁ outer.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        if self.family == Family::Geo3d {
            return self.gamma1.iter().map(|&g| (g, g)).collect();
        }
        let mut out = Vec::new();
        for &g1 in &self.gamma1 {
            for &g2 in &self.gamma2 {
                if g2 >= g1 {
                    out.push((g1, g2));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub family: Family,
    pub gamma1: f64,
    pub gamma2: f64,
    pub drop: DropConfig,
    pub levels: Option<usize>,
    pub iters: Option<usize>,
    pub complexity: Option<f64>,
    pub cost: Option<f64>,
    /// Filtered diagonals that came out non-positive, all levels.
    pub flagged_rows: usize,
    pub status: String,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.status == "ok"
    }
}

pub const CSV_HEADER: &str = "family,gamma1,gamma2,soc,scaling,classifier,theta,lumping,levels,iters,complexity,cost,status";

pub fn csv_line(r: &SweepRow) -> String {
    let theta = match r.drop.classifier {
        Classifier::Threshold => r.drop.theta,
        Classifier::CutDrop => r.drop.theta_gap,
    };
    let opt_u = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
    let opt_f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
    format!(
        "{},{:.6},{:.6},{},{},{},{},{},{},{},{},{},{}",
        r.family.name(),
        r.gamma1,
        r.gamma2,
        r.drop.soc,
        r.drop.scaling,
        r.drop.classifier,
        theta,
        r.drop.lumping,
        opt_u(r.levels),
        opt_u(r.iters),
        opt_f(r.complexity),
        opt_f(r.cost),
        r.status.replace([',', '\n'], ";")
    )
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::with_capacity(rows.len() * 96 + 128);
    writeln!(s, "{CSV_HEADER}").unwrap();
    for r in rows {
        writeln!(s, "{}", csv_line(r)).unwrap();
    }
    s
}

/// Iterations × operator complexity, or `None` for a run that did not
/// converge.
pub fn cost_metric(report: &SolveReport) -> Option<f64> {
    report.converged.then_some(report.iterations as f64 * report.operator_complexity)
}

pub fn problem_spec(family: Family, gamma1: f64, gamma2: f64, cells: usize) -> Result<MeshSpec> {
    match family {
        Family::Tensor2d => MeshSpec::tensor_2d(gamma1, gamma2),
        Family::Tensor3d => MeshSpec::tensor_3d(gamma1, gamma2),
        Family::Geo3d => MeshSpec::z_stretched_box(cells, gamma1),
    }
}

/// Everything produced by one AMG solve.
pub struct PointOutcome {
    pub system: AssembledSystem,
    pub hierarchy: Hierarchy,
    pub report: SolveReport,
    pub solution: Vec<f64>,
}

/// Assemble, build the hierarchy and solve one problem.
pub fn solve_point(cfg: &ExperimentConfig, gamma1: f64, gamma2: f64) -> Result<PointOutcome> {
    let spec = problem_spec(cfg.family, gamma1, gamma2, cfg.cells)?;
    let (_, system) = assemble_spec(&spec)?;
    let hierarchy = build_hierarchy(&system.a, Some(&system.free_coords), &cfg.drop, cfg.smoother, &cfg.limits)?;
    let b = match cfg.rhs {
        Rhs::Manufactured => system.f.clone(),
        Rhs::Random => random_rhs(system.num_dofs(), cfg.seed),
    };
    let mut x = system.u0.clone();
    let opts = SolveOptions {
        tol: cfg.tolerance(),
        max_iter: cfg.max_iter,
        restart: cfg.restart,
    };
    let report = match cfg.solver {
        Solver::Pcg => pcg(&system.a, &b, &hierarchy, &mut x, &opts)?,
        Solver::Gmres => gmres(&system.a, &b, &hierarchy, &mut x, &opts)?,
    };
    Ok(PointOutcome {
        system,
        hierarchy,
        report,
        solution: x,
    })
}

/// One sweep row; failures are recorded in `status`, never propagated.
pub fn run_point(cfg: &ExperimentConfig, gamma1: f64, gamma2: f64) -> SweepRow {
    let mut row = SweepRow {
        family: cfg.family,
        gamma1,
        gamma2,
        drop: cfg.drop,
        levels: None,
        iters: None,
        complexity: None,
        cost: None,
        flagged_rows: 0,
        status: String::new(),
    };
    match solve_point(cfg, gamma1, gamma2) {
        Ok(out) => {
            row.levels = Some(out.hierarchy.num_levels());
            row.iters = Some(out.report.iterations);
            row.complexity = Some(out.report.operator_complexity);
            row.cost = cost_metric(&out.report);
            row.flagged_rows = out.hierarchy.nonpositive_diagonal_rows();
            row.status = if out.report.converged { "ok".into() } else { "not_converged".into() };
        }
        Err(e) => {
            log::info!("γ=({gamma1:.4}, {gamma2:.4}) {}: {e}", cfg.drop.label());
            row.status = format!("error: {e}");
        }
    }
    row
}

/// Run every (γ₁, γ₂) point. Points may run concurrently; rows come back in
/// `pairs()` order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let pairs = cfg.pairs();
    Ok(pairs.par_iter().map(|&(g1, g2)| run_point(cfg, g1, g2)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct TableCell {
    pub alpha: f64,
    pub abar: f64,
    pub plan: String,
    pub iterations: usize,
    pub converged: bool,
    /// True when the plan equals the one of the previous ᾱ in the column.
    pub same_as_previous: bool,
}

/// Semi-coarsening iteration table: one geometric solve per distinct plan.
pub fn semi_table(cells: usize, alphas: &[f64], abars: &[f64], levels: usize) -> Result<Vec<TableCell>> {
    let mut out = Vec::new();
    for &alpha in alphas {
        let base = GeoConfig {
            cells,
            levels,
            ..GeoConfig::table(alpha, 1.0)
        };
        let (_, sys) = crate::geometric::geo_system(&base)?;
        let mut done: HashMap<String, (usize, bool)> = HashMap::new();
        let mut prev: Option<String> = None;
        for &abar in abars {
            let cfg = GeoConfig { abar, ..base };
            let plan = cfg.plan()?;
            let key = plan.describe();
            let (iterations, converged) = match done.get(&key) {
                Some(&v) => v,
                None => {
                    let r = solve_with_plan(&sys, plan, &cfg)?;
                    log::info!("alpha {alpha} abar {abar}: {key} -> {} iterations", r.report.iterations);
                    let v = (r.report.iterations, r.report.converged);
                    done.insert(key.clone(), v);
                    v
                }
            };
            out.push(TableCell {
                alpha,
                abar,
                same_as_previous: prev.as_deref() == Some(key.as_str()),
                plan: key.clone(),
                iterations,
                converged,
            });
            prev = Some(key);
        }
    }
    Ok(out)
}

/// Default pipeline used by the CLI and examples.
pub fn default_drop() -> DropConfig {
    DropConfig {
        soc: SocKind::DistanceLaplacian,
        scaling: Scaling::SignedClassical,
        classifier: Classifier::Threshold,
        theta: 0.16,
        theta_gap: 0.16,
        lumping: Lumping::Diagonal,
    }
}
