//! Structured geometric multigrid with semi-coarsening: x and y coarsen on
//! every transition, z only once its spacing is at most ᾱ times the x
//! spacing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{assemble_spec, AssembledSystem};
use crate::hierarchy::{Hierarchy, Smoother};
use crate::krylov::{pcg, SolveOptions, SolveReport};
use crate::mesh::{Mesh, MeshSpec};
use crate::sparse::CsrMatrix;

/// Seed of the random right-hand sides.
pub const RHS_SEED: u64 = 20240801;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub points: [usize; 3],
    pub spacing: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPlan {
    pub grids: Vec<Grid>,
    /// Axes coarsened on the transition from `grids[k]` to `grids[k + 1]`.
    pub masks: Vec<[bool; 3]>,
}

impl GridPlan {
    pub fn describe(&self) -> String {
        self.grids
            .iter()
            .map(|g| format!("{}x{}x{}", g.points[0], g.points[1], g.points[2]))
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

/// Plan `n_levels` grids under the semi_ᾱ rule (`abar = f64::INFINITY`
/// coarsens every axis every time).
pub fn plan_semi_coarsening(points: [usize; 3], spacing: [f64; 3], abar: f64, n_levels: usize) -> Result<GridPlan> {
    if n_levels == 0 {
        return Err(Error::InvalidConfig("a grid plan needs at least one level".into()));
    }
    if !(abar > 0.0) {
        return Err(Error::InvalidConfig(format!("coarsening ratio {abar} must be positive")));
    }
    let mut grids = vec![Grid { points, spacing }];
    let mut masks = Vec::new();
    for _ in 1..n_levels {
        let g = *grids.last().unwrap();
        let hx = g.spacing[0];
        let mut mask = [false; 3];
        let mut next = g;
        for a in 0..3 {
            mask[a] = a < 2 || g.spacing[a] <= abar * hx;
            if !mask[a] {
                continue;
            }
            let n = g.points[a];
            if n < 4 || (n - 1) % 3 != 0 {
                return Err(Error::InvalidConfig(format!(
                    "axis {a} with {n} points cannot be coarsened by 3"
                )));
            }
            next.points[a] = (n - 1) / 3 + 1;
            next.spacing[a] = 3.0 * g.spacing[a];
        }
        masks.push(mask);
        grids.push(next);
    }
    Ok(GridPlan { grids, masks })
}

/// 1D factor-3 linear interpolation, `n_fine × n_coarse`.
pub fn interpolation_1d(n_fine: usize, coarsen: bool) -> Result<CsrMatrix> {
    if !coarsen {
        return Ok(CsrMatrix::identity(n_fine));
    }
    if n_fine < 4 || (n_fine - 1) % 3 != 0 {
        return Err(Error::InvalidConfig(format!("{n_fine} points cannot be coarsened by 3")));
    }
    let nc = (n_fine - 1) / 3 + 1;
    let mut t = Vec::with_capacity(2 * n_fine);
    for i in 0..n_fine {
        let (k, r) = (i / 3, i % 3);
        match r {
            0 => t.push((i, k, 1.0)),
            1 => {
                t.push((i, k, 2.0 / 3.0));
                t.push((i, k + 1, 1.0 / 3.0));
            }
            _ => {
                t.push((i, k, 1.0 / 3.0));
                t.push((i, k + 1, 2.0 / 3.0));
            }
        }
    }
    CsrMatrix::from_triplets(n_fine, nc, &t)
}

/// Tensor-product interpolation between two consecutive plan grids (all
/// vertices, x fastest).
pub fn multilinear_interpolation(fine: &Grid, coarse: &Grid, mask: [bool; 3]) -> Result<CsrMatrix> {
    let mut p1 = Vec::with_capacity(3);
    for a in 0..3 {
        let p = interpolation_1d(fine.points[a], mask[a])?;
        if p.ncols() != coarse.points[a] {
            return Err(Error::InvalidConfig(format!(
                "axis {a}: coarse grid has {} points, interpolation gives {}",
                coarse.points[a],
                p.ncols()
            )));
        }
        p1.push(p);
    }
    Ok(CsrMatrix::kron(&p1[2], &CsrMatrix::kron(&p1[1], &p1[0])))
}

fn free_mask(points: [usize; 3], faces_dirichlet: [[bool; 2]; 3]) -> Vec<bool> {
    let [nx, ny, nz] = points;
    let mut m = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = [i, j, k];
                let fixed = (0..3).any(|a| {
                    (idx[a] == 0 && faces_dirichlet[a][0]) || (idx[a] + 1 == points[a] && faces_dirichlet[a][1])
                });
                m.push(!fixed);
            }
        }
    }
    m
}

/// Prolongators between the free dofs of consecutive plan grids.
pub fn plan_prolongators(plan: &GridPlan, faces_dirichlet: [[bool; 2]; 3]) -> Result<Vec<CsrMatrix>> {
    let mut out = Vec::with_capacity(plan.masks.len());
    for (k, mask) in plan.masks.iter().enumerate() {
        let (f, c) = (&plan.grids[k], &plan.grids[k + 1]);
        let full = multilinear_interpolation(f, c, *mask)?;
        let fm = free_mask(f.points, faces_dirichlet);
        let cm = free_mask(c.points, faces_dirichlet);
        let rows: Vec<usize> = (0..fm.len()).filter(|&i| fm[i]).collect();
        let mut next = 0;
        let col_map: Vec<Option<usize>> = cm
            .iter()
            .map(|&free| {
                free.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        out.push(full.select(&rows, &col_map, next));
    }
    Ok(out)
}

/// Deterministic uniform(-1, 1) vector.
pub fn random_rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoConfig {
    /// Cells per axis of the fine cube.
    pub cells: usize,
    pub alpha: f64,
    pub abar: f64,
    pub levels: usize,
    pub smoother: Smoother,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl GeoConfig {
    /// The 82³ setup: 4 levels, Jacobi(0.6), CG to 1e-10.
    pub fn table(alpha: f64, abar: f64) -> Self {
        GeoConfig {
            cells: 81,
            alpha,
            abar,
            levels: 4,
            smoother: Smoother::GEOMETRIC_DEFAULT,
            tol: 1e-10,
            max_iter: 2000,
            seed: RHS_SEED,
        }
    }

    pub fn plan(&self) -> Result<GridPlan> {
        let h = 1.0 / self.cells as f64;
        plan_semi_coarsening([self.cells + 1; 3], [h, h, self.alpha * h], self.abar, self.levels)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeoResult {
    pub plan: GridPlan,
    pub dofs: usize,
    pub report: SolveReport,
}

/// Neumann on the two x faces, Dirichlet elsewhere.
const GEO_FACES: [[bool; 2]; 3] = [[false, false], [true, true], [true, true]];

pub fn geo_system(cfg: &GeoConfig) -> Result<(Mesh, AssembledSystem)> {
    assemble_spec(&MeshSpec::z_stretched_box(cfg.cells, cfg.alpha)?)
}

pub fn geo_hierarchy(sys: &AssembledSystem, plan: &GridPlan, smoother: Smoother) -> Result<Hierarchy> {
    let ps = plan_prolongators(plan, GEO_FACES)?;
    Hierarchy::from_prolongators(&sys.a, ps, smoother)
}

pub fn geo_solve(cfg: &GeoConfig) -> Result<GeoResult> {
    let plan = cfg.plan()?;
    let (_, sys) = geo_system(cfg)?;
    solve_with_plan(&sys, plan, cfg)
}

/// Solve an already assembled system with the given plan, so several plans
/// can share one assembly.
pub fn solve_with_plan(sys: &AssembledSystem, plan: GridPlan, cfg: &GeoConfig) -> Result<GeoResult> {
    let h = geo_hierarchy(sys, &plan, cfg.smoother)?;
    let n = sys.num_dofs();
    let b = random_rhs(n, cfg.seed);
    let mut x = vec![0.0; n];
    let opts = SolveOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..SolveOptions::cg()
    };
    let report = pcg(&sys.a, &b, &h, &mut x, &opts)?;
    Ok(GeoResult { plan, dofs: n, report })
}
