//! Smoothed-aggregation hierarchy setup and the V(1,1) cycle.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate, Aggregation};
use crate::error::{Error, Result};
use crate::krylov::Preconditioner;
use crate::lumping::filter;
use crate::sparse::{galerkin_triple_product, signed_dominant_eig, CsrMatrix, DenseLu, DEFAULT_DENSE_CAP, POWER_ITERATIONS, POWER_SEED};
use crate::strength::{build_strength, DropConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoother {
    /// Damped point Jacobi.
    Jacobi { omega: f64 },
    /// One forward then one backward Gauss-Seidel sweep.
    SymmetricGaussSeidel,
}

impl Smoother {
    pub const GEOMETRIC_DEFAULT: Smoother = Smoother::Jacobi { omega: 0.6 };
}

impl Default for Smoother {
    fn default() -> Self {
        Smoother::SymmetricGaussSeidel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopLimits {
    /// Stop coarsening once a level has fewer rows than this.
    pub min_coarse_rows: usize,
    pub max_levels: usize,
    /// Give up when n_coarse / n_fine exceeds this.
    pub stall_ratio: f64,
    pub dense_cap: usize,
}

impl Default for StopLimits {
    fn default() -> Self {
        StopLimits {
            min_coarse_rows: 1000,
            max_levels: 20,
            stall_ratio: 0.95,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SmallEnough,
    LevelCap,
    Stalled,
    /// Hierarchy given explicitly (geometric multigrid).
    Prescribed,
}

/// Setup diagnostics of one level.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LevelStats {
    pub rows: usize,
    pub nnz: usize,
    pub aggregates: Option<usize>,
    pub strong_edges: Option<usize>,
    pub rho: Option<f64>,
    pub omega: Option<f64>,
    pub nonpositive_diagonal_rows: usize,
    pub fallback_rows: usize,
    pub sign_condition_rows: usize,
}

#[derive(Debug, Clone)]
pub struct Level {
    pub a: CsrMatrix,
    pub p: Option<CsrMatrix>,
    pub r: Option<CsrMatrix>,
    pub coords: Option<Vec<[f64; 3]>>,
    pub stats: LevelStats,
    inv_diag: Vec<f64>,
}

impl Level {
    fn new(a: CsrMatrix, coords: Option<Vec<[f64; 3]>>) -> Result<Self> {
        let d = a.diag();
        if let Some(row) = d.iter().position(|&x| x == 0.0) {
            let count = d.iter().filter(|&&x| x == 0.0).count();
            return Err(Error::ZeroDiagonal { row, count });
        }
        let stats = LevelStats {
            rows: a.nrows(),
            nnz: a.nnz(),
            ..Default::default()
        };
        Ok(Level {
            inv_diag: d.iter().map(|x| 1.0 / x).collect(),
            a,
            p: None,
            r: None,
            coords,
            stats,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub levels: Vec<Level>,
    pub smoother: Smoother,
    pub stop_reason: StopReason,
    coarse: DenseLu,
}

/// P = (I - ω D̃⁻¹ Ã) P_t with ω = 4/(3ρ̂), ρ̂ the signed power-method
/// estimate for D̃⁻¹Ã. Returns (P, ω, ρ̂).
pub fn smooth_prolongator(filtered: &CsrMatrix, pt: &CsrMatrix) -> Result<(CsrMatrix, f64, f64)> {
    let rho = signed_dominant_eig(filtered, POWER_ITERATIONS, POWER_SEED)?;
    if rho == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    if rho < 0.0 {
        log::warn!("negative spectral radius estimate {rho:.4e}; damping parameter will be negative");
    }
    let omega = 4.0 / (3.0 * rho);
    let ap = filtered.matmul(pt)?;
    let d = filtered.diag();

    let n = pt.nrows();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::with_capacity(ap.nnz());
    let mut vals = Vec::with_capacity(ap.nnz());
    for i in 0..n {
        let s = omega / d[i];
        let (pc, pv) = pt.row(i);
        let (qc, qv) = ap.row(i);
        let (mut a, mut b) = (0, 0);
        while a < pc.len() || b < qc.len() {
            let ca = pc.get(a).copied().unwrap_or(usize::MAX);
            let cb = qc.get(b).copied().unwrap_or(usize::MAX);
            if ca < cb {
                cols.push(ca);
                vals.push(pv[a]);
                a += 1;
            } else if cb < ca {
                cols.push(cb);
                vals.push(-s * qv[b]);
                b += 1;
            } else {
                cols.push(ca);
                vals.push(pv[a] - s * qv[b]);
                a += 1;
                b += 1;
            }
        }
        offsets.push(cols.len());
    }
    Ok((CsrMatrix::from_parts(n, pt.ncols(), offsets, cols, vals), omega, rho))
}

/// Centroid of each aggregate's member coordinates.
pub fn coarse_coordinates(agg: &Aggregation, coords: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut sum = vec![[0.0; 3]; agg.n_aggregates()];
    let mut count = vec![0usize; agg.n_aggregates()];
    for (v, &a) in agg.assignment().iter().enumerate() {
        for k in 0..3 {
            sum[a][k] += coords[v][k];
        }
        count[a] += 1;
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| [s[0] / c as f64, s[1] / c as f64, s[2] / c as f64])
        .collect()
}

pub fn build_hierarchy(
    a: &CsrMatrix,
    coords: Option<&[[f64; 3]]>,
    cfg: &DropConfig,
    smoother: Smoother,
    limits: &StopLimits,
) -> Result<Hierarchy> {
    cfg.validate()?;
    let mut levels = vec![Level::new(a.clone(), coords.map(|c| c.to_vec()))?];
    let stop_reason = loop {
        let cur = levels.last_mut().unwrap();
        if cur.a.nrows() < limits.min_coarse_rows {
            break StopReason::SmallEnough;
        }
        if levels.len() >= limits.max_levels {
            break StopReason::LevelCap;
        }
        let cur = levels.last_mut().unwrap();
        let graph = build_strength(&cur.a, cur.coords.as_deref(), cfg)?;
        let filtered = filter(&cur.a, &graph, cfg.lumping)?;
        let agg = aggregate(&graph);
        let ratio = agg.n_aggregates() as f64 / cur.a.nrows() as f64;
        cur.stats.strong_edges = Some(graph.num_edges());
        cur.stats.aggregates = Some(agg.n_aggregates());
        cur.stats.nonpositive_diagonal_rows = filtered.nonpositive_diagonal.len();
        cur.stats.fallback_rows = filtered.fallback_rows.len();
        cur.stats.sign_condition_rows = filtered.sign_condition_rows.len();
        if ratio > limits.stall_ratio {
            log::warn!("coarsening stalled at {} rows (ratio {ratio:.3})", cur.a.nrows());
            break StopReason::Stalled;
        }
        let pt = agg.tentative_prolongator()?;
        let (p, omega, rho) = smooth_prolongator(&filtered.a, &pt)?;
        cur.stats.omega = Some(omega);
        cur.stats.rho = Some(rho);
        let ac = galerkin_triple_product(&p, &cur.a)?;
        let cc = cur.coords.as_ref().map(|c| coarse_coordinates(&agg, c));
        cur.r = Some(p.transpose());
        cur.p = Some(p);
        levels.push(Level::new(ac, cc)?);
    };
    finish(levels, smoother, stop_reason, limits.dense_cap)
}

fn finish(levels: Vec<Level>, smoother: Smoother, stop_reason: StopReason, cap: usize) -> Result<Hierarchy> {
    let last = levels.last().unwrap();
    if last.a.nrows() > cap {
        let ratio = last.stats.aggregates.map_or(1.0, |k| k as f64 / last.a.nrows() as f64);
        return Err(Error::CoarseningStalled {
            rows: last.a.nrows(),
            ratio,
        });
    }
    let coarse = DenseLu::factor_with_cap(&last.a, cap)?;
    Ok(Hierarchy {
        levels,
        smoother,
        stop_reason,
        coarse,
    })
}

impl Hierarchy {
    /// Hierarchy from explicit prolongators, with Galerkin coarse operators.
    pub fn from_prolongators(a: &CsrMatrix, ps: Vec<CsrMatrix>, smoother: Smoother) -> Result<Self> {
        let mut levels = vec![Level::new(a.clone(), None)?];
        for p in ps {
            let cur = levels.last_mut().unwrap();
            let ac = galerkin_triple_product(&p, &cur.a)?;
            cur.r = Some(p.transpose());
            cur.p = Some(p);
            levels.push(Level::new(ac, None)?);
        }
        finish(levels, smoother, StopReason::Prescribed, DEFAULT_DENSE_CAP)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Σ nnz(A_ℓ) / nnz(A_0).
    pub fn operator_complexity(&self) -> f64 {
        let total: usize = self.levels.iter().map(|l| l.a.nnz()).sum();
        total as f64 / self.levels[0].a.nnz() as f64
    }

    fn smooth(&self, l: &Level, b: &[f64], x: &mut [f64], work: &mut [f64]) {
        match self.smoother {
            Smoother::Jacobi { omega } => {
                l.a.residual_into(b, x, work);
                for ((xi, ri), di) in x.iter_mut().zip(work.iter()).zip(&l.inv_diag) {
                    *xi += omega * ri * di;
                }
            }
            Smoother::SymmetricGaussSeidel => {
                let n = l.a.nrows();
                let sweep = |i: usize, x: &mut [f64]| {
                    let (c, v) = l.a.row(i);
                    let mut s = b[i];
                    for (&j, &a) in c.iter().zip(v) {
                        s -= a * x[j];
                    }
                    x[i] += s * l.inv_diag[i];
                };
                for i in 0..n {
                    sweep(i, x);
                }
                for i in (0..n).rev() {
                    sweep(i, x);
                }
            }
        }
    }

    fn cycle(&self, lvl: usize, b: &[f64], x: &mut [f64]) {
        let l = &self.levels[lvl];
        if lvl + 1 == self.levels.len() {
            self.coarse.solve_into(b, x);
            return;
        }
        let n = l.a.nrows();
        let mut work = vec![0.0; n];
        self.smooth(l, b, x, &mut work);
        l.a.residual_into(b, x, &mut work);
        let r = l.r.as_ref().unwrap();
        let p = l.p.as_ref().unwrap();
        let mut bc = vec![0.0; r.nrows()];
        r.spmv_into(&work, &mut bc);
        let mut xc = vec![0.0; r.nrows()];
        self.cycle(lvl + 1, &bc, &mut xc);
        p.spmv_into(&xc, &mut work);
        for (xi, ci) in x.iter_mut().zip(&work) {
            *xi += ci;
        }
        self.smooth(l, b, x, &mut work);
    }

    /// One V(1,1) cycle on A_0 x = b starting from the given x.
    pub fn vcycle(&self, b: &[f64], x: &mut [f64]) {
        self.cycle(0, b, x);
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "levels {}  operator complexity {:.4}  stop {:?}",
            self.num_levels(),
            self.operator_complexity(),
            self.stop_reason
        )
        .unwrap();
        writeln!(s, "{:>5} {:>10} {:>12} {:>10} {:>10} {:>8}", "level", "rows", "nnz", "aggs", "omega", "flagged").unwrap();
        for (i, l) in self.levels.iter().enumerate() {
            let st = &l.stats;
            writeln!(
                s,
                "{:>5} {:>10} {:>12} {:>10} {:>10} {:>8}",
                i,
                st.rows,
                st.nnz,
                st.aggregates.map_or("-".into(), |v| v.to_string()),
                st.omega.map_or("-".into(), |v| format!("{v:.4}")),
                st.nonpositive_diagonal_rows
            )
            .unwrap();
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("level,rows,nnz,aggregates,strong_edges,rho,omega,nonpositive_diag,fallback,sign_condition\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.10e}"));
        for (i, l) in self.levels.iter().enumerate() {
            let st = &l.stats;
            writeln!(
                s,
                "{i},{},{},{},{},{},{},{},{},{}",
                st.rows,
                st.nnz,
                st.aggregates.map_or(String::new(), |v| v.to_string()),
                st.strong_edges.map_or(String::new(), |v| v.to_string()),
                opt(st.rho),
                opt(st.omega),
                st.nonpositive_diagonal_rows,
                st.fallback_rows,
                st.sign_condition_rows
            )
            .unwrap();
        }
        s
    }

    /// Flagged non-positive filtered diagonals summed over all levels.
    pub fn nonpositive_diagonal_rows(&self) -> usize {
        self.levels.iter().map(|l| l.stats.nonpositive_diagonal_rows).sum()
    }
}

impl Preconditioner for Hierarchy {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        self.vcycle(r, z);
    }

    fn operator_complexity(&self) -> f64 {
        Hierarchy::operator_complexity(self)
    }
}
