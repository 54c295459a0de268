//! Preconditioned conjugate gradients and restarted GMRES.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

/// Linear operator approximating A⁻¹.
pub trait Preconditioner: Sync {
    /// z = M r
    fn apply(&self, r: &[f64], z: &mut [f64]);

    /// Multigrid operator complexity; 1.0 for one-level methods.
    fn operator_complexity(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Point Jacobi: z = D⁻¹ r.
#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let d = a.diag();
        if let Some(row) = d.iter().position(|&x| x == 0.0) {
            let count = d.iter().filter(|&&x| x == 0.0).count();
            return Err(Error::ZeroDiagonal { row, count });
        }
        Ok(JacobiPreconditioner {
            inv_diag: d.iter().map(|x| 1.0 / x).collect(),
        })
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// GMRES restart length.
    pub restart: usize,
}

impl SolveOptions {
    pub fn cg() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 1000,
            restart: 300,
        }
    }

    pub fn gmres() -> Self {
        SolveOptions {
            tol: 1e-6,
            max_iter: 1000,
            restart: 300,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// ‖r_k‖ / ‖r_0‖ for k = 0..=iterations.
    pub residual_history: Vec<f64>,
    pub operator_complexity: f64,
    pub cost: f64,
}

impl SolveReport {
    fn new(history: Vec<f64>, converged: bool, complexity: f64) -> Self {
        let iterations = history.len() - 1;
        SolveReport {
            iterations,
            converged,
            residual_history: history,
            operator_complexity: complexity,
            cost: iterations as f64 * complexity,
        }
    }

    pub fn final_relative_residual(&self) -> f64 {
        *self.residual_history.last().unwrap()
    }

    pub const CSV_HEADER: &'static str = "iterations,converged,final_residual,complexity,cost";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6e},{:.6},{:.6}",
            self.iterations,
            self.converged,
            self.final_relative_residual(),
            self.operator_complexity,
            self.cost
        )
    }
}

fn check_dims(a: &CsrMatrix, b: &[f64], x: &[f64]) -> Result<()> {
    let n = a.nrows();
    for (len, op) in [(a.ncols(), "krylov (square A)"), (b.len(), "krylov (rhs)"), (x.len(), "krylov (x0)")] {
        if len != n {
            return Err(Error::DimensionMismatch { op, expected: n, found: len });
        }
    }
    Ok(())
}

/// Preconditioned CG. Iterates until the true residual ‖b - A x‖ falls to
/// `tol` times its initial value; the recursive residual drives the search
/// directions. `x` holds the initial guess and receives the solution.
pub fn pcg<M: Preconditioner + ?Sized>(
    a: &CsrMatrix,
    b: &[f64],
    m: &M,
    x: &mut [f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    check_dims(a, b, x)?;
    let n = b.len();
    let mut r = vec![0.0; n];
    a.residual_into(b, x, &mut r);
    let r0 = norm2(&r);
    let mut history = vec![1.0];
    let complexity = m.operator_complexity();
    if r0 == 0.0 {
        return Ok(SolveReport::new(history, true, complexity));
    }
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut true_r = vec![0.0; n];
    for it in 1..=opts.max_iter {
        if !(rz > 0.0) {
            return Err(Error::Indefinite { iteration: it, quantity: "r'Mr" });
        }
        a.spmv_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Indefinite { iteration: it, quantity: "p'Ap" });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        a.residual_into(b, x, &mut true_r);
        let rel = norm2(&true_r) / r0;
        history.push(rel);
        if rel <= opts.tol {
            return Ok(SolveReport::new(history, true, complexity));
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(SolveReport::new(history, false, complexity))
}

/// Right-preconditioned restarted GMRES(m) with Givens rotations. The
/// Arnoldi residual estimate equals the true residual of x = x0 + M V y,
/// so the history reports true relative residuals.
pub fn gmres<M: Preconditioner + ?Sized>(
    a: &CsrMatrix,
    b: &[f64],
    m: &M,
    x: &mut [f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    check_dims(a, b, x)?;
    if opts.restart == 0 {
        return Err(Error::InvalidConfig("GMRES restart length must be positive".into()));
    }
    let n = b.len();
    let complexity = m.operator_complexity();
    let mut r = vec![0.0; n];
    a.residual_into(b, x, &mut r);
    let r0 = norm2(&r);
    let mut history = vec![1.0];
    if r0 == 0.0 {
        return Ok(SolveReport::new(history, true, complexity));
    }
    let restart = opts.restart.min(n.max(1));
    let mut total = 0usize;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];

    loop {
        let beta = norm2(&r);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        // Hessenberg columns, stored column-wise with length j+2
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<f64> = Vec::with_capacity(restart);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        let mut done = false;
        while k < restart && total < opts.max_iter {
            m.apply(&v[k], &mut z);
            a.spmv_into(&z, &mut w);
            let mut col = vec![0.0; k + 2];
            // modified Gram-Schmidt
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                col[i] = hij;
                for (wl, vl) in w.iter_mut().zip(vi) {
                    *wl -= hij * vl;
                }
            }
            let hnext = norm2(&w);
            col[k + 1] = hnext;
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[k] / denom, col[k + 1] / denom) };
            cs.push(c);
            sn.push(s);
            col[k] = denom;
            col[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            h.push(col);
            k += 1;
            total += 1;
            let rel = g[k].abs() / r0;
            history.push(rel);
            if rel <= opts.tol || hnext == 0.0 {
                done = true;
                break;
            }
            v.push(w.iter().map(|x| x / hnext).collect());
        }

        // back substitution for y, then x += M (V y)
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut u = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for (ul, vl) in u.iter_mut().zip(&v[j]) {
                *ul += yj * vl;
            }
        }
        m.apply(&u, &mut z);
        for (xl, zl) in x.iter_mut().zip(&z) {
            *xl += zl;
        }
        a.residual_into(b, x, &mut r);
        if done {
            let last = history.len() - 1;
            history[last] = norm2(&r) / r0;
            return Ok(SolveReport::new(history, true, complexity));
        }
        if total >= opts.max_iter {
            return Ok(SolveReport::new(history, false, complexity));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 4.0];
        let mut x = vec![0.0; 5];
        let rep = pcg(&a, &b, &Identity, &mut x, &SolveOptions::cg()).unwrap();
        assert_eq!(rep.iterations, 1);
        let mut x = vec![0.0; 5];
        let rep = gmres(&a, &b, &Identity, &mut x, &SolveOptions::gmres()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
    }

    #[test]
    fn cg_finite_termination() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let mut x = vec![0.0; 2];
        let opts = SolveOptions { tol: 1e-12, ..SolveOptions::cg() };
        let rep = pcg(&a, &[1.0, 2.0], &Identity, &mut x, &opts).unwrap();
        assert!(rep.converged && rep.iterations <= 2);
    }

    #[test]
    fn cg_and_gmres_agree() {
        let a = poisson_1d(40);
        let b: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let opts = SolveOptions { tol: 1e-8, max_iter: 500, restart: 300 };
        let mut x1 = vec![0.0; 40];
        let c = pcg(&a, &b, &Identity, &mut x1, &opts).unwrap();
        let mut x2 = vec![0.0; 40];
        let g = gmres(&a, &b, &Identity, &mut x2, &opts).unwrap();
        assert!(c.converged && g.converged);
        assert!((c.iterations as i64 - g.iterations as i64).abs() <= 1, "{} vs {}", c.iterations, g.iterations);
        assert!(g.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn restarted_gmres_nonsymmetric() {
        let a = CsrMatrix::from_dense(&[vec![3.0, 1.0, 0.0], vec![-1.0, 2.0, 1.0], vec![0.0, -2.0, 4.0]]).unwrap();
        let b = [1.0, 0.0, -1.0];
        let opts = SolveOptions { tol: 1e-10, max_iter: 500, restart: 1 };
        let mut x = vec![0.0; 3];
        let r1 = gmres(&a, &b, &Identity, &mut x, &opts).unwrap();
        let mut y = vec![0.0; 3];
        let full = gmres(&a, &b, &Identity, &mut y, &SolveOptions { restart: 3, ..opts }).unwrap();
        assert!(r1.converged && full.converged);
        assert!(r1.iterations > full.iterations);
        let mut r = vec![0.0; 3];
        a.residual_into(&b, &x, &mut r);
        assert!(norm2(&r) <= 1e-9);
    }

    #[test]
    fn indefinite_detected() {
        let a = CsrMatrix::from_diagonal(&[1.0, -1.0]);
        let mut x = vec![0.0; 2];
        let e = pcg(&a, &[1.0, 1.0], &Identity, &mut x, &SolveOptions::cg());
        assert!(matches!(e, Err(Error::Indefinite { .. })));
    }

    #[test]
    fn jacobi_preconditioned_cg() {
        let a = poisson_1d(30).scaled(3.0);
        let b = vec![1.0; 30];
        let mut x = vec![0.0; 30];
        let m = JacobiPreconditioner::new(&a).unwrap();
        let rep = pcg(&a, &b, &m, &mut x, &SolveOptions::cg()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.cost, rep.iterations as f64);
        assert!(rep.csv_row().starts_with(&format!("{},true,", rep.iterations)));
    }
}
