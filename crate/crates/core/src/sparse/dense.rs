use super::CsrMatrix;
use crate::error::{Error, Result};

/// Largest system the coarse direct solver will densify.
pub const DEFAULT_DENSE_CAP: usize = 5000;

/// Pivots smaller than this times the largest matrix entry count as zero.
const SINGULAR_REL: f64 = 1e-14;

/// Row-major LU factorization with partial pivoting, kept around so the
/// coarsest multigrid level can be solved repeatedly.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        Self::factor_with_cap(a, DEFAULT_DENSE_CAP)
    }

    pub fn factor_with_cap(a: &CsrMatrix, cap: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                op: "dense LU (square)",
                expected: n,
                found: a.ncols(),
            });
        }
        if n > cap {
            return Err(Error::TooLarge { rows: n, cap });
        }
        let mut lu = vec![0.0; n * n];
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                lu[i * n + j] = x;
            }
        }
        let max_abs = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = SINGULAR_REL * max_abs;
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny || best == 0.0 {
                return Err(Error::Singular {
                    column: k,
                    pivot: best,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            let (upper, lower) = lu.split_at_mut((k + 1) * n);
            let row_k = &upper[k * n..(k + 1) * n];
            for row_i in lower.chunks_exact_mut(n) {
                let l = row_i[k] / pivot;
                if l == 0.0 {
                    continue;
                }
                row_i[k] = l;
                for j in k + 1..n {
                    row_i[j] -= l * row_k[j];
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        assert_eq!(x.len(), n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let mut s = x[i];
            for (j, &l) in row.iter().enumerate() {
                s -= l * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }
}

/// One-shot dense solve of a (small) sparse system.
pub fn dense_lu_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            op: "dense_lu_solve",
            expected: a.nrows(),
            found: b.len(),
        });
    }
    Ok(DenseLu::factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::norm2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_returns_rhs() {
        let b = [3.0, -1.5, 7.25];
        assert_eq!(dense_lu_solve(&CsrMatrix::identity(3), &b).unwrap(), b.to_vec());
    }

    #[test]
    fn two_by_two() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let x = dense_lu_solve(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn needs_pivoting() {
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(dense_lu_solve(&a, &[2.0, 5.0]).unwrap(), vec![5.0, 2.0]);
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let g: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        // G Gᵀ + n I
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = (0..n).map(|k| g[i][k] * g[j][k]).sum::<f64>();
            }
            a[i][i] += n as f64;
        }
        let a = CsrMatrix::from_dense(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = dense_lu_solve(&a, &b).unwrap();
        let mut r = vec![0.0; n];
        a.residual_into(&b, &x, &mut r);
        assert!(norm2(&r) <= 1e-10 * norm2(&b));
    }

    #[test]
    fn singular_is_reported() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(dense_lu_solve(&a, &[1.0, 1.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn cap_is_enforced() {
        let a = CsrMatrix::identity(10);
        assert!(matches!(
            DenseLu::factor_with_cap(&a, 5),
            Err(Error::TooLarge { rows: 10, cap: 5 })
        ));
    }
}
