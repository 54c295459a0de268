use super::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

pub const POWER_ITERATIONS: usize = 15;
pub const POWER_SEED: u64 = 42;

/// 64-bit linear congruential generator (Knuth's MMIX constants). Only used
/// for the power-method start vector, where a fixed, dependency-free stream
/// keeps the damping parameter identical across runs and platforms.
#[derive(Debug, Clone)]
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Signed Rayleigh-quotient estimate of the dominant eigenvalue of
/// `D⁻¹ A`, where `D` is the diagonal of `a`.
///
/// Runs a fixed number of power sweeps from a seeded start vector in
/// (-1, 1). The sign of the estimate is returned untouched: a negative
/// diagonal in `a` can make it negative, and callers see that.
pub fn signed_dominant_eig(a: &CsrMatrix, iterations: usize, seed: u64) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            op: "signed_dominant_eig (square)",
            expected: n,
            found: a.ncols(),
        });
    }
    let d = a.diag();
    let zeros: Vec<usize> = (0..n).filter(|&i| d[i] == 0.0).collect();
    if let Some(&row) = zeros.first() {
        return Err(Error::ZeroDiagonal {
            row,
            count: zeros.len(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let inv_d: Vec<f64> = d.iter().map(|x| 1.0 / x).collect();

    let mut rng = Lcg::new(seed);
    let mut v: Vec<f64> = (0..n).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..iterations.max(1) {
        a.spmv_into(&v, &mut w);
        for (wi, di) in w.iter_mut().zip(&inv_d) {
            *wi *= di;
        }
        lambda = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_one() {
        let l = signed_dominant_eig(&CsrMatrix::identity(7), POWER_ITERATIONS, POWER_SEED).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_scaled_diagonal_is_one() {
        let a = CsrMatrix::from_diagonal(&[2.0, 0.5]);
        let l = signed_dominant_eig(&a, POWER_ITERATIONS, POWER_SEED).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_d_poisson_analytic() {
        let n = 32;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let l = signed_dominant_eig(&a, POWER_ITERATIONS, POWER_SEED).unwrap();
        // eigenvalues of D⁻¹A are 1 - cos(kπ/(n+1))
        let exact = 1.0 - (n as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((l - exact).abs() <= 0.05 * exact, "{l} vs {exact}");
    }

    #[test]
    fn negative_estimate_is_not_clamped() {
        // unit diagonal, eigenvalues -5, 4, 4
        let k = CsrMatrix::from_dense(&[
            vec![1.0, -3.0, -3.0],
            vec![-3.0, 1.0, -3.0],
            vec![-3.0, -3.0, 1.0],
        ])
        .unwrap();
        let l = signed_dominant_eig(&k, 200, POWER_SEED).unwrap();
        assert!((l + 5.0).abs() < 1e-8, "{l}");
        // a uniformly negative diagonal cancels in D⁻¹A
        let m = CsrMatrix::from_diagonal(&[-2.0, -2.0]);
        assert!((signed_dominant_eig(&m, 15, POWER_SEED).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_diagonal_names_row() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 0, 1.0), (2, 2, 1.0)]).unwrap();
        match signed_dominant_eig(&a, 15, 42) {
            Err(Error::ZeroDiagonal { row, count }) => assert_eq!((row, count), (1, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let a = CsrMatrix::from_dense(&[vec![3.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let x = signed_dominant_eig(&a, 15, 42).unwrap();
        let y = signed_dominant_eig(&a, 15, 42).unwrap();
        assert_eq!(x.to_bits(), y.to_bits());
    }
}
