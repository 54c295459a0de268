//! Compressed sparse row storage and the handful of kernels the multigrid
//! setup needs: products, transposes, Galerkin projection, diagonal and
//! row-sum extraction.
//!
//! Summation inside a row always follows stored-index order so that results
//! are reproducible run to run.

mod dense;
mod eig;
pub mod market;

pub use dense::{dense_lu_solve, DenseLu, DEFAULT_DENSE_CAP};
pub use eig::{signed_dominant_eig, Lcg, POWER_ITERATIONS, POWER_SEED};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows above this count are multiplied in parallel. Each row is still
/// summed sequentially, so the result does not depend on thread count.
const PAR_SPMV_ROWS: usize = 16_384;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, validating every invariant.
    pub fn try_from_csr(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let m = CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    /// Internal constructor for kernels that produce sorted rows by
    /// construction. Invariants are re-checked in debug builds.
    pub(crate) fn from_parts(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let m = CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        };
        debug_assert!(m.validate().is_ok(), "{:?}", m.validate());
        m
    }

    /// Assembles from (row, col, value) triplets. Duplicate coordinates are
    /// summed; explicit zeros are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
            if v.is_nan() {
                return Err(Error::InvalidMatrix(format!("NaN at ({r}, {c})")));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        // bucket by row, preserving input order inside a row
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }

        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|&(c, _)| c);
            for &(c, v) in &scratch {
                if col_indices.len() > row_offsets[i] && *col_indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidMatrix("duplicate entries sum to NaN".into()));
        }
        Ok(Self::from_parts(nrows, ncols, row_offsets, col_indices, values))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_parts(n, n, (0..=n).collect(), (0..n).collect(), d.to_vec())
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_parts(nrows, ncols, vec![0; nrows + 1], Vec::new(), Vec::new())
    }

    /// Keeps every nonzero of a row-major dense matrix.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    op: "from_dense",
                    expected: ncols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trip)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMatrix(msg));
        if self.row_offsets.len() != self.nrows + 1 {
            return bad(format!(
                "row_offsets has length {}, expected {}",
                self.row_offsets.len(),
                self.nrows + 1
            ));
        }
        if self.row_offsets[0] != 0 {
            return bad("row_offsets must start at 0".into());
        }
        if self.col_indices.len() != self.values.len()
            || self.row_offsets[self.nrows] != self.values.len()
        {
            return bad("row_offsets, col_indices and values disagree on nnz".into());
        }
        for i in 0..self.nrows {
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            if lo > hi {
                return bad(format!("row_offsets decrease at row {i}"));
            }
            for k in lo..hi {
                let c = self.col_indices[k];
                if c >= self.ncols {
                    return bad(format!("column {c} out of range in row {i}"));
                }
                if k > lo && self.col_indices[k - 1] >= c {
                    return bad(format!("columns not strictly increasing in row {i}"));
                }
                if self.values[k].is_nan() {
                    return bad(format!("NaN stored at ({i}, {c})"));
                }
            }
        }
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Stored value at (i, j), or `None` if the position is structurally empty.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                op: "spmv",
                expected: self.ncols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x`. Panics on dimension mismatch.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "spmv: x has wrong length");
        assert_eq!(y.len(), self.nrows, "spmv: y has wrong length");
        let row = |i: usize| -> f64 {
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut s = 0.0;
            for k in lo..hi {
                s += self.values[k] * x[self.col_indices[k]];
            }
            s
        };
        if self.nrows >= PAR_SPMV_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row(i);
            }
        }
    }

    /// `r = b - A x`.
    pub fn residual_into(&self, b: &[f64], x: &[f64], r: &mut [f64]) {
        self.spmv_into(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        // rows are visited in ascending order, so each transposed row comes out sorted
        for i in 0..self.nrows {
            let (rc, rv) = self.row(i);
            for (&c, &v) in rc.iter().zip(rv) {
                cols[next[c]] = i;
                vals[next[c]] = v;
                next[c] += 1;
            }
        }
        Self::from_parts(self.ncols, self.nrows, counts, cols, vals)
    }

    /// Sparse product `self * other` (row-by-row Gustavson). Every
    /// structurally produced entry is stored, including numerical zeros.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                expected: self.ncols,
                found: other.nrows,
            });
        }
        let n = other.ncols;
        let mut marker = vec![usize::MAX; n];
        let mut acc = vec![0.0; n];
        let mut row_cols: Vec<usize> = Vec::new();
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..self.nrows {
            row_cols.clear();
            let (ac, av) = self.row(i);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&j, &b) in bc.iter().zip(bv) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = a * b;
                        row_cols.push(j);
                    } else {
                        acc[j] += a * b;
                    }
                }
            }
            row_cols.sort_unstable();
            for &j in &row_cols {
                col_indices.push(j);
                values.push(acc[j]);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self::from_parts(self.nrows, n, row_offsets, col_indices, values))
    }

    /// Copy with every stored value multiplied by `gamma`.
    pub fn scaled(&self, gamma: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= gamma);
        m
    }

    /// Diagonal entries; a structurally missing diagonal reads as 0.
    pub fn diag(&self) -> Vec<f64> {
        let n = self.nrows.min(self.ncols);
        (0..n).map(|i| self.get(i, i).unwrap_or(0.0)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| {
                let (_, v) = self.row(i);
                let mut s = 0.0;
                for &x in v {
                    s += x;
                }
                s
            })
            .collect()
    }

    /// `Σ_j |a_ij|` per row.
    pub fn row_abs_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                row[j] = x;
            }
        }
        d
    }

    /// Structural and numerical symmetry to a relative tolerance.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let t = self.transpose();
        if t.row_offsets != self.row_offsets || t.col_indices != self.col_indices {
            return false;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.values
            .iter()
            .zip(&t.values)
            .all(|(a, b)| (a - b).abs() <= rel_tol * scale)
    }

    /// Keeps rows listed in `rows` (in that order) and renumbers columns via
    /// `col_map`; columns mapping to `None` are dropped.
    pub fn select(&self, rows: &[usize], col_map: &[Option<usize>], ncols: usize) -> CsrMatrix {
        assert_eq!(col_map.len(), self.ncols);
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for &i in rows {
            buf.clear();
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if let Some(nj) = col_map[j] {
                    buf.push((nj, x));
                }
            }
            buf.sort_by_key(|&(j, _)| j);
            for &(j, x) in &buf {
                col_indices.push(j);
                values.push(x);
            }
            row_offsets.push(col_indices.len());
        }
        Self::from_parts(rows.len(), ncols, row_offsets, col_indices, values)
    }

    /// Kronecker product `a ⊗ b`: row index `ia * b.nrows + ib`.
    pub fn kron(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
        let nrows = a.nrows * b.nrows;
        let ncols = a.ncols * b.ncols;
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(a.nnz() * b.nnz());
        let mut values = Vec::with_capacity(a.nnz() * b.nnz());
        row_offsets.push(0);
        for ia in 0..a.nrows {
            let (ac, av) = a.row(ia);
            for ib in 0..b.nrows {
                let (bc, bv) = b.row(ib);
                for (&ja, &x) in ac.iter().zip(av) {
                    for (&jb, &y) in bc.iter().zip(bv) {
                        col_indices.push(ja * b.ncols + jb);
                        values.push(x * y);
                    }
                }
                row_offsets.push(col_indices.len());
            }
        }
        Self::from_parts(nrows, ncols, row_offsets, col_indices, values)
    }
}

/// `Pᵀ A P`. The restriction is always the transpose of the prolongator.
pub fn galerkin_triple_product(p: &CsrMatrix, a: &CsrMatrix) -> Result<CsrMatrix> {
    if a.nrows != a.ncols {
        return Err(Error::DimensionMismatch {
            op: "galerkin_triple_product (A square)",
            expected: a.nrows,
            found: a.ncols,
        });
    }
    if p.nrows != a.nrows {
        return Err(Error::DimensionMismatch {
            op: "galerkin_triple_product (rows of P)",
            expected: a.nrows,
            found: p.nrows,
        });
    }
    let ap = a.matmul(p)?;
    p.transpose().matmul(&ap)
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tridiag(n: usize) -> CsrMatrix {
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
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_spmv() {
        let y = CsrMatrix::identity(3).spmv(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn constant_vector_row_sums() {
        let a = CsrMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(
            a.spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 0, 3.0), (0, 1, 2.5)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), Some(3.5));
        assert_eq!(a.get(0, 0), Some(3.0));
        assert_eq!(a.get(1, 1), None);
    }

    #[test]
    fn rejects_nan_and_unsorted() {
        assert!(CsrMatrix::from_triplets(1, 1, &[(0, 0, f64::NAN)]).is_err());
        assert!(CsrMatrix::try_from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::try_from_csr(1, 3, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::try_from_csr(2, 3, vec![0, 2], vec![0, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn transpose_small() {
        assert_eq!(CsrMatrix::identity(4).transpose(), CsrMatrix::identity(4));
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 2, 5.0)]).unwrap();
        let t = a.transpose();
        assert_eq!((t.nrows(), t.ncols()), (3, 2));
        assert_eq!(t.get(2, 0), Some(5.0));
        assert_eq!(t.nnz(), 1);
    }

    #[test]
    fn galerkin_identity_is_noop() {
        let a = tridiag(6);
        let g = galerkin_triple_product(&CsrMatrix::identity(6), &a).unwrap();
        assert_eq!(g, a);
    }

    #[test]
    fn galerkin_with_constant_column_of_zero_rowsum_matrix() {
        // pure-Neumann 1D Laplacian has zero row sums
        let mut a = tridiag(5).to_dense();
        a[0][0] = 1.0;
        a[4][4] = 1.0;
        let a = CsrMatrix::from_dense(&a).unwrap();
        let ones = CsrMatrix::from_triplets(5, 1, &(0..5).map(|i| (i, 0, 1.0)).collect::<Vec<_>>())
            .unwrap();
        let g = galerkin_triple_product(&ones, &a).unwrap();
        assert_eq!((g.nrows(), g.ncols()), (1, 1));
        assert_eq!(g.get(0, 0), Some(0.0));
    }

    #[test]
    fn galerkin_dimension_errors() {
        let a = tridiag(4);
        assert!(galerkin_triple_product(&CsrMatrix::identity(3), &a).is_err());
    }

    #[test]
    fn diag_and_row_sums() {
        let i4 = CsrMatrix::identity(4);
        assert_eq!(i4.diag(), vec![1.0; 4]);
        assert_eq!(i4.row_sums(), vec![1.0; 4]);
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 1, 2.0)]).unwrap();
        assert_eq!(m.diag(), vec![0.0, 2.0]);
    }

    #[test]
    fn spmv_of_ones_equals_row_sums_bitwise() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 0.1), (0, 2, 0.7), (1, 1, -0.3), (2, 0, 1e-17), (2, 2, 0.2)],
        )
        .unwrap();
        let y = a.spmv(&[1.0; 3]).unwrap();
        let s = a.row_sums();
        for (p, q) in y.iter().zip(&s) {
            assert_eq!(p.to_bits(), q.to_bits());
        }
    }

    #[test]
    fn kron_matches_dense() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        let b = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![4.0, 0.0]]).unwrap();
        let k = CsrMatrix::kron(&a, &b).to_dense();
        let expect = vec![
            vec![0.0, 1.0, 0.0, 2.0],
            vec![4.0, 0.0, 8.0, 0.0],
            vec![0.0, 0.0, 0.0, 3.0],
            vec![0.0, 0.0, 12.0, 0.0],
        ];
        assert_eq!(k, expect);
    }

    fn random_pattern() -> impl Strategy<Value = CsrMatrix> {
        proptest::collection::vec((0usize..50, 0usize..50, -10.0f64..10.0), 0..400)
            .prop_map(|t| CsrMatrix::from_triplets(50, 50, &t).unwrap())
    }

    proptest! {
        #[test]
        fn transpose_is_involution(a in random_pattern()) {
            let tt = a.transpose().transpose();
            prop_assert_eq!(&tt.row_offsets, &a.row_offsets);
            prop_assert_eq!(&tt.col_indices, &a.col_indices);
            for (x, y) in tt.values.iter().zip(&a.values) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
