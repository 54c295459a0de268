//! Filtered matrices: drop weak entries of `A` and fold them back so row
//! sums are preserved.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::strength::{Lumping, StrengthGraph};

#[derive(Debug, Clone)]
pub struct FilteredMatrix {
    pub a: CsrMatrix,
    /// e_i: sum of the dropped entries of each row.
    pub dropped_sum: Vec<f64>,
    /// Rows whose filtered diagonal ended up non-positive.
    pub nonpositive_diagonal: Vec<usize>,
    /// Rows with e_i < 0 that retained no off-diagonal and were lumped to
    /// the diagonal instead.
    pub fallback_rows: Vec<usize>,
    /// Rows with e_i < 0 violating s_i - 2 r_i^(n) > 0 (processed anyway).
    pub sign_condition_rows: Vec<usize>,
}

impl FilteredMatrix {
    pub fn is_clean(&self) -> bool {
        self.nonpositive_diagonal.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FilterOptions {
    /// Keep dropped entries as explicit zeros so Ã shares A's pattern.
    pub keep_pattern: bool,
}

pub fn filter(a: &CsrMatrix, g: &StrengthGraph, lumping: Lumping) -> Result<FilteredMatrix> {
    filter_with(a, g, lumping, FilterOptions::default())
}

pub fn filter_diagonal_lump(a: &CsrMatrix, g: &StrengthGraph) -> FilteredMatrix {
    filter_with(a, g, Lumping::Diagonal, FilterOptions::default()).expect("diagonal lumping cannot fail")
}

pub fn filter_distributed_lump(a: &CsrMatrix, g: &StrengthGraph) -> Result<FilteredMatrix> {
    filter_with(a, g, Lumping::Distributed, FilterOptions::default())
}

pub fn filter_with(
    a: &CsrMatrix,
    g: &StrengthGraph,
    lumping: Lumping,
    opts: FilterOptions,
) -> Result<FilteredMatrix> {
    let n = a.nrows();
    if a.ncols() != n || g.nrows() != n {
        return Err(Error::DimensionMismatch {
            op: "filter (square A matching the strength graph)",
            expected: n,
            found: if a.ncols() != n { a.ncols() } else { g.nrows() },
        });
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::with_capacity(a.nnz());
    let mut vals = Vec::with_capacity(a.nnz());
    let mut dropped_sum = vec![0.0; n];
    let mut nonpositive_diagonal = Vec::new();
    let mut fallback_rows = Vec::new();
    let mut sign_condition_rows = Vec::new();
    // (col, value, retained)
    let mut row_buf: Vec<(usize, f64, bool)> = Vec::new();

    for i in 0..n {
        let (c, v) = a.row(i);
        let strong = g.row(i);
        row_buf.clear();
        let mut diag_seen = false;
        let mut e = 0.0;
        for (&j, &x) in c.iter().zip(v) {
            if !diag_seen && j >= i {
                diag_seen = true;
                if j > i {
                    row_buf.push((i, 0.0, true));
                }
            }
            let keep = j == i || strong.binary_search(&j).is_ok();
            if !keep {
                e += x;
            }
            row_buf.push((j, x, keep));
        }
        if !diag_seen {
            row_buf.push((i, 0.0, true));
        }
        dropped_sum[i] = e;

        let retained_off = row_buf.iter().filter(|&&(j, _, k)| k && j != i).count();
        let distribute = lumping == Lumping::Distributed && e < 0.0 && retained_off > 0;
        if lumping == Lumping::Distributed && e < 0.0 && retained_off == 0 {
            fallback_rows.push(i);
        }
        if distribute {
            let denom: f64 = row_buf.iter().filter(|r| r.2).map(|r| r.1.abs()).sum();
            if denom == 0.0 {
                return Err(Error::LumpingBreakdown { row: i });
            }
            let r_n: f64 = row_buf
                .iter()
                .filter(|&&(j, x, k)| k && j != i && x < 0.0)
                .map(|r| r.1)
                .sum();
            let s: f64 = v.iter().sum();
            if !(s - 2.0 * r_n > 0.0) {
                sign_condition_rows.push(i);
            }
            for r in row_buf.iter_mut().filter(|r| r.2) {
                r.1 += e * r.1.abs() / denom;
            }
        } else if let Some(d) = row_buf.iter_mut().find(|r| r.0 == i) {
            d.1 += e;
        }

        for &(j, x, keep) in &row_buf {
            if j == i && !(x > 0.0) {
                nonpositive_diagonal.push(i);
            }
            if keep {
                cols.push(j);
                vals.push(x);
            } else if opts.keep_pattern {
                cols.push(j);
                vals.push(0.0);
            }
        }
        offsets.push(cols.len());
    }
    Ok(FilteredMatrix {
        a: CsrMatrix::from_parts(n, n, offsets, cols, vals),
        dropped_sum,
        nonpositive_diagonal,
        fallback_rows,
        sign_condition_rows,
    })
}

/// Result of comparing D⁻¹A with D̃⁻¹Ã on rows with e_i < 0.
#[derive(Debug, Clone, Default)]
pub struct CorollaryReport {
    pub rows_checked: usize,
    /// Largest relative mismatch between positive entries.
    pub max_positive_error: f64,
    /// Largest relative mismatch between the observed negative-entry
    /// scaling and the predicted factor.
    pub max_factor_error: f64,
    /// Smallest predicted negative-entry factor seen.
    pub min_factor: f64,
}

impl CorollaryReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_positive_error <= tol
            && self.max_factor_error <= tol
            && (self.rows_checked == 0 || self.min_factor > 1.0)
    }
}

/// Check that on rows with e_i < 0 distributed lumping leaves the positive
/// entries of the Jacobi-scaled matrix alone and scales the retained
/// negative ones by (1 - e/Σ)/(1 + e/Σ).
pub fn verify_corollary(a: &CsrMatrix, filtered: &FilteredMatrix) -> CorollaryReport {
    let at = &filtered.a;
    let d = a.diag();
    let dt = at.diag();
    let mut rep = CorollaryReport {
        min_factor: f64::INFINITY,
        ..Default::default()
    };
    for i in 0..a.nrows() {
        let e = filtered.dropped_sum[i];
        if !(e < 0.0) {
            continue;
        }
        let (tc, tv) = at.row(i);
        if !tc.iter().any(|&j| j != i) {
            continue;
        }
        let denom: f64 = tc.iter().map(|&j| a.get(i, j).unwrap_or(0.0).abs()).sum();
        let ratio = e / denom;
        let factor = (1.0 - ratio) / (1.0 + ratio);
        rep.rows_checked += 1;
        rep.min_factor = rep.min_factor.min(factor);
        for (&j, &xt) in tc.iter().zip(tv) {
            let x = a.get(i, j).unwrap_or(0.0);
            let scaled = x / d[i];
            let scaled_t = xt / dt[i];
            if x > 0.0 {
                let err = (scaled_t - scaled).abs() / scaled.abs();
                rep.max_positive_error = rep.max_positive_error.max(err);
            } else if x < 0.0 {
                let err = (scaled_t - factor * scaled).abs() / (factor * scaled).abs();
                rep.max_factor_error = rep.max_factor_error.max(err);
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_row() -> (CsrMatrix, StrengthGraph) {
        // row 0 = [4, -1, -1, -1, -1], other rows identity
        let mut t = vec![(0, 0, 4.0)];
        t.extend((1..5).map(|j| (0, j, -1.0)));
        t.extend((1..5).map(|i| (i, i, 1.0)));
        let a = CsrMatrix::from_triplets(5, 5, &t).unwrap();
        let g = StrengthGraph::from_rows(vec![vec![1, 2], vec![], vec![], vec![], vec![]]);
        (a, g)
    }

    #[test]
    fn diagonal_lumping_arithmetic() {
        let (a, g) = star_row();
        let f = filter_diagonal_lump(&a, &g);
        assert_eq!(f.a.row(0).0, &[0, 1, 2]);
        assert_eq!(f.a.row(0).1, &[2.0, -1.0, -1.0]);
        assert_eq!(f.dropped_sum[0], -2.0);
        assert!(f.is_clean());
    }

    #[test]
    fn distributed_lumping_arithmetic() {
        let (a, g) = star_row();
        let f = filter_distributed_lump(&a, &g).unwrap();
        let (_, v) = f.a.row(0);
        assert!((v[0] - 8.0 / 3.0).abs() < 1e-15);
        assert!((v[1] + 4.0 / 3.0).abs() < 1e-15);
        assert!(v.iter().sum::<f64>().abs() < 1e-15);
        let rep = verify_corollary(&a, &f);
        assert_eq!(rep.rows_checked, 1);
        assert!((rep.min_factor - 2.0).abs() < 1e-15);
        assert!(rep.holds(1e-12));
    }

    #[test]
    fn full_pattern_is_identity() {
        let a = CsrMatrix::from_dense(&[
            vec![2.0, -1.0, 0.5],
            vec![-1.0, 2.0, -1.0],
            vec![0.5, -1.0, 2.0],
        ])
        .unwrap();
        let g = StrengthGraph::from_rows(vec![vec![1, 2], vec![0, 2], vec![0, 1]]);
        for mode in [Lumping::Diagonal, Lumping::Distributed] {
            assert_eq!(filter(&a, &g, mode).unwrap().a, a);
        }
    }

    #[test]
    fn nonnegative_dropped_sum_matches_diagonal_lumping() {
        let a = CsrMatrix::from_dense(&[vec![3.0, 1.0, -1.0], vec![1.0, 3.0, 0.0], vec![-1.0, 0.0, 3.0]])
            .unwrap();
        let g = StrengthGraph::from_rows(vec![vec![2], vec![], vec![0]]);
        let d = filter_diagonal_lump(&a, &g);
        let s = filter_distributed_lump(&a, &g).unwrap();
        assert_eq!(d.a.row(0), s.a.row(0));
        assert_eq!(d.a.row(0).1, &[4.0, -1.0]);
    }

    #[test]
    fn missing_diagonal_is_materialized_and_flagged() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, -1.0), (1, 0, -1.0), (1, 1, 3.0)]).unwrap();
        let g = StrengthGraph::from_rows(vec![vec![], vec![]]);
        let f = filter_diagonal_lump(&a, &g);
        assert_eq!(f.a.get(0, 0), Some(-1.0));
        assert_eq!(f.nonpositive_diagonal, vec![0]);
        let d = filter_distributed_lump(&a, &g).unwrap();
        // neither row keeps an off-diagonal
        assert_eq!(d.fallback_rows, vec![0, 1]);
    }

    #[test]
    fn keep_pattern_retains_structural_zeros() {
        let (a, g) = star_row();
        let f = filter_with(&a, &g, Lumping::Diagonal, FilterOptions { keep_pattern: true }).unwrap();
        assert_eq!(f.a.row(0).0, a.row(0).0);
        assert_eq!(f.a.row(0).1, &[2.0, -1.0, -1.0, 0.0, 0.0]);
    }
}
