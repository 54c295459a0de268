//! Strength-of-connection: SOC matrix, entry scaling and strong/weak
//! classification.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Matrix whose entries measure connection strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SocKind {
    /// The system matrix itself.
    #[serde(rename = "A")]
    SystemMatrix,
    /// Inverse squared vertex distances on the system matrix pattern.
    #[serde(rename = "DLap")]
    DistanceLaplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scaling {
    /// |s_ij| / sqrt(s_ii s_jj)
    #[serde(rename = "SA")]
    SymmetricSa,
    /// -s_ij / max_k(-s_ik)
    #[serde(rename = "Sgn")]
    SignedClassical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classifier {
    #[serde(rename = "Val")]
    Threshold,
    #[serde(rename = "Gap")]
    CutDrop,
}

/// How dropped entries are folded back into the filtered matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lumping {
    Diagonal,
    Distributed,
}

macro_rules! named_enum {
    ($t:ty, $($v:path => $s:literal),+) => {
        impl $t {
            pub fn name(self) -> &'static str {
                match self { $($v => $s),+ }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                $(if s.eq_ignore_ascii_case($s) { return Ok($v); })+
                Err(Error::InvalidConfig(format!(
                    "unknown {} {s:?}; expected one of {:?}",
                    stringify!($t),
                    [$($s),+]
                )))
            }
        }
    };
}

named_enum!(SocKind, SocKind::SystemMatrix => "A", SocKind::DistanceLaplacian => "DLap");
named_enum!(Scaling, Scaling::SymmetricSa => "SA", Scaling::SignedClassical => "Sgn");
named_enum!(Classifier, Classifier::Threshold => "Val", Classifier::CutDrop => "Gap");
named_enum!(Lumping, Lumping::Diagonal => "diagonal", Lumping::Distributed => "distributed");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropConfig {
    pub soc: SocKind,
    pub scaling: Scaling,
    pub classifier: Classifier,
    pub theta: f64,
    /// Gap tolerance for cut-based dropping.
    pub theta_gap: f64,
    pub lumping: Lumping,
}

impl DropConfig {
    /// Parse a `SOC/scaling/classifier` label such as `DLap/SA/Gap`. For the
    /// gap classifier `theta` is used as the gap tolerance.
    pub fn from_label(label: &str, theta: f64, lumping: Lumping) -> Result<Self> {
        let parts: Vec<&str> = label.split('/').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidConfig(format!(
                "pipeline label {label:?} is not of the form SOC/scaling/classifier"
            )));
        }
        let cfg = DropConfig {
            soc: parts[0].parse()?,
            scaling: parts[1].parse()?,
            classifier: parts[2].parse()?,
            theta,
            theta_gap: theta,
            lumping,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.soc, self.scaling, self.classifier)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!("theta {} outside [0, 1]", self.theta)));
        }
        if self.classifier == Classifier::CutDrop && !(self.theta_gap > 0.0 && self.theta_gap <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gap tolerance {} outside (0, 1]",
                self.theta_gap
            )));
        }
        if self.classifier == Classifier::CutDrop && self.scaling != Scaling::SymmetricSa {
            return Err(Error::InvalidConfig(
                "cut-based dropping is only defined for SA-scaled values".into(),
            ));
        }
        Ok(())
    }
}

/// The five pipelines compared in the benchmarks.
pub const PIPELINES: [&str; 5] = ["A/SA/Val", "A/Sgn/Val", "DLap/SA/Val", "DLap/Sgn/Val", "DLap/SA/Gap"];

/// Retained off-diagonal columns per row; the diagonal is implicitly kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrengthGraph {
    offsets: Vec<usize>,
    cols: Vec<usize>,
}

impl StrengthGraph {
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut cols = Vec::new();
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend(r);
            offsets.push(cols.len());
        }
        StrengthGraph { offsets, cols }
    }

    pub fn nrows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn num_edges(&self) -> usize {
        self.cols.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.nrows()).all(|i| self.row(i).iter().all(|&j| self.contains(j, i)))
    }

    /// One `i j` line (0-based) per retained edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        for i in 0..self.nrows() {
            for j in self.row(i) {
                s.push_str(&format!("{i} {j}\n"));
            }
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }
}

/// Scaled strength values on the pattern of the SOC matrix. Diagonal slots
/// hold 0 and are never consulted; rows of signed scaling without any
/// negative off-diagonal hold -inf everywhere.
#[derive(Debug, Clone)]
pub struct ScaledEntries {
    values: CsrMatrix,
    scaling: Scaling,
}

impl ScaledEntries {
    pub fn as_matrix(&self) -> &CsrMatrix {
        &self.values
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    /// Off-diagonal (column, value) pairs of row `i`.
    pub fn off_diagonal(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (c, v) = self.values.row(i);
        c.iter().copied().zip(v.iter().copied()).filter(move |&(j, _)| j != i)
    }
}

/// Build the SOC matrix. The distance Laplacian carries -1/|x_i - x_j|² on
/// every off-diagonal slot of `a` (explicit zeros included) and the negated
/// row sum on the diagonal.
pub fn soc_matrix(a: &CsrMatrix, coords: Option<&[[f64; 3]]>, kind: SocKind) -> Result<CsrMatrix> {
    match kind {
        SocKind::SystemMatrix => Ok(a.clone()),
        SocKind::DistanceLaplacian => {
            let coords = coords.ok_or_else(|| {
                Error::InvalidConfig("the distance Laplacian needs vertex coordinates".into())
            })?;
            distance_laplacian(a, coords)
        }
    }
}

pub fn distance_laplacian(a: &CsrMatrix, coords: &[[f64; 3]]) -> Result<CsrMatrix> {
    let n = a.nrows();
    if coords.len() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            op: "distance_laplacian (coordinates)",
            expected: n,
            found: coords.len(),
        });
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::with_capacity(a.nnz() + n);
    let mut vals = Vec::with_capacity(a.nnz() + n);
    for i in 0..n {
        let (c, _) = a.row(i);
        let start = cols.len();
        let mut diag_at = None;
        let mut sum = 0.0;
        let push_diag = |cols: &mut Vec<usize>, vals: &mut Vec<f64>, at: &mut Option<usize>| {
            *at = Some(cols.len());
            cols.push(i);
            vals.push(0.0);
        };
        for &j in c {
            if j == i {
                push_diag(&mut cols, &mut vals, &mut diag_at);
                continue;
            }
            if diag_at.is_none() && j > i {
                push_diag(&mut cols, &mut vals, &mut diag_at);
            }
            let d2: f64 = (0..3).map(|k| (coords[i][k] - coords[j][k]).powi(2)).sum();
            if d2 == 0.0 {
                return Err(Error::CoincidentPoints { i, j });
            }
            let v = -1.0 / d2;
            sum += v;
            cols.push(j);
            vals.push(v);
        }
        if diag_at.is_none() {
            push_diag(&mut cols, &mut vals, &mut diag_at);
        }
        vals[diag_at.unwrap()] = -sum;
        debug_assert!(cols[start..].windows(2).all(|w| w[0] < w[1]));
        offsets.push(cols.len());
    }
    Ok(CsrMatrix::from_parts(n, n, offsets, cols, vals))
}

fn map_rows(s: &CsrMatrix, scaling: Scaling, mut f: impl FnMut(usize, &[usize], &[f64], &mut [f64]) -> Result<()>) -> Result<ScaledEntries> {
    let mut out = s.values().to_vec();
    for i in 0..s.nrows() {
        let (c, v) = s.row(i);
        let r = s.row_offsets()[i]..s.row_offsets()[i + 1];
        f(i, c, v, &mut out[r])?;
    }
    let values = CsrMatrix::from_parts(
        s.nrows(),
        s.ncols(),
        s.row_offsets().to_vec(),
        s.col_indices().to_vec(),
        out,
    );
    Ok(ScaledEntries { values, scaling })
}

/// v_ij = |s_ij| / sqrt(s_ii s_jj).
pub fn scale_symmetric_sa(s: &CsrMatrix) -> Result<ScaledEntries> {
    let d = s.diag();
    if let Some(row) = d.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveDiagonal { row, value: d[row] });
    }
    let sq: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
    map_rows(s, Scaling::SymmetricSa, |i, c, v, out| {
        for k in 0..c.len() {
            let j = c[k];
            out[k] = if j == i { 0.0 } else { v[k].abs() / (sq[i] * sq[j]) };
        }
        Ok(())
    })
}

/// v_ij = -s_ij / max_k(-s_ik). Rows without a negative off-diagonal are
/// marked all weak with -inf.
pub fn scale_signed_classical(s: &CsrMatrix) -> ScaledEntries {
    map_rows(s, Scaling::SignedClassical, |i, c, v, out| {
        let m = c
            .iter()
            .zip(v)
            .filter(|(&j, _)| j != i)
            .fold(f64::NEG_INFINITY, |m, (_, &x)| m.max(-x));
        for k in 0..c.len() {
            out[k] = if c[k] == i {
                0.0
            } else if m > 0.0 {
                -v[k] / m
            } else {
                f64::NEG_INFINITY
            };
        }
        Ok(())
    })
    .expect("signed scaling is infallible")
}

/// Strong iff v_ij >= θ.
pub fn classify_threshold(v: &ScaledEntries, theta: f64) -> StrengthGraph {
    let rows = (0..v.nrows())
        .map(|i| v.off_diagonal(i).filter(|&(_, x)| x >= theta).map(|(j, _)| j).collect())
        .collect();
    StrengthGraph::from_rows(rows)
}

/// Cut-based dropping: sort a row's values in descending order (ties by
/// column), keep the largest, and keep going while each value is at least
/// θ_g times its predecessor.
pub fn classify_cut_drop(v: &ScaledEntries, theta_gap: f64) -> StrengthGraph {
    let mut buf: Vec<(usize, f64)> = Vec::new();
    let rows = (0..v.nrows())
        .map(|i| {
            buf.clear();
            buf.extend(v.off_diagonal(i));
            buf.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut keep = Vec::new();
            let mut prev = None::<f64>;
            for &(j, x) in &buf {
                if let Some(p) = prev {
                    if p == 0.0 || x / p < theta_gap {
                        break;
                    }
                }
                keep.push(j);
                prev = Some(x);
            }
            keep
        })
        .collect();
    StrengthGraph::from_rows(rows)
}

/// All intermediate products of the strength pipeline.
#[derive(Debug, Clone)]
pub struct StrengthResult {
    pub soc: CsrMatrix,
    pub scaled: ScaledEntries,
    pub graph: StrengthGraph,
}

pub fn build_strength_detailed(
    a: &CsrMatrix,
    coords: Option<&[[f64; 3]]>,
    cfg: &DropConfig,
) -> Result<StrengthResult> {
    cfg.validate()?;
    let soc = soc_matrix(a, coords, cfg.soc)?;
    let scaled = match cfg.scaling {
        Scaling::SymmetricSa => scale_symmetric_sa(&soc)?,
        Scaling::SignedClassical => scale_signed_classical(&soc),
    };
    let graph = match cfg.classifier {
        Classifier::Threshold => classify_threshold(&scaled, cfg.theta),
        Classifier::CutDrop => classify_cut_drop(&scaled, cfg.theta_gap),
    };
    Ok(StrengthResult { soc, scaled, graph })
}

pub fn build_strength(a: &CsrMatrix, coords: Option<&[[f64; 3]]>, cfg: &DropConfig) -> Result<StrengthGraph> {
    Ok(build_strength_detailed(a, coords, cfg)?.graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_matrix(vals: &[f64]) -> CsrMatrix {
        let n = vals.len();
        let mut t: Vec<_> = vals.iter().enumerate().map(|(j, &v)| (0, j, v)).collect();
        t.extend((1..n).map(|i| (i, i, 1.0)));
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn label_round_trip() {
        for p in PIPELINES {
            let c = DropConfig::from_label(p, 0.1, Lumping::Diagonal).unwrap();
            assert_eq!(c.label(), p);
        }
        assert!(DropConfig::from_label("DLap/Sgn/Gap", 0.1, Lumping::Diagonal).is_err());
        assert!(DropConfig::from_label("A/SA", 0.1, Lumping::Diagonal).is_err());
        assert!(DropConfig::from_label("A/SA/Val", 1.5, Lumping::Diagonal).is_err());
    }

    #[test]
    fn two_point_distance_laplacian() {
        let a = CsrMatrix::from_dense(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let l = distance_laplacian(&a, &[[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(l.to_dense(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let e = distance_laplacian(&a, &[[0.0; 3], [0.0; 3]]);
        assert!(matches!(e, Err(Error::CoincidentPoints { i: 0, j: 1 })));
    }

    #[test]
    fn signed_row_formula() {
        let v = scale_signed_classical(&row_matrix(&[4.0, -1.0, -2.0, 1.0]));
        let got: Vec<f64> = v.off_diagonal(0).map(|(_, x)| x).collect();
        assert_eq!(got, vec![0.5, 1.0, -0.5]);
        let weak = scale_signed_classical(&row_matrix(&[4.0, 1.0, 2.0]));
        assert!(weak.off_diagonal(0).all(|(_, x)| x == f64::NEG_INFINITY));
        assert!(classify_threshold(&weak, 0.0).row(0).is_empty());
    }

    #[test]
    fn sa_rejects_non_positive_diagonal() {
        let s = CsrMatrix::from_dense(&[vec![1.0, 0.5], vec![0.5, -1.0]]).unwrap();
        assert!(matches!(scale_symmetric_sa(&s), Err(Error::NonPositiveDiagonal { row: 1, .. })));
        let d = scale_symmetric_sa(&CsrMatrix::from_diagonal(&[1.0, 2.0])).unwrap();
        assert_eq!(classify_threshold(&d, 0.0).num_edges(), 0);
    }

    #[test]
    fn cut_drop_stops_at_first_gap() {
        // values chosen so SA scaling gives the same numbers (unit diagonal)
        let v = scale_symmetric_sa(&row_matrix(&[1.0, 0.10, 0.5, 0.09, 0.45])).unwrap();
        assert_eq!(classify_cut_drop(&v, 0.5).row(0), &[2, 4]);
        let flat = scale_symmetric_sa(&row_matrix(&[1.0, -0.3, -0.3, -0.3])).unwrap();
        assert_eq!(classify_cut_drop(&flat, 1.0).row(0), &[1, 2, 3]);
    }

    #[test]
    fn close_pair_line() {
        // spacings 1, 1, 0.1, 1, 1
        let x = [0.0, 1.0, 2.0, 2.1, 3.1, 4.1];
        let coords: Vec<[f64; 3]> = x.iter().map(|&v| [v, 0.0, 0.0]).collect();
        let mut t = Vec::new();
        for i in 0..6 {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(6, 6, &t).unwrap();
        let cfg = DropConfig::from_label("DLap/SA/Val", 0.5, Lumping::Diagonal).unwrap();
        let g = build_strength(&a, Some(&coords), &cfg).unwrap();
        assert!(g.is_symmetric());
        assert!(g.contains(2, 3) && !g.contains(1, 2) && !g.contains(3, 4));

        let gap = DropConfig::from_label("DLap/SA/Gap", 0.5, Lumping::Diagonal).unwrap();
        let g = build_strength(&a, Some(&coords), &gap).unwrap();
        assert_eq!(g.row(2), &[3]);
        assert_eq!(g.row(1), &[0]);
        let sgn = DropConfig::from_label("DLap/Sgn/Gap", 0.5, Lumping::Diagonal);
        assert!(sgn.is_err());
        let sgn_val = DropConfig::from_label("DLap/Sgn/Val", 0.5, Lumping::Diagonal).unwrap();
        let g = build_strength(&a, Some(&coords), &sgn_val).unwrap();
        assert_eq!(g.row(1), &[0, 2]);
        assert_eq!(g.row(2), &[3]);
    }

    #[test]
    fn edge_list_export() {
        let g = StrengthGraph::from_rows(vec![vec![1], vec![0], vec![]]);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1\n1 0\n");
    }
}
