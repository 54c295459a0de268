//! Matrix Market coordinate format (`real general`, 1-based indices).
//!
//! Values are written with 17 significant digits, which round-trips every
//! finite `f64` exactly. The reader also accepts `symmetric` files and
//! mirrors their off-diagonal entries.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::CsrMatrix;
use crate::error::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut w: W) -> Result<()> {
    let mut s = String::with_capacity(32 * a.nnz() + 128);
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz()).unwrap();
    for i in 0..a.nrows() {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            writeln!(s, "{} {} {:.16e}", i + 1, j + 1, x).unwrap();
        }
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<CsrMatrix> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let header = header?;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("not a Matrix Market header: {header:?}"),
        });
    }
    if fields[2] != "coordinate" || !(fields[3] == "real" || fields[3] == "integer") {
        return Err(Error::Parse {
            line: 1,
            msg: "only coordinate real/integer matrices are supported".into(),
        });
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported symmetry {other:?}"),
            })
        }
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    let mut read = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let parse_usize = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })
        };
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "expected `rows cols nnz`".into(),
                    });
                }
                let s = (parse_usize(parts[0])?, parse_usize(parts[1])?, parse_usize(parts[2])?);
                trip.reserve(if symmetric { 2 * s.2 } else { s.2 });
                size = Some(s);
            }
            Some((m, n, _)) => {
                if parts.len() != 3 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "expected `row col value`".into(),
                    });
                }
                let i = parse_usize(parts[0])?;
                let j = parse_usize(parts[1])?;
                let v: f64 = parts[2].parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("index ({i}, {j}) outside {m}x{n}"),
                    });
                }
                trip.push((i - 1, j - 1, v));
                read += 1;
                if symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    let stored = read;
    if stored != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header announces {nnz} entries, found {stored}"),
        });
    }
    CsrMatrix::from_triplets(m, n, &trip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_indices_are_one_based() {
        let a = CsrMatrix::from_triplets(2, 3, &[(1, 2, 0.5)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(HEADER));
        assert_eq!(lines.next(), Some("2 3 1"));
        assert!(lines.next().unwrap().starts_with("2 3 5.0000000000000000e-1"));
    }

    #[test]
    fn reads_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 4\n2 1 -1\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.to_dense(), vec![vec![4.0, -1.0], vec![-1.0, 0.0]]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_matrix_market("hello\n".as_bytes()).is_err());
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n";
        assert!(read_matrix_market(short.as_bytes()).is_err());
        let oob = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n";
        assert!(read_matrix_market(oob.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            t in proptest::collection::vec((0usize..20, 0usize..15, -1e100f64..1e100), 0..60)
        ) {
            let a = CsrMatrix::from_triplets(20, 15, &t).unwrap();
            let mut buf = Vec::new();
            write_matrix_market(&a, &mut buf).unwrap();
            let b = read_matrix_market(buf.as_slice()).unwrap();
            prop_assert_eq!(a.row_offsets(), b.row_offsets());
            prop_assert_eq!(a.col_indices(), b.col_indices());
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
