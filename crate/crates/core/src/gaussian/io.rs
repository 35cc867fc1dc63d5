//! Covariance and matrix CSV files.
//!
//! Layout: `#`-prefixed `key=value` header lines, then one comma-separated
//! row per matrix row. Numbers use 17 significant digits (`{:.16e}`), which
//! round-trips `f64` exactly and makes output byte-stable.
//!
//! ```text
//! # cvcs-covariance v1
//! # ordering=quadrature_blocked
//! # units=photon
//! # n_modes=25
//! 5.0000000000000000e-1,0.0000000000000000e0,...
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cov::{CovarianceMatrix, QuadratureOrdering, Units};
use crate::error::{Error, Result};
use crate::lattice::ModeBasis;
use crate::scalar::Real;

pub const COVARIANCE_MAGIC: &str = "cvcs-covariance v1";
pub const MATRIX_MAGIC: &str = "cvcs-matrix v1";

/// Fixed 17-significant-digit rendering.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write any real matrix with a magic line and ordered metadata.
pub fn write_matrix_csv<T: Real, W: Write>(
    mut w: W,
    magic: &str,
    meta: &[(String, String)],
    m: &DMatrix<T>,
) -> Result<()> {
    writeln!(w, "# {magic}")?;
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&fmt_num(m[(i, j)].as_f64()));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Parsed matrix file: header metadata and the matrix.
pub struct MatrixFile<T: Real> {
    pub magic: Option<String>,
    pub meta: BTreeMap<String, String>,
    pub matrix: DMatrix<T>,
}

pub fn read_matrix_csv<T: Real, R: BufRead>(r: R) -> Result<MatrixFile<T>> {
    let mut magic = None;
    let mut meta = BTreeMap::new();
    let mut rows: Vec<Vec<T>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            match rest.split_once('=') {
                Some((k, v)) => {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                None if magic.is_none() => magic = Some(rest.to_string()),
                None => {}
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map(T::lit).map_err(|e| Error::Parse(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Dimension { expected: first.len(), got: row.len() });
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let matrix = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    Ok(MatrixFile { magic, meta, matrix })
}

pub fn write_covariance_csv<T: Real, W: Write>(
    w: W,
    cov: &CovarianceMatrix<T>,
    extra_meta: &[(String, String)],
) -> Result<()> {
    let mut meta = vec![
        ("ordering".to_string(), cov.ordering().as_str().to_string()),
        ("units".to_string(), cov.units().as_str().to_string()),
        ("n_modes".to_string(), cov.n_modes().to_string()),
    ];
    meta.extend_from_slice(extra_meta);
    write_matrix_csv(w, COVARIANCE_MAGIC, &meta, cov.entries())
}

pub fn read_covariance_csv<T: Real, R: BufRead>(r: R) -> Result<CovarianceMatrix<T>> {
    let file = read_matrix_csv::<T, _>(r)?;
    if file.magic.as_deref() != Some(COVARIANCE_MAGIC) {
        return Err(Error::Parse("missing covariance header".into()));
    }
    let ordering =
        QuadratureOrdering::parse(file.meta.get("ordering").ok_or_else(|| Error::Parse("missing ordering".into()))?)?;
    let units = Units::parse(file.meta.get("units").map(String::as_str).unwrap_or("photon"))?;
    let cov = CovarianceMatrix::with_units(file.matrix, ordering, units)?;
    if let Some(n) = file.meta.get("n_modes") {
        let n: usize = n.parse().map_err(|_| Error::Parse(format!("bad n_modes {n:?}")))?;
        if n != cov.n_modes() {
            return Err(Error::Dimension { expected: n, got: cov.n_modes() });
        }
    }
    Ok(cov)
}

/// JSON companion of a covariance CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSidecar {
    pub n_modes: usize,
    pub ordering: QuadratureOrdering,
    pub units: Units,
    pub basis: ModeBasis,
    /// Processing stages applied, in order.
    #[serde(default)]
    pub stages: Vec<String>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_csv_round_trip_is_exact() {
        let m =
            DMatrix::from_fn(4, 4, |i, j| 0.1 * (i as f64 + 1.0) / (j as f64 + 3.0) + if i == j { 0.5 } else { 0.0 });
        let m = (&m + m.transpose()) * 0.5;
        let cov = CovarianceMatrix::from_matrix(m, QuadratureOrdering::Blocked).unwrap();
        let mut buf = Vec::new();
        write_covariance_csv(&mut buf, &cov, &[("tool".into(), "test".into())]).unwrap();
        let back: CovarianceMatrix<f64> = read_covariance_csv(&buf[..]).unwrap();
        assert_eq!(back, cov);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# cvcs-covariance v1\n# ordering=quadrature_blocked\n"));
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = "# cvcs-matrix v1\n1,2\n3\n";
        assert!(read_matrix_csv::<f64, _>(text.as_bytes()).is_err());
    }

    #[test]
    fn number_format_has_seventeen_digits() {
        assert_eq!(fmt_num(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_num(0.1).len(), "1.0000000000000001e-1".len());
    }
}
