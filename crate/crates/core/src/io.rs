//! File formats: matrices (JSON or interleaved CSV), Lie-algebra specs and
//! sampled curves.
//!
//! Matrix JSON is `{"dim": n, "re": [[..]], "im": [[..]]}`, row-major. The CSV
//! form has `n` rows of `2n` columns with real and imaginary parts interleaved.
//! Numbers are written with 17 significant digits so a write/read cycle is
//! lossless.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{GeoError, Result};
use crate::matfun::CMatrix;

/// `x` with 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// An `f64` that serializes (to JSON) with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(fmt17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

/// `serialize_with` helper for plain `f64` fields.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    Sig17(*x).serialize(s)
}

pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => Sig17(*v).serialize(s),
        None => s.serialize_none(),
    }
}

pub fn ser_f64_map<S: Serializer>(
    m: &std::collections::BTreeMap<String, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &Sig17(*v))?;
    }
    map.end()
}

/// The on-disk matrix object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<Sig17>>,
    #[serde(default)]
    pub im: Vec<Vec<Sig17>>,
}

impl MatrixFile {
    pub fn from_matrix(x: &CMatrix) -> Self {
        let n = x.nrows();
        let re = (0..n).map(|i| (0..n).map(|j| Sig17(x[(i, j)].re)).collect()).collect();
        let im = (0..n).map(|i| (0..n).map(|j| Sig17(x[(i, j)].im)).collect()).collect();
        MatrixFile { dim: n, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.dim;
        if n == 0 {
            return Err(GeoError::Parse("matrix dimension must be positive".into()));
        }
        let rows_ok = |rows: &Vec<Vec<Sig17>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !rows_ok(&self.re) {
            return Err(GeoError::Parse(format!("\"re\" must be {n} rows of {n} numbers")));
        }
        if !self.im.is_empty() && !rows_ok(&self.im) {
            return Err(GeoError::Parse(format!("\"im\" must be {n} rows of {n} numbers")));
        }
        let x = CMatrix::from_fn(n, n, |i, j| {
            let im = if self.im.is_empty() { 0.0 } else { self.im[i][j].0 };
            Complex64::new(self.re[i][j].0, im)
        });
        if !crate::matfun::is_finite(&x) {
            return Err(GeoError::Parse("matrix entries must be finite".into()));
        }
        Ok(x)
    }
}

pub fn matrix_to_json(x: &CMatrix) -> String {
    serde_json::to_string(&MatrixFile::from_matrix(x)).expect("matrix serialization is infallible")
}

pub fn matrix_to_csv(x: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols())
            .flat_map(|j| [fmt17(x[(i, j)].re), fmt17(x[(i, j)].im)])
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn parse_csv(text: &str) -> Result<CMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| GeoError::Parse(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| GeoError::Parse(format!("bad number {f:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != 2 * n) {
        return Err(GeoError::Parse(format!("CSV matrix must have n rows of 2n columns (got {n} rows)")));
    }
    let x = CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][2 * j], rows[i][2 * j + 1]));
    if !crate::matfun::is_finite(&x) {
        return Err(GeoError::Parse("matrix entries must be finite".into()));
    }
    Ok(x)
}

/// Parses either format; JSON is recognized by a leading `{`.
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    if text.trim_start().starts_with('{') {
        let file: MatrixFile = serde_json::from_str(text)?;
        file.to_matrix()
    } else {
        parse_csv(text)
    }
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| match e {
        GeoError::Parse(m) => GeoError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Lie-algebra spec file: `{"name": .., "dim": n, "basis": [matrix objects]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub name: String,
    pub dim: usize,
    pub basis: Vec<MatrixFile>,
}

/// Sampled curve as CSV: a header row, then `t` followed by the entries
/// row-major with real and imaginary parts interleaved.
pub fn curve_to_csv(samples: &[(f64, CMatrix)]) -> String {
    let Some((_, first)) = samples.first() else {
        return String::from("t\n");
    };
    let n = first.nrows();
    let mut header = vec![String::from("t")];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("re_{i}_{j}"));
            header.push(format!("im_{i}_{j}"));
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for (t, x) in samples {
        let mut row = vec![fmt17(*t)];
        for i in 0..n {
            for j in 0..n {
                row.push(fmt17(x[(i, j)].re));
                row.push(fmt17(x[(i, j)].im));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
