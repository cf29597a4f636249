//! File formats: tensors and matrices as JSON, point clouds as CSV, and a JSON
//! writer that prints every float with 17 significant digits.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, RMatrix};
use crate::tensor::{Field, Tensor4};

fn ingest(msg: impl std::fmt::Display) -> Error {
    Error::Ingest(msg.to_string())
}

/// `{"n": 2, "field": "real", "entries": [[i, j, k, l, re, im], ...]}`, 0-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub n: usize,
    pub field: Field,
    pub entries: Vec<(usize, usize, usize, usize, f64, f64)>,
}

impl From<&Tensor4> for TensorFile {
    fn from(m: &Tensor4) -> Self {
        let entries = m.entries().iter().map(|&([i, j, k, l], v)| (i, j, k, l, v.re, v.im)).collect();
        Self { n: m.n(), field: m.field(), entries }
    }
}

impl TryFrom<TensorFile> for Tensor4 {
    type Error = Error;

    fn try_from(f: TensorFile) -> Result<Self> {
        let entries = f.entries.into_iter().map(|(i, j, k, l, re, im)| ([i, j, k, l], c64(re, im)));
        Tensor4::new(f.n, f.field, entries).map_err(|e| match e {
            Error::Ingest(_) => e,
            other => ingest(other),
        })
    }
}

pub fn parse_tensor(text: &str) -> Result<Tensor4> {
    let file: TensorFile = serde_json::from_str(text).map_err(|e| ingest(format!("tensor JSON: {e}")))?;
    file.try_into()
}

pub fn read_tensor(mut r: impl Read) -> Result<Tensor4> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse_tensor(&text)
}

/// Rows of `[re, im]` pairs.
pub fn complex_rows(a: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    a.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn from_complex_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ingest("matrix rows have different lengths"));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(ingest("matrix entries must be finite"));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

pub fn real_rows(a: &RMatrix) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<RMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ingest("matrix rows have different lengths"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ingest("matrix entries must be finite"));
    }
    Ok(RMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Headerless CSV with one point per row.
pub fn read_points(r: impl Read) -> Result<RMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ingest(format!("points CSV: {e}")))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| ingest(format!("points CSV row {}: cannot parse {s:?}", line + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ingest("points CSV is empty"));
    }
    from_real_rows(&rows)
}

/// A JSON list of row-major matrices.
pub fn read_matrices(mut r: impl Read) -> Result<Vec<RMatrix>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let raw: Vec<Vec<Vec<f64>>> = serde_json::from_str(&text).map_err(|e| ingest(format!("matrices JSON: {e}")))?;
    let mats = raw.iter().map(|m| from_real_rows(m)).collect::<Result<Vec<_>>>()?;
    if let Some(first) = mats.first() {
        if mats.iter().any(|m| m.shape() != first.shape()) {
            return Err(ingest("matrices have different shapes"));
        }
    }
    Ok(mats)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermFile {
    pub alpha: [f64; 2],
    #[serde(rename = "A")]
    pub a: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateFile {
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub terms: Vec<TermFile>,
    pub residual: TensorFile,
    pub certificates: Vec<CertificateFile>,
    pub lower_bound: f64,
    pub residual_upper_bound: f64,
}

impl From<&Decomposition> for DecompositionFile {
    fn from(d: &Decomposition) -> Self {
        Self {
            terms: d
                .terms
                .iter()
                .map(|t| TermFile { alpha: [t.alpha.re, t.alpha.im], a: complex_rows(&t.a), b: complex_rows(&t.b) })
                .collect(),
            residual: (&d.residual).into(),
            certificates: d
                .certificates
                .iter()
                .map(|c| CertificateFile { upper_bound: c.upper_bound, lower_bound: c.lower_bound, energy: c.energy })
                .collect(),
            lower_bound: d.lower_bound,
            residual_upper_bound: d.residual_upper_bound,
        }
    }
}

/// Compact JSON with floats as `{:.16e}` (17 significant digits, round-trip
/// exact) and non-finite floats as `null`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SignificantFormatter;

impl Formatter for SignificantFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantFormatter);
    value.serialize(&mut ser).map_err(|e| Error::Io(io::Error::other(e)))?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::tests::random_tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tensor_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(120);
        for field in [Field::Real, Field::Complex] {
            let m = random_tensor(&mut rng, 2, field);
            let text = to_json_string(&TensorFile::from(&m)).unwrap();
            let back = parse_tensor(&text).unwrap();
            assert_eq!(back.entries(), m.entries());
            assert_eq!(back.field(), field);
        }
    }

    #[test]
    fn tensor_ingest_errors() {
        for bad in [
            "{",
            r#"{"n": 2, "field": "real", "entries": [[0,0,0,0,1,0],[0,0,0,0,2,0]]}"#,
            r#"{"n": 2, "field": "real", "entries": [[0,0,0,2,1,0]]}"#,
            r#"{"n": 2, "field": "real", "entries": [[0,0,0,0,1,0.5]]}"#,
            r#"{"n": 2, "field": "quaternion", "entries": []}"#,
            r#"{"n": 2, "field": "real", "entries": [[0,0,0,0.5,1,0]]}"#,
        ] {
            assert!(matches!(parse_tensor(bad), Err(Error::Ingest(_))), "{bad}");
        }
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json_string(&vec![0.1, -2.0, f64::NAN, 1e-300]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,-2.0000000000000000e0,null,1.0000000000000000e-300]");
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], Some(0.1));
    }

    #[test]
    fn points_and_matrices() {
        let p = read_points("1, 2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(p, RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert!(read_points("1,2\n3\n".as_bytes()).is_err());
        assert!(read_points("1,x\n".as_bytes()).is_err());
        assert!(read_points("".as_bytes()).is_err());
        let m = read_matrices("[[[1,0],[0,1]],[[0,1],[1,0]]]".as_bytes()).unwrap();
        assert_eq!(m.len(), 2);
        assert!(matches!(read_matrices("[[[1,0]],[[0],[1]]]".as_bytes()), Err(Error::Ingest(_))));
    }
}
