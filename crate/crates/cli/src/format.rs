//! JSON file formats for operators, counts and reports.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which is
//! enough for every `f64` to parse back to the same bits.

use std::io;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use naimark_core::{CMatrix, Observable, Report};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: not valid JSON: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{file}: at {pointer}: {message}")]
    Schema {
        file: String,
        pointer: String,
        message: String,
    },
    #[error("{file}: operator '{name}' is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian {
        file: String,
        name: String,
        asymmetry: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedOperator {
    pub name: String,
    pub matrix: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFile {
    pub dim: usize,
    pub operators: Vec<NamedOperator>,
    pub description: Option<String>,
}

impl OperatorFile {
    pub fn new(operators: Vec<NamedOperator>, description: Option<String>) -> Self {
        let dim = operators.first().map_or(0, |o| o.matrix.nrows());
        Self {
            dim,
            operators,
            description,
        }
    }

    pub fn from_observables<'a>(
        prefix: &str,
        obs: impl IntoIterator<Item = &'a Observable>,
        description: Option<String>,
    ) -> Self {
        let operators = obs
            .into_iter()
            .enumerate()
            .map(|(i, o)| NamedOperator {
                name: format!("{prefix}{i}"),
                matrix: o.matrix().clone(),
            })
            .collect();
        Self::new(operators, description)
    }

    /// Observables in file order; each must be Hermitian within `1e-9`.
    pub fn observables(&self, file: &str) -> Result<Vec<Observable>, FormatError> {
        self.operators
            .iter()
            .map(|op| {
                Observable::new(op.matrix.clone()).map_err(|_| FormatError::NotHermitian {
                    file: file.to_string(),
                    name: op.name.clone(),
                    asymmetry: naimark_core::operator::max_asymmetry(&op.matrix)
                        .unwrap_or(f64::NAN),
                })
            })
            .collect()
    }

    pub fn to_value(&self) -> Value {
        let operators = self
            .operators
            .iter()
            .map(|op| {
                let rows: Vec<Value> = op
                    .matrix
                    .rows()
                    .into_iter()
                    .map(|row| {
                        Value::Array(
                            row.iter()
                                .map(|z| Value::Array(vec![float(z.re), float(z.im)]))
                                .collect(),
                        )
                    })
                    .collect();
                let mut entry = Map::new();
                entry.insert("name".into(), Value::String(op.name.clone()));
                entry.insert("matrix".into(), Value::Array(rows));
                Value::Object(entry)
            })
            .collect();
        let mut root = Map::new();
        root.insert("dim".into(), Value::from(self.dim));
        root.insert("operators".into(), Value::Array(operators));
        if let Some(d) = &self.description {
            let mut meta = Map::new();
            meta.insert("description".into(), Value::String(d.clone()));
            root.insert("metadata".into(), Value::Object(meta));
        }
        Value::Object(root)
    }

    pub fn from_value(v: &Value, file: &str) -> Result<Self, FormatError> {
        let s = Schema { file };
        let root = s.object(v, "")?;
        let dim = s.usize(s.field(root, "", "dim")?, "/dim")?;
        if dim == 0 {
            return Err(s.error("/dim", "must be positive"));
        }
        let ops = s.array(s.field(root, "", "operators")?, "/operators")?;
        if ops.is_empty() {
            return Err(s.error("/operators", "must not be empty"));
        }
        let mut operators = Vec::with_capacity(ops.len());
        for (i, op) in ops.iter().enumerate() {
            let at = format!("/operators/{i}");
            let obj = s.object(op, &at)?;
            let name = s.string(s.field(obj, &at, "name")?, &format!("{at}/name"))?;
            let matrix = s.matrix(s.field(obj, &at, "matrix")?, &format!("{at}/matrix"), dim)?;
            operators.push(NamedOperator {
                name: name.to_string(),
                matrix,
            });
        }
        let description = match root.get("metadata") {
            None | Some(Value::Null) => None,
            Some(meta) => {
                let meta = s.object(meta, "/metadata")?;
                match meta.get("description") {
                    None | Some(Value::Null) => None,
                    Some(d) => Some(s.string(d, "/metadata/description")?.to_string()),
                }
            }
        };
        Ok(Self {
            dim,
            operators,
            description,
        })
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let (_, value) = read_json(path)?;
        Self::from_value(&value, &path.display().to_string())
    }
}

/// Outcome counts, as written by `sample` and read by `estimate`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsFile {
    pub counts: Vec<u64>,
    pub seed: Option<u64>,
}

impl CountsFile {
    pub fn to_value(&self) -> Value {
        let mut root = Map::new();
        root.insert("counts".into(), Value::from(self.counts.clone()));
        root.insert("n".into(), Value::from(self.counts.iter().sum::<u64>()));
        if let Some(seed) = self.seed {
            root.insert("seed".into(), Value::from(seed));
        }
        Value::Object(root)
    }

    pub fn from_value(v: &Value, file: &str) -> Result<Self, FormatError> {
        let s = Schema { file };
        let root = s.object(v, "")?;
        let arr = s.array(s.field(root, "", "counts")?, "/counts")?;
        let counts = arr
            .iter()
            .enumerate()
            .map(|(i, x)| s.u64(x, &format!("/counts/{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(n) = root.get("n") {
            let n = s.u64(n, "/n")?;
            if n != counts.iter().sum::<u64>() {
                return Err(s.error("/n", "does not equal the sum of counts"));
            }
        }
        let seed = match root.get("seed") {
            None | Some(Value::Null) => None,
            Some(x) => Some(s.u64(x, "/seed")?),
        };
        Ok(Self { counts, seed })
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let (_, value) = read_json(path)?;
        Self::from_value(&value, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    pub name: String,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict: String,
}

/// Machine-readable result of one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportFile {
    pub check: String,
    pub verdict: String,
    pub inputs_digest: String,
    pub tool: String,
    pub tool_version: String,
    pub metrics: Vec<MetricRecord>,
}

impl ReportFile {
    pub fn new(report: &Report, inputs_digest: String) -> Self {
        Self {
            check: report.check.clone(),
            verdict: report.verdict().to_string(),
            inputs_digest,
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            metrics: report
                .metrics
                .iter()
                .map(|m| MetricRecord {
                    name: m.name.clone(),
                    value: m.value.is_finite().then_some(m.value),
                    tolerance: m.tolerance,
                    verdict: m.verdict.to_string(),
                })
                .collect(),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report fields serialize");
        // Values go through the fixed-precision float path on output.
        if let Value::Object(root) = &mut v {
            if let Some(Value::Array(ms)) = root.get_mut("metrics") {
                for (m, rec) in ms.iter_mut().zip(&self.metrics) {
                    if let Value::Object(obj) = m {
                        obj.insert("value".into(), rec.value.map_or(Value::Null, float));
                        obj.insert("tolerance".into(), rec.tolerance.map_or(Value::Null, float));
                    }
                }
            }
        }
        v
    }
}

/// SHA-256 over a tag, the bytes of every input, and a parameter string.
pub struct InputsDigest(Sha256);

impl Default for InputsDigest {
    fn default() -> Self {
        Self::new()
    }
}

impl InputsDigest {
    pub fn new() -> Self {
        Self(Sha256::new())
    }

    pub fn bytes(&mut self, data: &[u8]) -> &mut Self {
        self.0.update((data.len() as u64).to_le_bytes());
        self.0.update(data);
        self
    }

    pub fn finish(&self) -> String {
        self.0
            .clone()
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Writes floats as `d.dddddddddddddddde±x`.
struct FixedPrecision;

impl serde_json::ser::Formatter for FixedPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Pretty-printed (two-space indent) JSON with 17-significant-digit floats
/// and a trailing newline.
pub fn to_json_string(v: &Value) -> String {
    let mut out = Vec::new();
    let pretty = PrettyFixed::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, pretty);
    v.serialize(&mut ser)
        .expect("writing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serializer emits UTF-8")
}

/// `PrettyFormatter` layout with [`FixedPrecision`] floats.
struct PrettyFixed {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl PrettyFixed {
    fn new() -> Self {
        Self {
            inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
        }
    }
}

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(writer $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PrettyFixed {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        FixedPrecision.write_f64(writer, value)
    }

    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

pub fn write_json(path: &Path, v: &Value) -> Result<(), FormatError> {
    std::fs::write(path, to_json_string(v)).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Raw bytes and parsed JSON of `path`.
pub fn read_json(path: &Path) -> Result<(Vec<u8>, Value), FormatError> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| FormatError::Io {
        path: name.clone(),
        source,
    })?;
    let value = serde_json::from_slice(&bytes)
        .map_err(|source| FormatError::Json { path: name, source })?;
    Ok((bytes, value))
}

/// Typed accessors producing errors that carry a JSON pointer.
struct Schema<'a> {
    file: &'a str,
}

impl Schema<'_> {
    fn error(&self, pointer: &str, message: impl Into<String>) -> FormatError {
        FormatError::Schema {
            file: self.file.to_string(),
            pointer: if pointer.is_empty() {
                "/".into()
            } else {
                pointer.into()
            },
            message: message.into(),
        }
    }

    fn object<'v>(&self, v: &'v Value, at: &str) -> Result<&'v Map<String, Value>, FormatError> {
        v.as_object()
            .ok_or_else(|| self.error(at, "expected an object"))
    }

    fn array<'v>(&self, v: &'v Value, at: &str) -> Result<&'v Vec<Value>, FormatError> {
        v.as_array()
            .ok_or_else(|| self.error(at, "expected an array"))
    }

    fn string<'v>(&self, v: &'v Value, at: &str) -> Result<&'v str, FormatError> {
        v.as_str()
            .ok_or_else(|| self.error(at, "expected a string"))
    }

    fn field<'v>(
        &self,
        obj: &'v Map<String, Value>,
        at: &str,
        key: &str,
    ) -> Result<&'v Value, FormatError> {
        obj.get(key)
            .ok_or_else(|| self.error(at, format!("missing field '{key}'")))
    }

    fn u64(&self, v: &Value, at: &str) -> Result<u64, FormatError> {
        v.as_u64()
            .ok_or_else(|| self.error(at, "expected a nonnegative integer"))
    }

    fn usize(&self, v: &Value, at: &str) -> Result<usize, FormatError> {
        let x = self.u64(v, at)?;
        usize::try_from(x).map_err(|_| self.error(at, "integer too large"))
    }

    fn number(&self, v: &Value, at: &str) -> Result<f64, FormatError> {
        v.as_f64()
            .ok_or_else(|| self.error(at, "expected a number"))
    }

    fn matrix(&self, v: &Value, at: &str, dim: usize) -> Result<CMatrix, FormatError> {
        let rows = self.array(v, at)?;
        if rows.len() != dim {
            return Err(self.error(at, format!("expected {dim} rows, found {}", rows.len())));
        }
        let mut out = Array2::from_elem((dim, dim), Complex64::new(0.0, 0.0));
        for (r, row) in rows.iter().enumerate() {
            let row_at = format!("{at}/{r}");
            let entries = self.array(row, &row_at)?;
            if entries.len() != dim {
                return Err(self.error(
                    &row_at,
                    format!("expected {dim} entries, found {}", entries.len()),
                ));
            }
            for (c, entry) in entries.iter().enumerate() {
                let entry_at = format!("{row_at}/{c}");
                let pair = self.array(entry, &entry_at)?;
                if pair.len() != 2 {
                    return Err(self.error(&entry_at, "expected a [re, im] pair"));
                }
                let re = self.number(&pair[0], &format!("{entry_at}/0"))?;
                let im = self.number(&pair[1], &format!("{entry_at}/1"))?;
                out[[r, c]] = Complex64::new(re, im);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_file() -> Value {
        serde_json::json!({
            "dim": 2,
            "operators": [
                {"name": "P0", "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
                {"name": "P1", "matrix": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]]}
            ]
        })
    }

    #[test]
    fn parses_diagonal_projectors() {
        let f = OperatorFile::from_value(&diag_file(), "t").unwrap();
        let obs = f.observables("t").unwrap();
        assert_eq!(obs.len(), 2);
        assert!(obs.iter().all(|o| o.dim() == 2));
        assert_eq!(obs[0], Observable::from_real_diag(&[1.0, 0.0]));
    }

    #[test]
    fn schema_error_names_the_path() {
        let v = serde_json::json!({
            "dim": 1,
            "operators": [{"name": "A", "matrix": [[[0, "x"]]]}]
        });
        let err = OperatorFile::from_value(&v, "bad.json").unwrap_err();
        assert_eq!(
            err.to_string(),
            "bad.json: at /operators/0/matrix/0/0/1: expected a number"
        );
    }

    #[test]
    fn non_hermitian_names_the_operator() {
        let v = serde_json::json!({
            "dim": 2,
            "operators": [{"name": "N", "matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}]
        });
        let f = OperatorFile::from_value(&v, "f").unwrap();
        let err = f.observables("f").unwrap_err().to_string();
        assert!(err.contains("'N'") && err.contains("asymmetry"), "{err}");
    }

    #[test]
    fn floats_keep_every_bit() {
        let xs = [0.1, -1.0 / 3.0, 1e-300, 5e-324, f64::MAX, -0.0, 0.0];
        let s = to_json_string(&Value::from(
            xs.iter().map(|x| float(*x)).collect::<Vec<_>>(),
        ));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        for (a, b) in xs.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits(), "{s}");
        }
    }

    #[test]
    fn counts_total_is_checked() {
        let v = serde_json::json!({"counts": [1, 2], "n": 4});
        let err = CountsFile::from_value(&v, "c").unwrap_err().to_string();
        assert!(err.contains("/n"), "{err}");
    }
}
