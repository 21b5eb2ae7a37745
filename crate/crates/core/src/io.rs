//! File formats: the JSON matrix file and deterministic report output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{NrError, Result};
use crate::linalg::ComplexSquareMatrix;
use crate::scalar::{cx, Real};

/// `{"dim": n, "re": [[..]; n], "im": [[..]; n]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    /// Parses and validates a matrix document.
    pub fn parse(text: &str) -> Result<Self> {
        let mf: MatrixFile = serde_json::from_str(text).map_err(|e| NrError::Parse(e.to_string()))?;
        mf.validate()?;
        Ok(mf)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| NrError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            NrError::Parse(m) => NrError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(NrError::Parse("\"dim\" must be positive".into()));
        }
        for (name, part) in [("re", &self.re), ("im", &self.im)] {
            if part.len() != n {
                return Err(NrError::Parse(format!("\"{name}\" has {} rows, expected {n}", part.len())));
            }
            for (i, row) in part.iter().enumerate() {
                if row.len() != n {
                    return Err(NrError::Parse(format!(
                        "\"{name}\" row {i} has {} entries, expected {n}",
                        row.len()
                    )));
                }
                if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                    return Err(NrError::Parse(format!("\"{name}\"[{i}][{j}] is not finite")));
                }
            }
        }
        Ok(())
    }

    pub fn to_matrix<T: Real>(&self) -> Result<ComplexSquareMatrix<T>> {
        self.validate()?;
        let n = self.dim;
        let entries = (0..n * n)
            .map(|k| cx(T::lit(self.re[k / n][k % n]), T::lit(self.im[k / n][k % n])))
            .collect();
        ComplexSquareMatrix::from_row_major(n, entries)
    }

    pub fn from_matrix<T: Real>(a: &ComplexSquareMatrix<T>) -> Self {
        let n = a.dim();
        let part = |f: &dyn Fn(usize, usize) -> f64| (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        Self {
            dim: n,
            re: part(&|i, j| a.get(i, j).re.to_f64_lossy()),
            im: part(&|i, j| a.get(i, j).im.to_f64_lossy()),
        }
    }
}

/// Seventeen significant digits in scientific notation (round-trips every `f64`).
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // fold -0.0 into 0.0 so output does not depend on the sign of zero
        return "0.0000000000000000e0".into();
    }
    format!("{x:.16e}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| {
        for _ in 0..k {
            out.push_str("  ");
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    out.push_str(&format_float(x));
                } else {
                    out.push_str("null");
                }
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], indent + 1);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and fixed float formatting; byte-identical for identical input.
pub fn to_deterministic_json<S: Serialize>(value: &S) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| NrError::Parse(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

/// Writes `contents` to a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| NrError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let a = ComplexSquareMatrix::<f64>::from_rows(&[
            vec![cx(0.0, 0.0), cx(1.0, 0.5)],
            vec![cx(0.0, 0.0), cx(-2.0, 0.0)],
        ])
        .unwrap();
        let mf = MatrixFile::from_matrix(&a);
        let text = serde_json::to_string(&mf).unwrap();
        let back = MatrixFile::parse(&text).unwrap().to_matrix::<f64>().unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn parse_errors_are_specific() {
        let e = MatrixFile::parse("{\"dim\": 2, \"re\": [[0,1],[0]], \"im\": [[0,0],[0,0]]}").unwrap_err();
        assert!(e.to_string().contains("row 1"), "{e}");
        let e = MatrixFile::parse("{\"dim\": 2,\n \"re\": [[0,1],[0,0]],\n \"im\": oops}").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(MatrixFile::parse("{\"dim\": 0, \"re\": [], \"im\": []}").is_err());
    }

    #[test]
    fn deterministic_json_sorts_and_formats() {
        let v = serde_json::json!({"b": 0.1, "a": [1, -0.0, 2.5e-20], "c": {"z": null, "y": true}});
        let s = to_deterministic_json(&v).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("0.0000000000000000e0"));
        let parsed: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed["b"], 0.1);
        assert_eq!(to_deterministic_json(&v).unwrap(), s);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("nrflat-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("x.json");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        fs::remove_dir_all(&dir).unwrap();
    }
}
