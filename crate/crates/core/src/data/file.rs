//! Plain-text dataset files.
//!
//! ```text
//! # schema=1
//! # problem=pde_divide
//! # nx=100
//! # nt=251
//! # dx=1.0101010101010102e-2
//! # dt=1.0000000000000000e-2
//! # params=
//! # generator=pdeforest 0.1.0
//! <nx comma-separated x values>
//! <nt comma-separated t values>
//! <nx lines of nt comma-separated u values>
//! ```
//!
//! Reals are written with 17 significant digits, so reading a file back
//! reproduces every stored value bit for bit. Extra `# key=value` lines are kept
//! as dataset notes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::eval::{make_dataset, Dataset, DatasetError, DatasetInfo};

pub const SCHEMA_VERSION: u32 = 1;

const GENERATOR: &str = concat!("pdeforest ", env!("CARGO_PKG_VERSION"));
const REQUIRED: [&str; 7] = ["schema", "problem", "nx", "nt", "dx", "dt", "params"];
const STEP_RTOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DatasetFileError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed header `{text}`")]
    BadHeader { line: usize, text: String },
    #[error("missing header key `{0}`")]
    MissingKey(&'static str),
    #[error("unsupported schema version {0}")]
    UnsupportedSchema(String),
    #[error("line {line}: cannot parse `{text}` as a number")]
    BadNumber { line: usize, text: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("header {key}={header} disagrees with the axis spacing {axis}")]
    StepMismatch {
        key: &'static str,
        header: f64,
        axis: f64,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(real).collect::<Vec<_>>().join(",")
}

/// Serializes a dataset to the text format.
pub fn write_dataset_string(d: &Dataset) -> String {
    let mut s = String::new();
    let params = d
        .info
        .params
        .iter()
        .map(|(k, v)| format!("{k}:{}", real(*v)))
        .collect::<Vec<_>>()
        .join(";");
    let problem = if d.info.problem.is_empty() {
        "unknown"
    } else {
        &d.info.problem
    };
    let header = [
        ("schema", SCHEMA_VERSION.to_string()),
        ("problem", problem.to_string()),
        ("nx", d.nx().to_string()),
        ("nt", d.nt().to_string()),
        ("dx", real(d.dx())),
        ("dt", real(d.dt())),
        ("params", params),
        ("generator", GENERATOR.to_string()),
    ];
    for (k, v) in header {
        let _ = writeln!(s, "# {k}={v}");
    }
    for (k, v) in &d.info.notes {
        let _ = writeln!(s, "# {k}={}", v.replace('\n', " "));
    }
    let _ = writeln!(s, "{}", join(d.x().iter().copied()));
    let _ = writeln!(s, "{}", join(d.t().iter().copied()));
    for row in d.u().rows() {
        let _ = writeln!(s, "{}", join(row.iter().copied()));
    }
    s
}

pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetFileError> {
    let path = path.as_ref();
    fs::write(path, write_dataset_string(d)).map_err(|source| DatasetFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_dataset_str(&text)
}

fn numbers(line: &str, lineno: usize) -> Result<Vec<f64>, DatasetFileError> {
    line.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| DatasetFileError::BadNumber {
                    line: lineno,
                    text: tok.to_string(),
                })
        })
        .collect()
}

fn count(name: &'static str, value: &str) -> Result<usize, DatasetFileError> {
    value
        .parse()
        .map_err(|_| DatasetFileError::Shape(format!("{name}=`{value}` is not a count")))
}

/// Parses the text format; derivative caches are rebuilt from the values.
pub fn read_dataset_str(text: &str) -> Result<Dataset, DatasetFileError> {
    let mut header: Vec<(String, String)> = Vec::new();
    let mut body: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if !body.is_empty() {
                return Err(DatasetFileError::BadHeader {
                    line: lineno,
                    text: line.to_string(),
                });
            }
            let (k, v) =
                rest.trim()
                    .split_once('=')
                    .ok_or_else(|| DatasetFileError::BadHeader {
                        line: lineno,
                        text: line.to_string(),
                    })?;
            header.push((k.trim().to_string(), v.trim().to_string()));
        } else {
            body.push((lineno, line));
        }
    }
    let get = |key: &'static str| {
        header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or(DatasetFileError::MissingKey(key))
    };
    let schema = get("schema")?;
    if schema != SCHEMA_VERSION.to_string() {
        return Err(DatasetFileError::UnsupportedSchema(schema.to_string()));
    }
    let nx = count("nx", get("nx")?)?;
    let nt = count("nt", get("nt")?)?;
    let step = |key: &'static str| -> Result<f64, DatasetFileError> {
        let v = get(key)?;
        v.parse().map_err(|_| DatasetFileError::BadHeader {
            line: 0,
            text: format!("{key}={v}"),
        })
    };
    let (dx, dt) = (step("dx")?, step("dt")?);
    let mut params = Vec::new();
    for item in get("params")?.split(';').filter(|s| !s.trim().is_empty()) {
        let bad = || DatasetFileError::BadHeader {
            line: 0,
            text: format!("params entry `{item}`"),
        };
        let (k, v) = item.split_once(':').ok_or_else(bad)?;
        params.push((
            k.trim().to_string(),
            v.trim().parse::<f64>().map_err(|_| bad())?,
        ));
    }

    if body.len() != nx + 2 {
        return Err(DatasetFileError::Shape(format!(
            "expected {} data lines (x, t, {nx} rows of u), found {}",
            nx + 2,
            body.len()
        )));
    }
    let expect = |what: &str,
                  (lineno, line): (usize, &str),
                  n: usize|
     -> Result<Vec<f64>, DatasetFileError> {
        let v = numbers(line, lineno)?;
        if v.len() != n {
            return Err(DatasetFileError::Shape(format!(
                "line {lineno}: {what} has {} values, expected {n}",
                v.len()
            )));
        }
        Ok(v)
    };
    let x = Array1::from(expect("x axis", body[0], nx)?);
    let t = Array1::from(expect("t axis", body[1], nt)?);
    let mut u = Array2::zeros((nx, nt));
    for (i, &line) in body[2..].iter().enumerate() {
        let row = expect("u row", line, nt)?;
        u.row_mut(i).assign(&Array1::from(row));
    }

    let notes = header
        .iter()
        .filter(|(k, _)| !REQUIRED.contains(&k.as_str()) && k != "generator")
        .cloned()
        .collect();
    let info = DatasetInfo {
        problem: get("problem")?.to_string(),
        params,
        notes,
    };
    let d = make_dataset(u, x, t)?.with_info(info);
    for (key, header, axis) in [("dx", dx, d.dx()), ("dt", dt, d.dt())] {
        if (header - axis).abs() > STEP_RTOL * axis.abs() {
            return Err(DatasetFileError::StepMismatch { key, header, axis });
        }
    }
    Ok(d)
}
