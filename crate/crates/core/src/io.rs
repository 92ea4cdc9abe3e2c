//! JSON documents for models, signals and reports.
//!
//! Matrices are row-major nested arrays. Numbers are written in the shortest
//! form that parses back to the same `f64`, so documents round-trip exactly.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::StateSpaceModel;

pub const MODEL_SCHEMA: &str = "relaxkit.model/1";
pub const SIGNAL_SCHEMA: &str = "relaxkit.signal/1";

/// On-disk form of a [`StateSpaceModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    matrix_rows(m).serialize(s)
}

fn to_matrix(field: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if ncols == 0 && rows.is_empty() {
        return Ok(DMatrix::zeros(nrows, 0));
    }
    if rows.len() != nrows {
        return Err(Error::validation(field, format!("expected {nrows} rows, found {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::validation(
                format!("{field}[{i}]"),
                format!("expected {ncols} columns, found {}", row.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl ModelDocument {
    pub fn from_model(sys: &StateSpaceModel, label: Option<String>) -> Self {
        Self {
            schema_version: MODEL_SCHEMA.to_string(),
            label,
            a: matrix_rows(sys.a()),
            b: matrix_rows(sys.b()),
            c: matrix_rows(sys.c()),
            d: matrix_rows(sys.d()),
        }
    }

    /// Validates dimensions: `n` from the rows of `A`, `(p, m)` from `D`.
    pub fn to_model(&self) -> Result<StateSpaceModel> {
        if self.schema_version != MODEL_SCHEMA {
            return Err(Error::validation(
                "schema_version",
                format!("expected \"{MODEL_SCHEMA}\", found \"{}\"", self.schema_version),
            ));
        }
        let n = self.a.len();
        let p = self.d.len();
        if p == 0 {
            return Err(Error::validation("D", "must have at least one row"));
        }
        let m = self.d[0].len();
        if m == 0 {
            return Err(Error::validation("D", "must have at least one column"));
        }
        let a = to_matrix("A", &self.a, n, n)?;
        let b = if n == 0 && self.b.is_empty() {
            DMatrix::zeros(0, m)
        } else {
            to_matrix("B", &self.b, n, m)?
        };
        let c = to_matrix("C", &self.c, p, n)?;
        let d = to_matrix("D", &self.d, p, m)?;
        StateSpaceModel::new(a, b, c, d).map_err(|e| Error::validation("model", e.to_string()))
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_model(text: &str) -> Result<(StateSpaceModel, Option<String>)> {
    let doc: ModelDocument = parse_json(text)?;
    let sys = doc.to_model()?;
    Ok((sys, doc.label))
}

pub fn model_to_string(sys: &StateSpaceModel, label: Option<&str>) -> Result<String> {
    to_pretty(&ModelDocument::from_model(sys, label.map(str::to_string)))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(StateSpaceModel, Option<String>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

pub fn save_model(path: impl AsRef<Path>, sys: &StateSpaceModel, label: Option<&str>) -> Result<()> {
    write_text(path.as_ref(), &model_to_string(sys, label)?)
}

/// On-disk form of a sampled multichannel input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalDocument {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    pub channels: usize,
    pub values: Vec<Vec<f64>>,
}

/// Samples `values[k]` taken at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub times: Vec<f64>,
    pub values: Vec<DVector<f64>>,
}

impl Signal {
    /// Common spacing when the samples are uniform to `1e-9` relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let dt = (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64;
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt);
        uniform.then_some(dt)
    }

    pub fn channels(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }
}

impl SignalDocument {
    pub fn to_signal(&self) -> Result<Signal> {
        if self.schema_version != SIGNAL_SCHEMA {
            return Err(Error::validation(
                "schema_version",
                format!("expected \"{SIGNAL_SCHEMA}\", found \"{}\"", self.schema_version),
            ));
        }
        if self.channels == 0 {
            return Err(Error::validation("channels", "must be at least 1"));
        }
        if self.values.is_empty() {
            return Err(Error::validation("values", "needs at least one sample"));
        }
        for (k, row) in self.values.iter().enumerate() {
            if row.len() != self.channels {
                return Err(Error::validation(
                    format!("values[{k}]"),
                    format!("expected {} channels, found {}", self.channels, row.len()),
                ));
            }
        }
        let len = self.values.len();
        let times = match (self.dt, &self.times) {
            (Some(dt), None) => {
                if !(dt > 0.0) || !dt.is_finite() {
                    return Err(Error::validation("dt", format!("must be positive, found {dt}")));
                }
                (0..len).map(|k| k as f64 * dt).collect()
            }
            (None, Some(times)) => {
                if times.len() != len {
                    return Err(Error::validation(
                        "times",
                        format!("{} times for {len} samples", times.len()),
                    ));
                }
                if times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::validation("times", "must be strictly increasing"));
                }
                times.clone()
            }
            _ => return Err(Error::validation("dt", "give exactly one of `dt` and `times`")),
        };
        Ok(Signal {
            times,
            values: self.values.iter().map(|r| DVector::from_column_slice(r)).collect(),
        })
    }
}

pub fn parse_signal(text: &str) -> Result<Signal> {
    let doc: SignalDocument = parse_json(text)?;
    doc.to_signal()
}

pub fn load_signal(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_signal(&text)
}

pub fn signal_to_string(dt: f64, values: &[DVector<f64>]) -> Result<String> {
    let channels = values.first().map_or(0, |v| v.len());
    to_pretty(&SignalDocument {
        schema_version: SIGNAL_SCHEMA.to_string(),
        dt: Some(dt),
        times: None,
        channels,
        values: values.iter().map(|v| v.iter().copied().collect()).collect(),
    })
}

/// Pretty JSON with a trailing newline; key order follows the struct.
pub fn report_to_string<T: Serialize>(report: &T) -> Result<String> {
    to_pretty(report)
}

pub fn save_report<T: Serialize>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &report_to_string(report)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
