//! Edge-list parsing and matrix serialization.
//!
//! Edge lists are plain text, one `source target weight` record per line,
//! separated by tabs or spaces. `#` starts a comment. Matrices are written
//! as labelled CSV or JSON. Numbers always use `.` as decimal separator and
//! the shortest representation that parses back to the same `f64`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::chain::StochasticMatrix;
use crate::dsd::DistanceMatrix;
use crate::error::{DsdError, Result};
use crate::graph::WeightedDigraph;
use crate::linalg::DenseMatrix;

/// Row sums of a matrix read with `--matrix` must be within this of one.
pub const MATRIX_INPUT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    pub weight: f64,
    /// 1-based source line.
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeListDocument {
    pub records: Vec<EdgeRecord>,
}

impl EdgeListDocument {
    /// Node labels in order of first appearance.
    pub fn labels(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for r in &self.records {
            for l in [&r.source, &r.target] {
                if seen.insert(l.as_str()) {
                    out.push(l.clone());
                }
            }
        }
        out
    }

    /// Tab-separated text that parses back to the same records.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let _ = writeln!(s, "{}\t{}\t{}", r.source, r.target, r.weight);
        }
        s
    }

    pub fn to_digraph(&self) -> Result<WeightedDigraph> {
        WeightedDigraph::from_labeled_edges(
            self.records
                .iter()
                .map(|r| (r.source.as_str(), r.target.as_str(), r.weight)),
        )
    }
}

pub fn parse_edge_list(text: &str) -> Result<EdgeListDocument> {
    let mut records = Vec::new();
    let mut pairs: HashSet<(String, String)> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [source, target, weight] = fields[..] else {
            return Err(DsdError::Parse {
                line,
                message: format!(
                    "expected 'source target weight', found {} field(s)",
                    fields.len()
                ),
            });
        };
        let weight = f64::from_str(weight).map_err(|_| DsdError::Parse {
            line,
            message: format!("cannot parse weight '{weight}'"),
        })?;
        if !weight.is_finite() {
            return Err(DsdError::Validation {
                line,
                message: format!("weight {weight} is not finite"),
            });
        }
        if weight < 0.0 {
            return Err(DsdError::Validation {
                line,
                message: format!("negative weight {weight}"),
            });
        }
        if !pairs.insert((source.to_string(), target.to_string())) {
            return Err(DsdError::Validation {
                line,
                message: format!("duplicate edge '{source}' -> '{target}'"),
            });
        }
        records.push(EdgeRecord {
            source: source.to_string(),
            target: target.to_string(),
            weight,
            line,
        });
    }
    Ok(EdgeListDocument { records })
}

/// Reads a transition matrix from CSV.
///
/// Accepts either bare numeric rows (states labelled `1..=n`) or the
/// labelled layout produced by [`write_matrix`]: a header of labels after
/// an empty corner cell, then one label-prefixed row per state.
pub fn parse_matrix_csv(text: &str) -> Result<(Vec<String>, StochasticMatrix)> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect()))
        .collect();
    let Some((_, first)) = lines.first() else {
        return Err(DsdError::Parse {
            line: 1,
            message: "empty matrix".into(),
        });
    };
    let labelled = first.first().is_some_and(|c| c.is_empty());
    let (labels, body) = if labelled {
        (
            first[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            &lines[1..],
        )
    } else {
        (
            (1..=first.len()).map(|i| i.to_string()).collect(),
            &lines[..],
        )
    };
    let n = labels.len();
    if body.len() != n {
        return Err(DsdError::Validation {
            line: body.last().map_or(1, |(l, _)| *l),
            message: format!("expected {n} rows, found {}", body.len()),
        });
    }
    let mut data = Vec::with_capacity(n * n);
    for (row_idx, (line, cells)) in body.iter().enumerate() {
        let values = if labelled {
            if cells.first() != Some(&labels[row_idx].as_str()) {
                return Err(DsdError::Validation {
                    line: *line,
                    message: format!("row label should be '{}'", labels[row_idx]),
                });
            }
            &cells[1..]
        } else {
            &cells[..]
        };
        if values.len() != n {
            return Err(DsdError::Parse {
                line: *line,
                message: format!("expected {n} values, found {}", values.len()),
            });
        }
        for v in values {
            let x = f64::from_str(v).map_err(|_| DsdError::Parse {
                line: *line,
                message: format!("cannot parse number '{v}'"),
            })?;
            if !x.is_finite() {
                return Err(DsdError::Validation {
                    line: *line,
                    message: format!("{x} is not finite"),
                });
            }
            data.push(x);
        }
    }
    let m = DenseMatrix::from_vec(n, n, data)?;
    let p = StochasticMatrix::from_approximate(m, MATRIX_INPUT_TOL).map_err(|e| {
        DsdError::Validation {
            line: body[0].0,
            message: e.to_string(),
        }
    })?;
    Ok((labels, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Json,
}

impl FromStr for MatrixFormat {
    type Err = DsdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MatrixFormat::Csv),
            "json" => Ok(MatrixFormat::Json),
            _ => Err(DsdError::Parameter(format!("unknown format '{s}'"))),
        }
    }
}

fn number(x: f64) -> String {
    // Display is locale-independent and round-trips exactly.
    format!("{x}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Serializes `m` with row/column labels. `meta` adds distance metadata to
/// JSON output; CSV carries values only.
pub fn write_matrix(
    m: &DenseMatrix,
    labels: &[String],
    format: MatrixFormat,
    meta: Option<&Map<String, Value>>,
) -> Result<String> {
    if labels.len() != m.rows() || labels.len() != m.cols() {
        return Err(DsdError::Dimension(format!(
            "{} labels for a {}x{} matrix",
            labels.len(),
            m.rows(),
            m.cols()
        )));
    }
    match format {
        MatrixFormat::Csv => {
            let mut s = String::new();
            for l in labels {
                s.push(',');
                s.push_str(&csv_field(l));
            }
            s.push('\n');
            for (label, row) in labels.iter().zip(m.row_iter()) {
                s.push_str(&csv_field(label));
                for &x in row {
                    s.push(',');
                    s.push_str(&number(x));
                }
                s.push('\n');
            }
            Ok(s)
        }
        MatrixFormat::Json => {
            let mut obj = Map::new();
            obj.insert("labels".into(), json!(labels));
            obj.insert("rows".into(), json!(m.to_rows()));
            if let Some(meta) = meta {
                for (k, v) in meta {
                    obj.insert(k.clone(), v.clone());
                }
            }
            Ok(serde_json::to_string_pretty(&Value::Object(obj)).expect("json") + "\n")
        }
    }
}

/// Metadata block for a distance matrix: horizon, `q`, `alpha`, status.
pub fn distance_metadata(d: &DistanceMatrix) -> Map<String, Value> {
    let mut meta = Map::new();
    meta.insert(
        "horizon".into(),
        serde_json::to_value(d.horizon).expect("json"),
    );
    meta.insert("q".into(), d.q.into());
    meta.insert("alpha".into(), json!(d.alpha));
    meta.insert("metric_status".into(), json!(d.metric_status));
    meta
}

pub fn write_distance_matrix(d: &DistanceMatrix, format: MatrixFormat) -> Result<String> {
    write_matrix(&d.d, &d.labels, format, Some(&distance_metadata(d)))
}

/// Parses the labelled CSV layout produced by [`write_matrix`] into a
/// general (not necessarily stochastic) matrix.
pub fn read_labelled_csv(text: &str) -> Result<(Vec<String>, DenseMatrix)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(DsdError::Parse {
            line: 1,
            message: "empty matrix".into(),
        });
    };
    let labels: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let values = line
            .split(',')
            .skip(1)
            .map(|v| {
                f64::from_str(v).map_err(|_| DsdError::Parse {
                    line: i + 1,
                    message: format!("cannot parse number '{v}'"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok((labels, DenseMatrix::from_rows(&rows)?))
}
