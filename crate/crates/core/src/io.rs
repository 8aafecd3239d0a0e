//! Model files and CSV tables.
//!
//! Models are stored as JSON with a format tag and a version number. Floats
//! are written in shortest round-trip form, so reading a model back gives
//! bit-identical coefficients. CSV tables write every value with 17
//! significant digits and leave missing values empty.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::approx::SurrogateModel;
use crate::control::ControlTrace;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "lingp-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format: &'a str,
    version: u32,
    model: &'a SurrogateModel,
}

#[derive(Deserialize)]
struct Header {
    format: Option<String>,
    version: Option<u32>,
}

#[derive(Deserialize)]
struct ModelFileIn {
    model: SurrogateModel,
}

pub fn model_to_json(model: &SurrogateModel) -> String {
    serde_json::to_string_pretty(&ModelFileOut { format: MODEL_FORMAT, version: MODEL_VERSION, model })
        .expect("models always serialize")
}

/// Parses a model file, checking the format tag and version before the body.
pub fn model_from_json(text: &str) -> Result<SurrogateModel> {
    let header: Header = serde_json::from_str(text)?;
    match header.format.as_deref() {
        Some(MODEL_FORMAT) => {}
        Some(other) => return Err(Error::Parse(format!("not a model file (format `{other}`)"))),
        None => return Err(Error::Parse("missing field `format`".into())),
    }
    let version = header.version.ok_or_else(|| Error::Parse("missing field `version`".into()))?;
    if version != MODEL_VERSION {
        return Err(Error::UnsupportedVersion { found: version, supported: MODEL_VERSION });
    }
    let file: ModelFileIn = serde_json::from_str(text)?;
    let m = file.model;
    let n = m.spec.len();
    for (field, len) in [("omega_tilde", m.omega_tilde.len()), ("c_hat", m.c_hat.len()), ("coefficients", m.coefficients.len())] {
        if len != n {
            return Err(Error::Parse(format!("field `{field}` has {len} entries, basis has {n}")));
        }
    }
    Ok(m)
}

pub fn write_model(path: &Path, model: &SurrogateModel) -> Result<()> {
    fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<SurrogateModel> {
    model_from_json(&fs::read_to_string(path)?)
}

/// A numeric table with named columns. `NaN` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: Vec<String>) -> Self {
        Table { headers, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// 17 significant digits; integral values print as integers.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.fract() == 0.0 && v.abs() < 1e15 && !(v == 0.0 && v.is_sign_negative()) {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.headers)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| format_value(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut table = Table::new(headers);
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, field)| {
                if field.is_empty() {
                    Ok(f64::NAN)
                } else {
                    field.trim().parse::<f64>().map_err(|e| {
                        Error::Parse(format!("line {line}, column `{}`: {e}", table.headers[j]))
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        table.push(row);
    }
    Ok(table)
}

/// Trace columns: `step, stage, x1..xd, y_hat, y_true, J, bias`.
pub fn trace_table(trace: &ControlTrace) -> Table {
    let d = trace.steps.first().map(|s| s.x.len()).unwrap_or(0);
    let mut headers = vec!["step".to_string(), "stage".to_string()];
    headers.extend((1..=d).map(|i| format!("x{i}")));
    headers.extend(["y_hat", "y_true", "J", "bias"].map(String::from));
    let mut t = Table::new(headers);
    for s in &trace.steps {
        let mut row = vec![s.k as f64, s.stage.number() as f64];
        row.extend(&s.x);
        row.extend([s.y_hat, s.y_true.unwrap_or(f64::NAN), s.cost, s.bias]);
        t.push(row);
    }
    t
}
