use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Decimal text for a float with 17 significant digits; non-finite values
/// become `inf`, `-inf` or `nan`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn float_value(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(Number::from_str(&format_float(v)).expect("formatted float is a JSON number"))
    } else {
        Value::String(format_float(v))
    }
}

pub fn float_array(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|v| float_value(*v)).collect())
}

/// Rewrites every non-integer number in `v` with [`format_float`].
fn normalize_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => *v = float_value(n.as_f64().expect("f64 number")),
        Value::Array(items) => items.iter_mut().for_each(normalize_floats),
        Value::Object(map) => map.values_mut().for_each(normalize_floats),
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(f) => float_value(*f),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format_float(*f),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

/// One report row; column order is kept for CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row(Vec<(&'static str, Cell)>);

impl Row {
    pub fn new() -> Self {
        Row(Vec::new())
    }

    pub fn with(mut self, key: &'static str, value: impl Into<Cell>) -> Self {
        self.0.push((key, value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.0.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    fn json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.to_string(), v.json())).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub verdict: bool,
    /// Probe sets, operators and seeds the verdict depends on.
    pub probes: Value,
    /// Command-specific aggregates.
    pub summary: Map<String, Value>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut config = serde_json::to_value(&self.config).expect("config serializes");
        normalize_floats(&mut config);
        let mut top = Map::new();
        top.insert("command".into(), Value::String(self.config.command.name().into()));
        top.insert("config".into(), config);
        top.insert("rows".into(), Value::Array(self.rows.iter().map(Row::json).collect()));
        top.insert("verdict".into(), Value::String(if self.verdict { "pass" } else { "fail" }.into()));
        top.insert("probes".into(), self.probes.clone());
        if !self.summary.is_empty() {
            top.insert("summary".into(), Value::Object(self.summary.clone()));
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(top)).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let internal = |e: csv::Error| CliError::Internal(format!("csv: {e}"));
        if let Some(first) = self.rows.first() {
            w.write_record(first.0.iter().map(|(k, _)| *k)).map_err(internal)?;
        }
        for row in &self.rows {
            w.write_record(row.0.iter().map(|(_, v)| v.csv())).map_err(internal)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Internal(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn floats_have_17_significant_digits() {
        assert_eq!(format_float(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(float_value(f64::NEG_INFINITY), Value::String("-inf".into()));
        let v = float_value(0.1);
        assert_eq!(serde_json::to_string(&v).unwrap(), "1.0000000000000001e-1");
        let back: f64 = serde_json::from_str("1.0000000000000001e-1").unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn normalization_leaves_integers_alone() {
        let mut v = serde_json::json!({"a": 3, "b": [0.5, 2], "c": {"d": 1e-3}});
        normalize_floats(&mut v);
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"a":3,"b":[5.0000000000000000e-1,2],"c":{"d":1.0000000000000000e-3}}"#
        );
    }

    #[test]
    fn csv_has_header_and_ordered_columns() {
        let report = Report {
            config: ExperimentConfig::new(Command::Converge),
            rows: vec![
                Row::new().with("n", 2usize).with("x", 0.25).with("ok", true),
                Row::new().with("n", 4usize).with("x", None::<f64>).with("ok", false),
            ],
            verdict: true,
            probes: Value::Null,
            summary: Map::new(),
        };
        assert_eq!(report.to_csv().unwrap(), "n,x,ok\n2,2.5000000000000000e-1,true\n4,,false\n");
        let json = report.to_json();
        assert!(json.contains(r#""verdict": "pass""#));
        assert!(json.contains(r#""command": "converge""#));
    }
}
