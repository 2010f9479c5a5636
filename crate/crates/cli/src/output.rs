//! CSV rows, per-command summaries and the single writer that puts them on
//! disk.

use std::fs;
use std::io;
use std::path::Path;

use chern_core::metricfield::BasePoint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: [&str; 8] = [
    "x1",
    "y1",
    "x2",
    "y2",
    "quantity",
    "convention",
    "value_re",
    "value_im",
];

/// One CSV line. Aggregate rows leave the coordinates empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub x1: Option<f64>,
    pub y1: Option<f64>,
    pub x2: Option<f64>,
    pub y2: Option<f64>,
    pub quantity: String,
    pub convention: String,
    pub value_re: f64,
    pub value_im: f64,
}

impl Row {
    pub fn at(p: &BasePoint, quantity: impl Into<String>, convention: &str, v: Complex64) -> Row {
        Row {
            x1: Some(p[0]),
            y1: Some(p[1]),
            x2: Some(p[2]),
            y2: Some(p[3]),
            quantity: quantity.into(),
            convention: convention.to_string(),
            value_re: v.re,
            value_im: v.im,
        }
    }

    pub fn aggregate(quantity: impl Into<String>, convention: &str, v: Complex64) -> Row {
        Row {
            x1: None,
            y1: None,
            x2: None,
            y2: None,
            quantity: quantity.into(),
            convention: convention.to_string(),
            value_re: v.re,
            value_im: v.im,
        }
    }

    pub fn real(quantity: impl Into<String>, convention: &str, v: f64) -> Row {
        Self::aggregate(quantity, convention, Complex64::new(v, 0.0))
    }

    pub fn flag(quantity: impl Into<String>, convention: &str, v: bool) -> Row {
        Self::real(quantity, convention, if v { 1.0 } else { 0.0 })
    }

    pub fn is_aggregate(&self) -> bool {
        self.x1.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateValue {
    pub quantity: String,
    pub convention: String,
    pub value_re: f64,
    pub value_im: f64,
}

/// JSON companion of a command's CSV. Numbers appear only as copies of the
/// aggregate rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub exit_code: i32,
    pub findings: Vec<String>,
    pub aggregates: Vec<AggregateValue>,
}

/// Result of one command before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: String,
    pub rows: Vec<Row>,
    pub findings: Vec<String>,
    /// Lines for standard output.
    pub messages: Vec<String>,
    pub exit_code: i32,
}

impl Outcome {
    pub fn new(command: &str) -> Outcome {
        Outcome {
            command: command.to_string(),
            rows: Vec::new(),
            findings: Vec::new(),
            messages: Vec::new(),
            exit_code: 0,
        }
    }

    pub fn summary(&self) -> Summary {
        Summary {
            command: self.command.clone(),
            exit_code: self.exit_code,
            findings: self.findings.clone(),
            aggregates: self
                .rows
                .iter()
                .filter(|r| r.is_aggregate())
                .map(|r| AggregateValue {
                    quantity: r.quantity.clone(),
                    convention: r.convention.clone(),
                    value_re: r.value_re,
                    value_im: r.value_im,
                })
                .collect(),
        }
    }
}

pub fn csv_bytes(rows: &[Row]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>, csv::Error> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().collect()
}

/// Writes `<command>.csv` and `<command>.json` into `dir`.
pub fn write_outcome(dir: &Path, outcome: &Outcome) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let csv = csv_bytes(&outcome.rows).map_err(io::Error::other)?;
    fs::write(dir.join(format!("{}.csv", outcome.command)), csv)?;
    let mut json = serde_json::to_string_pretty(&outcome.summary()).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(dir.join(format!("{}.json", outcome.command)), json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_header_and_empty_aggregate_coordinates() {
        let rows = vec![
            Row::at(
                &[0.0, 0.5, -1.0, 0.25],
                "density",
                "paper",
                Complex64::new(1.5, -0.0),
            ),
            Row::real("integral", "chernweil", 1e-9),
        ];
        let text = String::from_utf8(csv_bytes(&rows).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "x1,y1,x2,y2,quantity,convention,value_re,value_im"
        );
        assert_eq!(lines[1], "0.0,0.5,-1.0,0.25,density,paper,1.5,-0.0");
        assert_eq!(lines[2], ",,,,integral,chernweil,1e-9,0.0");
    }

    #[test]
    fn round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("out");
        let mut o = Outcome::new("probe");
        o.rows.push(Row::at(
            &[1.0, 2.0, 3.0, 4.0],
            "q",
            "",
            Complex64::new(0.1, 0.2),
        ));
        o.rows.push(Row::flag("ok", "", true));
        write_outcome(&dir, &o).unwrap();
        let back = read_csv(&dir.join("probe.csv")).unwrap();
        assert_eq!(back, o.rows);
        let summary: Summary =
            serde_json::from_str(&fs::read_to_string(dir.join("probe.json")).unwrap()).unwrap();
        assert_eq!(summary.aggregates.len(), 1);
    }
}
