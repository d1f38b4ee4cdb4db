use std::fmt;
use std::str::FromStr;

use super::{EvalError, GridReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!(
                "unknown report format {other:?} (expected csv or json)"
            )),
        }
    }
}

/// Column order of the CSV report.
pub const CSV_COLUMNS: [&str; 12] = [
    "kind",
    "size",
    "rep",
    "n_train",
    "n_test",
    "accuracy",
    "mean",
    "median",
    "stddev",
    "train_ms",
    "predict_ms",
    "train_ms_per_image",
];

fn csv_report(report: &GridReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).unwrap();
    for c in &report.cells {
        w.write_record([
            "cell".to_owned(),
            c.size.to_string(),
            c.rep.to_string(),
            c.n_train.to_string(),
            c.n_test.to_string(),
            c.accuracy.to_string(),
            String::new(),
            String::new(),
            String::new(),
            format!("{:.3}", c.train_seconds * 1e3),
            format!("{:.3}", c.predict_seconds * 1e3),
            format!("{:.6}", c.train_seconds_per_image() * 1e3),
        ])
        .unwrap();
    }
    for a in &report.sizes {
        w.write_record([
            "aggregate".to_owned(),
            a.size.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            a.mean.to_string(),
            a.median.to_string(),
            a.stddev.to_string(),
            String::new(),
            String::new(),
            String::new(),
        ])
        .unwrap();
    }
    w.into_inner().expect("writing to memory cannot fail")
}

/// Serialises a report: one CSV row per cell plus one per size aggregate
/// (after a header), or the full nested structure as JSON.
pub fn emit_report(report: &GridReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Csv => csv_report(report),
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report is always serialisable");
            out.push(b'\n');
            out
        }
    }
}

pub fn parse_json_report(bytes: &[u8]) -> Result<GridReport, EvalError> {
    serde_json::from_slice(bytes).map_err(|e| EvalError::Report(e.to_string()))
}
