//! Accuracy, confusion matrices and the partition-grid experiment runner.

mod grid;
mod metrics;
mod report;

use thiserror::Error;

use crate::elm::ElmError;

pub use grid::{elm_seed, run_grid, CellResult, GridReport, SizeAggregate};
pub use metrics::{accuracy, confusion, ConfusionMatrix};
pub use report::{emit_report, parse_json_report, ReportFormat, CSV_COLUMNS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predictions} predictions for {truth} true labels")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("nothing to evaluate: empty label list")]
    Empty,
    #[error("entry {index} has class {label}, but only {classes} classes exist")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        classes: usize,
    },
    #[error("index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cell (size {size}, rep {rep}): {source}")]
    Cell {
        size: usize,
        rep: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("malformed report: {0}")]
    Report(String),
    #[error(transparent)]
    Elm(#[from] ElmError),
}
