use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: pred.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Square count matrix, rows indexed by true class, columns by prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`; `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.trace() as f64 / total as f64)
    }

    /// Elementwise sum; both matrices must have the same class count.
    pub fn accumulate(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.classes(), other.classes(), "class count mismatch");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// One line per true class, counts right-aligned and space separated.
    pub fn render(&self) -> String {
        let width = self
            .counts
            .iter()
            .flatten()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1);
        let mut out = String::new();
        for row in &self.counts {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>width$}")).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
        out
    }
}

/// Counts of (truth, prediction) pairs.
pub fn confusion(
    pred: &[usize],
    truth: &[usize],
    classes: usize,
) -> Result<ConfusionMatrix, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: pred.len(),
            truth: truth.len(),
        });
    }
    let mut m = ConfusionMatrix::zeros(classes);
    for (index, (&p, &t)) in pred.iter().zip(truth).enumerate() {
        let bad = if t >= classes {
            Some(t)
        } else if p >= classes {
            Some(p)
        } else {
            None
        };
        if let Some(label) = bad {
            return Err(EvalError::LabelOutOfRange {
                index,
                label,
                classes,
            });
        }
        m.counts[t][p] += 1;
    }
    Ok(m)
}
