use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy, confusion, ConfusionMatrix, EvalError};
use crate::dataset::{PartitionCell, PartitionPlan};
use crate::elm::{train, ElmConfig, LabeledFeatureSet};
use crate::rng::derive_key;

/// Outcome of one `(size, rep)` cell.
///
/// `accuracy` is the mean over the cell's ELM repeats. `confusion` pools all
/// repeats, so it sums to `n_test · elm_accuracies.len()` and its trace ratio
/// equals `accuracy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub size: usize,
    pub rep: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub elm_accuracies: Vec<f64>,
    pub confusion: ConfusionMatrix,
    /// Mean wall time of one `train` call.
    pub train_seconds: f64,
    /// Mean wall time of one prediction pass over the test set.
    pub predict_seconds: f64,
}

impl CellResult {
    pub fn train_seconds_per_image(&self) -> f64 {
        self.train_seconds / self.n_train as f64
    }

    pub fn predict_seconds_per_image(&self) -> f64 {
        self.predict_seconds / self.n_test as f64
    }
}

/// Accuracy statistics over the repetitions of one training size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeAggregate {
    pub size: usize,
    pub reps: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; zero for a single repetition.
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl SizeAggregate {
    pub fn from_accuracies(size: usize, values: &[f64]) -> Self {
        assert!(!values.is_empty(), "no accuracies to aggregate");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        let stddev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            size,
            reps: values.len(),
            mean,
            median,
            stddev,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        }
    }
}

/// Everything produced by [`run_grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub class_names: Vec<String>,
    pub elm: ElmConfig,
    pub elm_repeats: usize,
    pub partition_seed: u64,
    pub cells: Vec<CellResult>,
    pub sizes: Vec<SizeAggregate>,
    pub total_train_seconds: f64,
    pub total_predict_seconds: f64,
}

impl GridReport {
    pub fn aggregate(&self, size: usize) -> Option<&SizeAggregate> {
        self.sizes.iter().find(|a| a.size == size)
    }

    /// Pooled confusion over all cells of the given size.
    pub fn confusion_for_size(&self, size: usize) -> Option<ConfusionMatrix> {
        let mut cells = self.cells.iter().filter(|c| c.size == size);
        let mut pooled = cells.next()?.confusion.clone();
        for c in cells {
            pooled.accumulate(&c.confusion);
        }
        Some(pooled)
    }
}

/// Seed of the `repeat`-th ELM trained in cell `(size, rep)`.
pub fn elm_seed(base: u64, size: usize, rep: usize, repeat: usize) -> u64 {
    base ^ derive_key(0, &[size as u64, rep as u64, repeat as u64])
}

fn run_cell(
    data: &LabeledFeatureSet,
    cell: &PartitionCell,
    config: &ElmConfig,
    elm_repeats: usize,
) -> Result<CellResult, EvalError> {
    let at = |source| EvalError::Cell {
        size: cell.size,
        rep: cell.rep,
        source: Box::new(source),
    };
    if cell.test.is_empty() {
        return Err(at(EvalError::Empty));
    }
    let train_set = data.subset(&cell.train);
    let test_set = data.subset(&cell.test);
    let m = data.num_classes();
    let mut pooled = ConfusionMatrix::zeros(m);
    let mut accs = Vec::with_capacity(elm_repeats);
    let (mut train_s, mut predict_s) = (0.0, 0.0);
    for repeat in 0..elm_repeats {
        let cfg = ElmConfig {
            seed: elm_seed(config.seed, cell.size, cell.rep, repeat),
            ..config.clone()
        };
        let t0 = Instant::now();
        let model = train(&train_set, &cfg).map_err(|e| at(e.into()))?;
        train_s += t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let pred = model
            .predict(test_set.features())
            .map_err(|e| at(e.into()))?;
        predict_s += t0.elapsed().as_secs_f64();
        accs.push(accuracy(&pred, test_set.labels()).map_err(at)?);
        pooled.accumulate(&confusion(&pred, test_set.labels(), m).map_err(at)?);
    }
    let reps = elm_repeats as f64;
    Ok(CellResult {
        size: cell.size,
        rep: cell.rep,
        n_train: cell.train.len(),
        n_test: cell.test.len(),
        accuracy: accs.iter().sum::<f64>() / reps,
        elm_accuracies: accs,
        confusion: pooled,
        train_seconds: train_s / reps,
        predict_seconds: predict_s / reps,
    })
}

/// Trains and evaluates `elm_repeats` ELMs in every cell of `plan`.
///
/// Cells run in parallel; each ELM's seed depends only on its coordinates,
/// so results do not depend on scheduling.
pub fn run_grid(
    data: &LabeledFeatureSet,
    plan: &PartitionPlan,
    config: &ElmConfig,
    elm_repeats: usize,
) -> Result<GridReport, EvalError> {
    if elm_repeats == 0 {
        return Err(EvalError::InvalidConfig(
            "elm_repeats must be at least 1".into(),
        ));
    }
    config.validate()?;
    let n = data.len();
    for cell in plan.cells() {
        if let Some(&i) = cell.train.iter().chain(&cell.test).find(|&&i| i >= n) {
            return Err(EvalError::Cell {
                size: cell.size,
                rep: cell.rep,
                source: Box::new(EvalError::IndexOutOfRange { index: i, len: n }),
            });
        }
    }
    let cells: Vec<CellResult> = plan
        .cells()
        .par_iter()
        .map(|cell| run_cell(data, cell, config, elm_repeats))
        .collect::<Result<_, _>>()?;

    let sizes = plan
        .sizes()
        .iter()
        .map(|&size| {
            let accs: Vec<f64> = cells
                .iter()
                .filter(|c| c.size == size)
                .map(|c| c.accuracy)
                .collect();
            SizeAggregate::from_accuracies(size, &accs)
        })
        .collect();
    let total_train_seconds =
        cells.iter().map(|c| c.train_seconds).sum::<f64>() * elm_repeats as f64;
    let total_predict_seconds =
        cells.iter().map(|c| c.predict_seconds).sum::<f64>() * elm_repeats as f64;
    Ok(GridReport {
        class_names: data.class_names().to_vec(),
        elm: config.clone(),
        elm_repeats,
        partition_seed: plan.seed(),
        cells,
        sizes,
        total_train_seconds,
        total_predict_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_statistics() {
        let a = SizeAggregate::from_accuracies(10, &[0.5, 0.9, 0.7, 0.8]);
        assert!((a.mean - 0.725).abs() < 1e-15);
        assert!((a.median - 0.75).abs() < 1e-15);
        assert_eq!((a.min, a.max), (0.5, 0.9));
        let expect = ((0.225f64.powi(2) + 0.175f64.powi(2) + 0.025f64.powi(2) + 0.075f64.powi(2))
            / 3.0)
            .sqrt();
        assert!((a.stddev - expect).abs() < 1e-15);

        let one = SizeAggregate::from_accuracies(20, &[0.6]);
        assert_eq!((one.mean, one.median, one.stddev), (0.6, 0.6, 0.0));
    }

    #[test]
    fn seeds_differ_by_coordinate() {
        let s = elm_seed(7, 10, 0, 0);
        assert_ne!(s, elm_seed(7, 10, 0, 1));
        assert_ne!(s, elm_seed(7, 10, 1, 0));
        assert_ne!(s, elm_seed(7, 20, 0, 0));
        assert_eq!(s, elm_seed(7, 10, 0, 0));
    }
}
