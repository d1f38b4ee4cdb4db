//! Extreme Learning Machine: a random, frozen hidden layer followed by output
//! weights fitted in closed form by ridge regression.
//!
//! With hidden responses `H` (n×N, one row per sample) and one-hot targets `T`
//! (n×m), training minimises `C/2 ‖T − HB‖² + 1/2 ‖B‖²`, whose optimum solves
//! the SPD system `(HᵀH + I/C) B = HᵀT`.

mod format;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    gram, matmul, matmul_transpose, spd_solve, transpose_matmul, DenseMatrix, LinalgError, Scalar,
};
use crate::rng;

pub use format::{
    model_from_bytes, model_to_bytes, read_model, write_model, MODEL_MAGIC, MODEL_VERSION,
};

/// Floor applied to per-feature standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElmError {
    #[error("hidden node count must be at least 1")]
    NoHiddenNodes,
    #[error("input dimension must be at least 1")]
    NoInputs,
    #[error("regularization coefficient C must be positive and finite, got {0}")]
    InvalidRegularization(f64),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("class list is empty")]
    NoClasses,
    #[error("sample {index} has label {label}, but only {classes} classes exist")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        classes: usize,
    },
    #[error("{features} feature rows but {labels} labels")]
    LabelCount { features: usize, labels: usize },
    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("feature dimension mismatch: model expects {expected}, input has {found}")]
    FeatureDimension { expected: usize, found: usize },
    #[error("normalization statistics have length {found}, expected {expected}")]
    StatsLength { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Hidden-node nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Relu => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Sigmoid),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            other => Err(format!(
                "unknown activation {other:?} (expected sigmoid or relu)"
            )),
        }
    }
}

/// `g(z)` for the given activation.
#[inline]
pub fn activate(activation: Activation, z: f64) -> f64 {
    activation.apply(z)
}

/// Random input-to-hidden mapping `x ↦ g(Wx + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    weights: DenseMatrix,
    biases: Vec<f64>,
    activation: Activation,
    seed: u64,
}

impl HiddenLayer {
    /// Assembles a layer from explicit parameters.
    pub fn from_parts(
        weights: DenseMatrix,
        biases: Vec<f64>,
        activation: Activation,
        seed: u64,
    ) -> Result<Self, ElmError> {
        if weights.rows() == 0 {
            return Err(ElmError::NoHiddenNodes);
        }
        if weights.cols() == 0 {
            return Err(ElmError::NoInputs);
        }
        if biases.len() != weights.rows() {
            return Err(ElmError::StatsLength {
                expected: weights.rows(),
                found: biases.len(),
            });
        }
        if biases.iter().any(|b| !b.is_finite()) {
            return Err(ElmError::NonFiniteFeature {
                row: 0,
                col: biases.iter().position(|b| !b.is_finite()).unwrap_or(0),
            });
        }
        Ok(Self {
            weights,
            biases,
            activation,
            seed,
        })
    }

    /// `N×d` input weights, one row per hidden node.
    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hidden_nodes(&self) -> usize {
        self.weights.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Draws `W` (N×d) and `b` (N) uniformly from `[-1, 1)`.
///
/// Element `k` of `W` (row-major) is the `k`-th value of the counter stream
/// keyed by `seed`; bias `i` is value `N·d + i`. Output is independent of the
/// thread count.
pub fn init_hidden(
    input_dim: usize,
    hidden_nodes: usize,
    activation: Activation,
    seed: u64,
) -> Result<HiddenLayer, ElmError> {
    if hidden_nodes == 0 {
        return Err(ElmError::NoHiddenNodes);
    }
    if input_dim == 0 {
        return Err(ElmError::NoInputs);
    }
    let mut w = vec![0.0; hidden_nodes * input_dim];
    w.par_chunks_mut(input_dim)
        .enumerate()
        .for_each(|(r, row)| {
            let base = (r * input_dim) as u64;
            for (c, v) in row.iter_mut().enumerate() {
                *v = rng::symmetric_f64(seed, base + c as u64);
            }
        });
    let offset = (hidden_nodes * input_dim) as u64;
    let biases = (0..hidden_nodes as u64)
        .map(|i| rng::symmetric_f64(seed, offset + i))
        .collect();
    Ok(HiddenLayer {
        weights: DenseMatrix::new(hidden_nodes, input_dim, w)?,
        biases,
        activation,
        seed,
    })
}

/// Per-feature z-score statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    /// Mean and population standard deviation of each column, with the
    /// deviation floored at [`STD_FLOOR`].
    pub fn fit<S: Scalar>(x: &DenseMatrix<S>) -> Self {
        let (n, d) = x.shape();
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v.to_f64();
            }
        }
        let inv = if n > 0 { 1.0 / n as f64 } else { 0.0 };
        mean.iter_mut().for_each(|m| *m *= inv);
        let mut var = vec![0.0; d];
        for r in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                let dv = v.to_f64() - m;
                *s += dv * dv;
            }
        }
        let std = var
            .into_iter()
            .map(|s| (s * inv).sqrt().max(STD_FLOOR))
            .collect();
        Self { mean, std }
    }

    /// Zero mean, unit deviation: a no-op transform.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn from_parts(mean: Vec<f64>, std: Vec<f64>) -> Result<Self, ElmError> {
        if mean.len() != std.len() {
            return Err(ElmError::StatsLength {
                expected: mean.len(),
                found: std.len(),
            });
        }
        if let Some(col) = std.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(ElmError::NonFiniteFeature { row: 0, col });
        }
        Ok(Self { mean, std })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }
}

/// Hidden responses `H`, row `j` being `g(W x̂_j + b)` with
/// `x̂_j = (x_j − mean) / std`.
pub fn hidden_map<S: Scalar>(
    hidden: &HiddenLayer,
    x: &DenseMatrix<S>,
    mean: &[f64],
    std: &[f64],
) -> Result<DenseMatrix, ElmError> {
    let d = hidden.input_dim();
    if x.cols() != d {
        return Err(ElmError::FeatureDimension {
            expected: d,
            found: x.cols(),
        });
    }
    for stats in [mean, std] {
        if stats.len() != d {
            return Err(ElmError::StatsLength {
                expected: d,
                found: stats.len(),
            });
        }
    }
    let n = x.rows();
    let inv_std: Vec<f64> = std.iter().map(|s| 1.0 / s).collect();
    let mut scaled = vec![0.0; n * d];
    scaled
        .par_chunks_mut(d.max(1))
        .enumerate()
        .try_for_each(|(r, out)| {
            for (c, ((dst, v), (m, is))) in out
                .iter_mut()
                .zip(x.row(r))
                .zip(mean.iter().zip(&inv_std))
                .enumerate()
            {
                let v = v.to_f64();
                if !v.is_finite() {
                    return Err(ElmError::NonFiniteFeature { row: r, col: c });
                }
                *dst = (v - m) * is;
            }
            Ok(())
        })?;
    let scaled = DenseMatrix::from_raw(n, d, scaled);
    let mut h = matmul_transpose(&scaled, &hidden.weights)?;
    let act = hidden.activation;
    let nh = hidden.hidden_nodes();
    h.data_mut().par_chunks_mut(nh).for_each(|row| {
        for (z, b) in row.iter_mut().zip(&hidden.biases) {
            *z = act.apply(*z + b);
        }
    });
    Ok(h)
}

/// One-hot target matrix: row `k` has a 1 in column `labels[k]`.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<DenseMatrix, ElmError> {
    let mut t = vec![0.0; labels.len() * classes];
    for (k, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(ElmError::LabelOutOfRange {
                index: k,
                label: y,
                classes,
            });
        }
        t[k * classes + y] = 1.0;
    }
    Ok(DenseMatrix::from_raw(labels.len(), classes, t))
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Feature matrix with a class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatureSet {
    x: DenseMatrix<f32>,
    y: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledFeatureSet {
    pub fn new(
        x: DenseMatrix<f32>,
        y: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, ElmError> {
        if x.rows() != y.len() {
            return Err(ElmError::LabelCount {
                features: x.rows(),
                labels: y.len(),
            });
        }
        if let Some((index, &label)) = y.iter().enumerate().find(|(_, &l)| l >= class_names.len()) {
            return Err(ElmError::LabelOutOfRange {
                index,
                label,
                classes: class_names.len(),
            });
        }
        Ok(Self { x, y, class_names })
    }

    pub fn features(&self) -> &DenseMatrix<f32> {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn into_parts(self) -> (DenseMatrix<f32>, Vec<usize>, Vec<String>) {
        (self.x, self.y, self.class_names)
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmConfig {
    /// Hidden node count `N`.
    pub hidden: usize,
    /// Trade-off coefficient `C`; larger means weaker regularization.
    pub c: f64,
    pub activation: Activation,
    /// Z-score features with training statistics before the hidden map.
    pub normalize: bool,
    pub seed: u64,
}

impl Default for ElmConfig {
    fn default() -> Self {
        Self {
            hidden: 2000,
            c: 1.0,
            activation: Activation::Sigmoid,
            normalize: true,
            seed: 0,
        }
    }
}

impl ElmConfig {
    pub fn validate(&self) -> Result<(), ElmError> {
        if self.hidden == 0 {
            return Err(ElmError::NoHiddenNodes);
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(ElmError::InvalidRegularization(self.c));
        }
        Ok(())
    }
}

/// A trained, immutable classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    hidden: HiddenLayer,
    output_weights: DenseMatrix,
    c: f64,
    class_names: Vec<String>,
    scaler: Standardizer,
}

impl ElmModel {
    pub fn from_parts(
        hidden: HiddenLayer,
        output_weights: DenseMatrix,
        c: f64,
        class_names: Vec<String>,
        scaler: Standardizer,
    ) -> Result<Self, ElmError> {
        if output_weights.rows() != hidden.hidden_nodes() {
            return Err(LinalgError::DimensionMismatch {
                op: "output weights",
                left: hidden.weights.shape(),
                right: output_weights.shape(),
            }
            .into());
        }
        if output_weights.cols() != class_names.len() {
            return Err(ElmError::StatsLength {
                expected: output_weights.cols(),
                found: class_names.len(),
            });
        }
        if class_names.is_empty() {
            return Err(ElmError::NoClasses);
        }
        if scaler.mean.len() != hidden.input_dim() {
            return Err(ElmError::StatsLength {
                expected: hidden.input_dim(),
                found: scaler.mean.len(),
            });
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(ElmError::InvalidRegularization(c));
        }
        Ok(Self {
            hidden,
            output_weights,
            c,
            class_names,
            scaler,
        })
    }

    pub fn hidden(&self) -> &HiddenLayer {
        &self.hidden
    }

    /// `N×m` output weights `B`.
    pub fn output_weights(&self) -> &DenseMatrix {
        &self.output_weights
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn scaler(&self) -> &Standardizer {
        &self.scaler
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.input_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Hidden responses `H` for `x` under this model's normalization.
    pub fn hidden_response<S: Scalar>(&self, x: &DenseMatrix<S>) -> Result<DenseMatrix, ElmError> {
        hidden_map(&self.hidden, x, &self.scaler.mean, &self.scaler.std)
    }

    /// Raw output-layer scores `H B` (n×m).
    pub fn predict_scores<S: Scalar>(&self, x: &DenseMatrix<S>) -> Result<DenseMatrix, ElmError> {
        let h = self.hidden_response(x)?;
        Ok(matmul(&h, &self.output_weights)?)
    }

    /// Arg-max class index per row.
    pub fn predict<S: Scalar>(&self, x: &DenseMatrix<S>) -> Result<Vec<usize>, ElmError> {
        let scores = self.predict_scores(x)?;
        Ok((0..scores.rows()).map(|r| argmax(scores.row(r))).collect())
    }
}

/// Fits an ELM on `data` in closed form.
pub fn train(data: &LabeledFeatureSet, config: &ElmConfig) -> Result<ElmModel, ElmError> {
    config.validate()?;
    if data.is_empty() {
        return Err(ElmError::EmptyTrainingSet);
    }
    if data.num_classes() == 0 {
        return Err(ElmError::NoClasses);
    }
    let x = data.features();
    let d = x.cols();
    if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(ElmError::NonFiniteFeature {
            row: pos / d,
            col: pos % d,
        });
    }
    let hidden = init_hidden(d, config.hidden, config.activation, config.seed)?;
    let scaler = if config.normalize {
        Standardizer::fit(x)
    } else {
        Standardizer::identity(d)
    };
    let h = hidden_map(&hidden, x, &scaler.mean, &scaler.std)?;
    let t = one_hot(data.labels(), data.num_classes())?;
    let system = gram(&h).add_diagonal(1.0 / config.c)?;
    let rhs = transpose_matmul(&h, &t)?;
    let output_weights = spd_solve(&system, &rhs)?;
    Ok(ElmModel {
        hidden,
        output_weights,
        c: config.c,
        class_names: data.class_names().to_vec(),
        scaler,
    })
}
