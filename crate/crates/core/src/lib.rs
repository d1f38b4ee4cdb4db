//! Document image classification with a fixed convolutional feature
//! extractor and an Extreme Learning Machine trained by ridge regression.
//!
//! The pipeline has four stages, each in its own module:
//!
//! * [`featx`] normalises an image to the network input and runs a
//!   forward-only convolution stack to obtain a feature vector.
//! * [`elm`] maps features through a random sigmoid layer and fits the output
//!   weights in closed form.
//! * [`dataset`] reads image corpora and feature files, and builds the
//!   stratified train/test partition grid.
//! * [`evaluation`] runs the grid and writes accuracy reports.
//!
//! [`linalg`] holds the dense kernels the solver needs and [`synthetic`]
//! generates Gaussian-blob data sets for tests and benchmarks.

pub mod binio;
pub mod dataset;
pub mod elm;
pub mod evaluation;
pub mod featx;
pub mod linalg;
pub mod rng;
pub mod synthetic;

pub use binio::{FileError, FormatError};
pub use dataset::{DatasetError, FeatureData, PartitionPlan};
pub use elm::{
    train, Activation, ElmConfig, ElmError, ElmModel, HiddenLayer, LabeledFeatureSet, Standardizer,
};
pub use evaluation::{EvalError, GridReport, ReportFormat};
pub use featx::{FeatxError, NetSpec, Raster, Tensor3};
pub use linalg::{DenseMatrix, LinalgError};
