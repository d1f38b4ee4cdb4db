//! Image corpora, feature files and the stratified partition grid.

mod corpus;
mod features;
mod partition;

use std::path::PathBuf;

use thiserror::Error;

use crate::binio::FormatError;

pub use corpus::{
    load_image, scan_corpus, scan_images, Corpus, CorpusItem, ScanReport, IMAGE_EXTENSIONS,
};
pub use features::{
    features_from_bytes, features_to_bytes, import_csv, read_feature_data, read_features,
    write_feature_data, write_features, FeatureData, FEATURES_MAGIC, FEATURES_VERSION,
};
pub use partition::{
    make_partitions, partition_key, PartitionCell, PartitionPlan, DEFAULT_REPETITIONS,
    DEFAULT_SIZES,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: no class directories found", .0.display())]
    NoClasses(PathBuf),
    #[error("class {class:?} ({}) contains no images", dir.display())]
    EmptyClass { class: String, dir: PathBuf },
    #[error("{}: no image files found", .0.display())]
    NoImages(PathBuf),
    #[error("{}: cannot decode image: {detail}", path.display())]
    Decode { path: PathBuf, detail: String },
    #[error("invalid partition grid: {0}")]
    InvalidGrid(String),
    #[error("item {index} has label {label}, but only {classes} classes exist")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        classes: usize,
    },
    #[error("class {class:?} has {available} items, {requested} requested for training")]
    InsufficientSamples {
        class: String,
        available: usize,
        requested: usize,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{}:{line}: {detail}", path.display())]
    Csv {
        path: PathBuf,
        line: u64,
        detail: String,
    },
    #[error("{}: features carry no labels", .0.display())]
    Unlabeled(PathBuf),
}
