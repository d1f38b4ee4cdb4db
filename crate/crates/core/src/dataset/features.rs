//! FMX1 feature files and CSV import.
//!
//! ```text
//! "FMX1"  u32 version  u32 n  u32 d  u32 m
//! m × (u32 byte length, UTF-8 class name)
//! y  n   u32        (omitted when m = 0: unlabeled features)
//! X  n·d f32        (row-major)
//! ```
//! Little-endian throughout.

use std::path::Path;

use super::DatasetError;
use crate::binio::{len_u32, FormatError, Reader, Writer};
use crate::elm::LabeledFeatureSet;
use crate::linalg::DenseMatrix;

pub const FEATURES_MAGIC: &[u8; 4] = b"FMX1";
pub const FEATURES_VERSION: u32 = 1;

/// Contents of a feature file, with or without labels.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureData {
    Labeled(LabeledFeatureSet),
    Unlabeled(DenseMatrix<f32>),
}

impl FeatureData {
    pub fn features(&self) -> &DenseMatrix<f32> {
        match self {
            FeatureData::Labeled(s) => s.features(),
            FeatureData::Unlabeled(x) => x,
        }
    }

    pub fn labeled(&self) -> Option<&LabeledFeatureSet> {
        match self {
            FeatureData::Labeled(s) => Some(s),
            FeatureData::Unlabeled(_) => None,
        }
    }
}

fn header(w: &mut Writer, n: usize, d: usize, m: usize) -> Result<(), FormatError> {
    w.bytes(FEATURES_MAGIC);
    w.u32(FEATURES_VERSION);
    w.u32(len_u32(n, "row count")?);
    w.u32(len_u32(d, "feature dimension")?);
    w.u32(len_u32(m, "class count")?);
    Ok(())
}

pub fn features_to_bytes(data: &FeatureData) -> Result<Vec<u8>, FormatError> {
    let mut w = Writer::default();
    let x = data.features();
    match data {
        FeatureData::Labeled(set) => {
            if set.num_classes() == 0 {
                return Err(FormatError::Invalid {
                    what: "class count",
                    detail: "labeled features need at least one class".into(),
                });
            }
            header(&mut w, x.rows(), x.cols(), set.num_classes())?;
            for name in set.class_names() {
                w.string(name);
            }
            for &y in set.labels() {
                w.u32(len_u32(y, "label")?);
            }
        }
        FeatureData::Unlabeled(_) => header(&mut w, x.rows(), x.cols(), 0)?,
    }
    w.f32s(x.as_slice());
    Ok(w.buf)
}

pub fn features_from_bytes(bytes: &[u8]) -> Result<FeatureData, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(FEATURES_MAGIC)?;
    r.version(FEATURES_VERSION)?;
    let n = r.u32("row count")? as usize;
    let d = r.u32("feature dimension")? as usize;
    let m = r.u32("class count")? as usize;
    let mut names = Vec::with_capacity(m.min(1 << 16));
    for _ in 0..m {
        names.push(r.string("class name")?);
    }
    let labels = if m > 0 {
        Some(r.u32_block(n, "labels")?)
    } else {
        None
    };
    let values = r.f32_block(n.saturating_mul(d), "feature values")?;
    r.finish()?;
    let x = DenseMatrix::new(n, d, values).map_err(|e| FormatError::Invalid {
        what: "feature values",
        detail: e.to_string(),
    })?;
    Ok(match labels {
        Some(y) => FeatureData::Labeled(
            LabeledFeatureSet::new(x, y.into_iter().map(|v| v as usize).collect(), names).map_err(
                |e| FormatError::Invalid {
                    what: "labels",
                    detail: e.to_string(),
                },
            )?,
        ),
        None => FeatureData::Unlabeled(x),
    })
}

fn format_err(path: &Path) -> impl FnOnce(FormatError) -> DatasetError + '_ {
    move |source| DatasetError::Format {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_feature_data(path: impl AsRef<Path>, data: &FeatureData) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let bytes = features_to_bytes(data).map_err(format_err(path))?;
    std::fs::write(path, bytes).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_features(path: impl AsRef<Path>, set: &LabeledFeatureSet) -> Result<(), DatasetError> {
    write_feature_data(path, &FeatureData::Labeled(set.clone()))
}

/// Reads an FMX1 file, or imports a CSV when the path ends in `.csv`.
pub fn read_feature_data(path: impl AsRef<Path>) -> Result<FeatureData, DatasetError> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        return import_csv(path);
    }
    let bytes = std::fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    features_from_bytes(&bytes).map_err(format_err(path))
}

/// Like [`read_feature_data`] but requires labels.
pub fn read_features(path: impl AsRef<Path>) -> Result<LabeledFeatureSet, DatasetError> {
    let path = path.as_ref();
    match read_feature_data(path)? {
        FeatureData::Labeled(set) => Ok(set),
        FeatureData::Unlabeled(_) => Err(DatasetError::Unlabeled(path.to_path_buf())),
    }
}

/// Sorts class names numerically when all of them are integers.
fn order_classes(mut names: Vec<String>) -> Vec<String> {
    names.sort();
    names.dedup();
    if names.iter().all(|n| n.parse::<i64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<i64>().unwrap());
    }
    names
}

/// Imports `f1,f2,…[,label]` CSV with a header row. A final column named
/// `label` makes the set labeled; class names are the distinct label values.
pub fn import_csv(path: impl AsRef<Path>) -> Result<FeatureData, DatasetError> {
    let path = path.as_ref();
    let csv_err = |line: u64, detail: String| DatasetError::Csv {
        path: path.to_path_buf(),
        line,
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(0, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_err(1, e.to_string()))?
        .clone();
    let labeled = headers
        .iter()
        .next_back()
        .is_some_and(|h| h.eq_ignore_ascii_case("label"));
    let d = headers.len() - usize::from(labeled);
    if d == 0 {
        return Err(csv_err(1, "no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row as u64 + 2;
        let record = record.map_err(|e| csv_err(line, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(csv_err(
                line,
                format!("{} fields, header has {}", record.len(), headers.len()),
            ));
        }
        for (col, field) in record.iter().take(d).enumerate() {
            let v: f32 = field.parse().map_err(|_| {
                csv_err(
                    line,
                    format!("column {}: {field:?} is not a number", col + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(csv_err(
                    line,
                    format!("column {}: non-finite value", col + 1),
                ));
            }
            values.push(v);
        }
        if labeled {
            raw_labels.push(record[d].to_owned());
        }
    }
    let n = values.len() / d;
    let x = DenseMatrix::new(n, d, values).map_err(|e| csv_err(0, e.to_string()))?;
    if !labeled {
        return Ok(FeatureData::Unlabeled(x));
    }
    let classes = order_classes(raw_labels.clone());
    let y = raw_labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap())
        .collect();
    Ok(FeatureData::Labeled(
        LabeledFeatureSet::new(x, y, classes).map_err(|e| csv_err(0, e.to_string()))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabeledFeatureSet {
        let x = DenseMatrix::from_fn(5, 7, |r, c| (r as f32 - 2.0) * 0.1 + c as f32);
        LabeledFeatureSet::new(
            x,
            vec![0, 1, 2, 1, 0],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.fmx");
        write_features(&path, &sample()).unwrap();
        assert_eq!(read_features(&path).unwrap(), sample());

        let unl = FeatureData::Unlabeled(sample().features().clone());
        let bytes = features_to_bytes(&unl).unwrap();
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 0);
        assert_eq!(features_from_bytes(&bytes).unwrap(), unl);
    }

    #[test]
    fn short_data_is_truncation() {
        // Header claims 3 rows, body carries 2.
        let x = DenseMatrix::from_fn(3, 2, |r, c| (r + c) as f32);
        let set = LabeledFeatureSet::new(x, vec![0, 0, 0], vec!["only".into()]).unwrap();
        let bytes = features_to_bytes(&FeatureData::Labeled(set)).unwrap();
        let cut = &bytes[..bytes.len() - 2 * 4];
        assert!(matches!(
            features_from_bytes(cut),
            Err(FormatError::Truncated {
                what: "feature values",
                ..
            })
        ));
    }

    #[test]
    fn bad_header_and_labels() {
        let bytes = features_to_bytes(&FeatureData::Labeled(sample())).unwrap();
        let mut bad = bytes.clone();
        bad[3] = b'2';
        assert!(matches!(
            features_from_bytes(&bad),
            Err(FormatError::BadMagic { .. })
        ));

        // Label block starts after the header and three 5-byte names.
        let mut bad = bytes;
        let at = 20 + 3 * 5;
        bad[at..at + 4].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            features_from_bytes(&bad),
            Err(FormatError::Invalid { what: "labels", .. })
        ));
    }

    #[test]
    fn csv_import() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(
            &path,
            "f1,f2,label\n1.0,2.0,memo\n3, 4 ,letter\n-1e-3,0,memo\n",
        )
        .unwrap();
        let set = match read_feature_data(&path).unwrap() {
            FeatureData::Labeled(s) => s,
            other => panic!("{other:?}"),
        };
        assert_eq!(set.features().shape(), (3, 2));
        assert_eq!(set.class_names(), &["letter", "memo"]);
        assert_eq!(set.labels(), &[1, 0, 1]);
        assert_eq!(set.features().get(1, 1), 4.0);

        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(
            read_feature_data(&path).unwrap(),
            FeatureData::Unlabeled(_)
        ));
        assert!(matches!(
            read_features(&path),
            Err(DatasetError::Unlabeled(_))
        ));

        std::fs::write(&path, "a,label\n1,x\nfoo,y\n").unwrap();
        match read_feature_data(&path) {
            Err(DatasetError::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let names = order_classes(vec!["10".into(), "2".into(), "1".into(), "2".into()]);
        assert_eq!(names, vec!["1", "2", "10"]);
    }
}
