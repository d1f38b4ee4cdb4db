//! ELM1 model files.
//!
//! ```text
//! "ELM1"  u32 version  u64 seed  u32 N  u32 d  u32 m  u8 activation  f64 C
//! W      N·d f64   (row-major, one row per hidden node)
//! b      N   f64
//! B      N·m f64   (row-major)
//! mean   d   f64
//! std    d   f64
//! m × (u32 byte length, UTF-8 class name)
//! ```
//! All integers and floats are little-endian.

use std::path::Path;

use super::{Activation, ElmModel, HiddenLayer, Standardizer};
use crate::binio::{self, len_u32, FileError, FormatError, Reader, Writer};
use crate::linalg::DenseMatrix;

pub const MODEL_MAGIC: &[u8; 4] = b"ELM1";
pub const MODEL_VERSION: u32 = 1;

pub fn model_to_bytes(model: &ElmModel) -> Result<Vec<u8>, FormatError> {
    let hidden = model.hidden();
    let mut w = Writer::default();
    w.bytes(MODEL_MAGIC);
    w.u32(MODEL_VERSION);
    w.u64(hidden.seed());
    w.u32(len_u32(hidden.hidden_nodes(), "hidden node count")?);
    w.u32(len_u32(hidden.input_dim(), "input dimension")?);
    w.u32(len_u32(model.num_classes(), "class count")?);
    w.u8(hidden.activation().tag());
    w.f64(model.c());
    w.f64s(hidden.weights().as_slice());
    w.f64s(hidden.biases());
    w.f64s(model.output_weights().as_slice());
    w.f64s(model.scaler().mean());
    w.f64s(model.scaler().std());
    for name in model.class_names() {
        w.string(name);
    }
    Ok(w.buf)
}

fn invalid(what: &'static str, detail: impl ToString) -> FormatError {
    FormatError::Invalid {
        what,
        detail: detail.to_string(),
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<ElmModel, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MODEL_MAGIC)?;
    r.version(MODEL_VERSION)?;
    let seed = r.u64("seed")?;
    let n_hidden = r.u32("hidden node count")? as usize;
    let d = r.u32("input dimension")? as usize;
    let m = r.u32("class count")? as usize;
    let tag = r.u8("activation")?;
    let activation =
        Activation::from_tag(tag).ok_or_else(|| invalid("activation", format!("tag {tag}")))?;
    let c = r.f64("regularization")?;

    let weights = r.f64_block(n_hidden.saturating_mul(d), "hidden weights")?;
    let biases = r.f64_block(n_hidden, "hidden biases")?;
    let output = r.f64_block(n_hidden.saturating_mul(m), "output weights")?;
    let mean = r.f64_block(d, "feature mean")?;
    let std = r.f64_block(d, "feature std")?;
    let mut class_names = Vec::with_capacity(m.min(1 << 16));
    for _ in 0..m {
        class_names.push(r.string("class name")?);
    }
    r.finish()?;

    let weights =
        DenseMatrix::new(n_hidden, d, weights).map_err(|e| invalid("hidden weights", e))?;
    let output = DenseMatrix::new(n_hidden, m, output).map_err(|e| invalid("output weights", e))?;
    let hidden = HiddenLayer::from_parts(weights, biases, activation, seed)
        .map_err(|e| invalid("hidden layer", e))?;
    if mean.iter().any(|v| !v.is_finite()) {
        return Err(invalid("feature mean", "non-finite entry"));
    }
    let scaler = Standardizer::from_parts(mean, std).map_err(|e| invalid("feature std", e))?;
    ElmModel::from_parts(hidden, output, c, class_names, scaler).map_err(|e| invalid("model", e))
}

pub fn write_model(path: impl AsRef<Path>, model: &ElmModel) -> Result<(), FileError> {
    let path = path.as_ref();
    let bytes = binio::tag_path(path, model_to_bytes(model))?;
    binio::write_file(path, &bytes)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ElmModel, FileError> {
    let path = path.as_ref();
    let bytes = binio::read_file(path)?;
    binio::tag_path(path, model_from_bytes(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elm::{train, ElmConfig, LabeledFeatureSet};

    fn small_model() -> ElmModel {
        let x = DenseMatrix::from_fn(6, 3, |r, c| ((r * 3 + c) % 5) as f32 - 2.0);
        let data = LabeledFeatureSet::new(
            x,
            vec![0, 1, 2, 0, 1, 2],
            vec!["letter".into(), "memo".into(), "résumé".into()],
        )
        .unwrap();
        train(
            &data,
            &ElmConfig {
                hidden: 4,
                c: 2.5,
                seed: 77,
                ..ElmConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = model_to_bytes(&small_model()).unwrap();
        assert_eq!(&bytes[0..4], b"ELM1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 77);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 3);
        assert_eq!(bytes[28], 0);
        assert_eq!(f64::from_le_bytes(bytes[29..37].try_into().unwrap()), 2.5);
        let body = 8 * (4 * 3 + 4 + 4 * 3 + 3 + 3);
        let names = 3 * 4 + "letter".len() + "memo".len() + "résumé".len();
        assert_eq!(bytes.len(), 37 + body + names);
    }

    #[test]
    fn round_trip_is_exact() {
        let model = small_model();
        let bytes = model_to_bytes(&model).unwrap();
        let back = model_from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(model_to_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn every_truncation_is_typed() {
        let bytes = model_to_bytes(&small_model()).unwrap();
        for len in 0..bytes.len() {
            let err = model_from_bytes(&bytes[..len]).unwrap_err();
            assert!(
                matches!(err, FormatError::Truncated { .. }),
                "len {len}: {err:?}"
            );
        }
    }

    #[test]
    fn corrupted_fields_are_rejected() {
        let good = model_to_bytes(&small_model()).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(
            model_from_bytes(&bad),
            Err(FormatError::BadMagic { .. })
        ));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(
            model_from_bytes(&bad),
            Err(FormatError::UnsupportedVersion { found: 9, .. })
        ));

        let mut bad = good.clone();
        bad[28] = 7;
        assert!(matches!(
            model_from_bytes(&bad),
            Err(FormatError::Invalid {
                what: "activation",
                ..
            })
        ));

        let mut bad = good.clone();
        bad[29..37].copy_from_slice(&(-1.0f64).to_le_bytes());
        assert!(matches!(
            model_from_bytes(&bad),
            Err(FormatError::Invalid { .. })
        ));

        let mut bad = good.clone();
        bad[37..45].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            model_from_bytes(&bad),
            Err(FormatError::Invalid { .. })
        ));

        let mut bad = good;
        bad.push(0);
        assert!(matches!(
            model_from_bytes(&bad),
            Err(FormatError::TrailingBytes { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.elm");
        let model = small_model();
        write_model(&path, &model).unwrap();
        assert_eq!(read_model(&path).unwrap(), model);
        let missing = read_model(dir.path().join("nope.elm")).unwrap_err();
        assert!(matches!(missing, FileError::Io { .. }));
        assert!(missing.to_string().contains("nope.elm"));
    }
}
