//! EFW1 network files.
//!
//! ```text
//! "EFW1"  u32 version  u32 layer_count  u32 flags
//! u32 in_channels  u32 in_height  u32 in_width
//! f32 × in_channels                     per-channel mean
//! layer_count × layer
//! [f32 × in_channels·in_height·in_width] mean image, present iff flags & 1
//! ```
//!
//! Each layer starts with a `u8` kind tag:
//!
//! | tag | kind    | fields                                                    |
//! |-----|---------|-----------------------------------------------------------|
//! | 0   | conv    | u32 in, out, kernel, stride, pad, groups; f32 weights     |
//! |     |         | `[out][in/groups][kernel][kernel]`; f32 bias `[out]`      |
//! | 1   | relu    | none                                                      |
//! | 2   | maxpool | u32 kernel, stride                                        |
//! | 3   | lrn     | u32 local_size; f32 alpha, beta, k                        |
//!
//! Everything is little-endian.

use std::path::Path;

use super::{ConvLayer, FeatxError, LayerError, LayerSpec, LrnLayer, NetSpec, PoolLayer, Tensor3};
use crate::binio::{len_u32, FormatError, Reader, Writer};

pub const NETSPEC_MAGIC: &[u8; 4] = b"EFW1";
pub const NETSPEC_VERSION: u32 = 1;

const FLAG_MEAN_IMAGE: u32 = 1;

const TAG_CONV: u8 = 0;
const TAG_RELU: u8 = 1;
const TAG_MAXPOOL: u8 = 2;
const TAG_LRN: u8 = 3;

pub fn netspec_to_bytes(net: &NetSpec) -> Result<Vec<u8>, FormatError> {
    let mut w = Writer::default();
    w.bytes(NETSPEC_MAGIC);
    w.u32(NETSPEC_VERSION);
    w.u32(len_u32(net.layers().len(), "layer count")?);
    w.u32(if net.mean_image().is_some() {
        FLAG_MEAN_IMAGE
    } else {
        0
    });
    let (c, h, wd) = net.input_shape();
    for v in [c, h, wd] {
        w.u32(len_u32(v, "input shape")?);
    }
    w.f32s(net.mean_channel());
    for layer in net.layers() {
        match layer {
            LayerSpec::Conv(conv) => {
                w.u8(TAG_CONV);
                for v in [
                    conv.in_channels(),
                    conv.out_channels(),
                    conv.kernel(),
                    conv.stride(),
                    conv.pad(),
                    conv.groups(),
                ] {
                    w.u32(len_u32(v, "conv shape")?);
                }
                w.f32s(conv.weights());
                w.f32s(conv.bias());
            }
            LayerSpec::Relu => w.u8(TAG_RELU),
            LayerSpec::MaxPool(p) => {
                w.u8(TAG_MAXPOOL);
                w.u32(len_u32(p.kernel, "pool kernel")?);
                w.u32(len_u32(p.stride, "pool stride")?);
            }
            LayerSpec::Lrn(l) => {
                w.u8(TAG_LRN);
                w.u32(len_u32(l.local_size, "lrn size")?);
                w.f32(l.alpha);
                w.f32(l.beta);
                w.f32(l.k);
            }
        }
    }
    if let Some(mean) = net.mean_image() {
        w.f32s(mean.as_slice());
    }
    Ok(w.buf)
}

fn layer_error(index: usize, kind: &'static str) -> impl Fn(LayerError) -> FeatxError {
    move |source| FeatxError::Layer {
        index,
        kind,
        source,
    }
}

/// Parses and validates an EFW1 image. Encoding problems surface as
/// [`FeatxError::Encoding`], shape problems as [`FeatxError::Layer`].
pub fn netspec_from_bytes(bytes: &[u8]) -> Result<NetSpec, FeatxError> {
    let mut r = Reader::new(bytes);
    r.magic(NETSPEC_MAGIC)?;
    r.version(NETSPEC_VERSION)?;
    let count = r.u32("layer count")? as usize;
    let flags = r.u32("flags")?;
    if flags & !FLAG_MEAN_IMAGE != 0 {
        return Err(FormatError::Invalid {
            what: "flags",
            detail: format!("unknown bits {flags:#x}"),
        }
        .into());
    }
    let c = r.u32("input channels")? as usize;
    let h = r.u32("input height")? as usize;
    let w = r.u32("input width")? as usize;
    let mean_channel = r.f32_block(c, "mean channel values")?;

    let mut layers = Vec::with_capacity(count.min(1024));
    for index in 0..count {
        let tag = r.u8("layer tag")?;
        let layer = match tag {
            TAG_CONV => {
                let mut dims = [0usize; 6];
                for d in &mut dims {
                    *d = r.u32("conv shape")? as usize;
                }
                let [cin, cout, k, stride, pad, groups] = dims;
                let wcount = if groups == 0 || cin % groups != 0 {
                    // Parameters are invalid; report that before reading weights.
                    return Err(layer_error(index, "conv")(LayerError::Invalid(format!(
                        "{cin} input channels not divisible by {groups} groups"
                    ))));
                } else {
                    cout.checked_mul(cin / groups)
                        .and_then(|v| v.checked_mul(k))
                        .and_then(|v| v.checked_mul(k))
                        .ok_or(FormatError::Invalid {
                            what: "conv shape",
                            detail: "weight count overflows".into(),
                        })?
                };
                let weights = r.f32_block(wcount, "conv weights")?;
                let bias = r.f32_block(cout, "conv bias")?;
                LayerSpec::Conv(
                    ConvLayer::new(cin, cout, k, stride, pad, groups, weights, bias)
                        .map_err(layer_error(index, "conv"))?,
                )
            }
            TAG_RELU => LayerSpec::Relu,
            TAG_MAXPOOL => {
                let kernel = r.u32("pool kernel")? as usize;
                let stride = r.u32("pool stride")? as usize;
                LayerSpec::MaxPool(
                    PoolLayer::new(kernel, stride).map_err(layer_error(index, "maxpool"))?,
                )
            }
            TAG_LRN => {
                let size = r.u32("lrn size")? as usize;
                let alpha = r.f32("lrn alpha")?;
                let beta = r.f32("lrn beta")?;
                let k = r.f32("lrn k")?;
                LayerSpec::Lrn(
                    LrnLayer::new(size, alpha, beta, k).map_err(layer_error(index, "lrn"))?,
                )
            }
            other => {
                return Err(FormatError::Invalid {
                    what: "layer tag",
                    detail: format!("layer {index} has unknown kind tag {other}"),
                }
                .into())
            }
        };
        layers.push(layer);
    }
    let mean_image = if flags & FLAG_MEAN_IMAGE != 0 {
        let count = c.saturating_mul(h).saturating_mul(w);
        Some(Tensor3::new(c, h, w, r.f32_block(count, "mean image")?)?)
    } else {
        None
    };
    r.finish()?;
    NetSpec::new((c, h, w), layers, mean_channel, mean_image)
}

pub fn save_netspec(path: impl AsRef<Path>, net: &NetSpec) -> Result<(), FeatxError> {
    let path = path.as_ref();
    let bytes = netspec_to_bytes(net).map_err(|source| FeatxError::Format {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, bytes).map_err(|source| FeatxError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_netspec(path: impl AsRef<Path>) -> Result<NetSpec, FeatxError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| FeatxError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    netspec_from_bytes(&bytes).map_err(|e| match e {
        FeatxError::Encoding(source) => FeatxError::Format {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> NetSpec {
        let conv = ConvLayer::new(
            3,
            2,
            2,
            1,
            0,
            1,
            (0..24).map(|i| i as f32 * 0.25 - 3.0).collect(),
            vec![0.5, -0.5],
        )
        .unwrap();
        NetSpec::new(
            (3, 4, 4),
            vec![
                LayerSpec::Conv(conv),
                LayerSpec::Relu,
                LayerSpec::Lrn(LrnLayer::new(3, 1e-4, 0.75, 1.0).unwrap()),
                LayerSpec::MaxPool(PoolLayer::new(2, 2).unwrap()),
            ],
            vec![104.0, 117.0, 123.0],
            None,
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let net = tiny();
        let bytes = netspec_to_bytes(&net).unwrap();
        assert_eq!(netspec_from_bytes(&bytes).unwrap(), net);

        let with_mean = NetSpec::new(
            (3, 4, 4),
            net.layers().to_vec(),
            net.mean_channel().to_vec(),
            Some(Tensor3::new(3, 4, 4, (0..48).map(|i| i as f32).collect()).unwrap()),
        )
        .unwrap();
        let bytes = netspec_to_bytes(&with_mean).unwrap();
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 1);
        assert_eq!(netspec_from_bytes(&bytes).unwrap(), with_mean);
    }

    #[test]
    fn every_truncation_is_typed() {
        let bytes = netspec_to_bytes(&tiny()).unwrap();
        for len in 0..bytes.len() {
            match netspec_from_bytes(&bytes[..len]) {
                Err(FeatxError::Encoding(FormatError::Truncated { .. })) => {}
                other => panic!("len {len}: {other:?}"),
            }
        }
    }

    #[test]
    fn distinct_error_kinds() {
        let good = netspec_to_bytes(&tiny()).unwrap();
        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"EFW2");
        assert!(matches!(
            netspec_from_bytes(&bad),
            Err(FeatxError::Encoding(FormatError::BadMagic { .. }))
        ));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(
            netspec_from_bytes(&bad),
            Err(FeatxError::Encoding(FormatError::UnsupportedVersion { .. }))
        ));
        let mut bad = good.clone();
        bad[12] = 0x80;
        assert!(matches!(
            netspec_from_bytes(&bad),
            Err(FeatxError::Encoding(FormatError::Invalid {
                what: "flags",
                ..
            }))
        ));
        // First layer tag sits after the 28-byte header and 3 mean floats.
        let mut bad = good;
        bad[40] = 9;
        assert!(matches!(
            netspec_from_bytes(&bad),
            Err(FeatxError::Encoding(FormatError::Invalid {
                what: "layer tag",
                ..
            }))
        ));
    }

    #[test]
    fn conv_channel_mismatch_names_layer_zero() {
        let mut w = Writer::default();
        w.bytes(NETSPEC_MAGIC);
        w.u32(1);
        w.u32(1);
        w.u32(0);
        for v in [3, 8, 8] {
            w.u32(v);
        }
        w.f32s(&[0.0; 3]);
        w.u8(TAG_CONV);
        for v in [4, 1, 1, 1, 0, 1] {
            w.u32(v);
        }
        w.f32s(&[1.0; 4]);
        w.f32s(&[0.0]);
        match netspec_from_bytes(&w.buf) {
            Err(FeatxError::Layer {
                index: 0, source, ..
            }) => {
                assert_eq!(
                    source,
                    LayerError::Channels {
                        expected: 4,
                        found: 3
                    }
                )
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("absent.efw");
        let err = load_netspec(&missing).unwrap_err();
        assert!(matches!(err, FeatxError::Io { .. }));
        assert!(err.to_string().contains("absent.efw"));

        let path = dir.path().join("net.efw");
        save_netspec(&path, &tiny()).unwrap();
        assert_eq!(load_netspec(&path).unwrap(), tiny());
        std::fs::write(&path, b"EFW1").unwrap();
        assert!(matches!(
            load_netspec(&path),
            Err(FeatxError::Format {
                source: FormatError::Truncated { .. },
                ..
            })
        ));
    }
}
