//! Fixed convolutional feature extractor.
//!
//! An image is resized to the network input (227×227 for the AlexNet stub),
//! replicated to three channels if grayscale, mean-subtracted and pushed
//! through a forward-only conv/ReLU/LRN/max-pool stack. The final tensor is
//! flattened channel-major into the feature vector the ELM consumes.

mod layers;
mod netspec;
mod preprocess;

use rayon::prelude::*;
use thiserror::Error;

use crate::binio::FormatError;
use crate::rng;

pub use layers::{
    conv_forward, lrn_forward, maxpool_forward, relu_forward, ConvLayer, LayerError, LayerSpec,
    LrnLayer, PoolLayer,
};
pub use netspec::{
    load_netspec, netspec_from_bytes, netspec_to_bytes, save_netspec, NETSPEC_MAGIC,
    NETSPEC_VERSION,
};
pub use preprocess::{preprocess, preprocess_with, resize_bilinear, Raster, ResizeMode};

#[derive(Debug, Error)]
pub enum FeatxError {
    #[error("layer {index} ({kind}): {source}")]
    Layer {
        index: usize,
        kind: &'static str,
        #[source]
        source: LayerError,
    },
    #[error("image has zero size ({width}x{height})")]
    EmptyImage { width: usize, height: usize },
    #[error("raster of {width}x{height}x{channels} needs {expected} bytes, got {found}")]
    RasterLength {
        width: usize,
        height: usize,
        channels: usize,
        expected: usize,
        found: usize,
    },
    #[error("cannot map a {found}-channel image onto a {expected}-channel network input")]
    InputChannels { expected: usize, found: usize },
    #[error("tensor of shape {found:?} does not match expected {expected:?}")]
    TensorShape {
        expected: (usize, usize, usize),
        found: (usize, usize, usize),
    },
    #[error("mean has {found} values, expected {expected}")]
    MeanLength { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: std::path::PathBuf,
        #[source]
        source: FormatError,
    },
    #[error(transparent)]
    Encoding(#[from] FormatError),
}

/// Channel-major `f32` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor3 {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f32>,
    ) -> Result<Self, FeatxError> {
        let shape = (channels, height, width);
        if channels * height * width != data.len() {
            return Err(FeatxError::TensorShape {
                expected: shape,
                found: (data.len(), 1, 1),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(FeatxError::NonFinite("tensor"));
        }
        Ok(Self::from_raw(channels, height, width, data))
    }

    pub(crate) fn from_raw(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(channels * height * width, data.len());
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::from_raw(
            channels,
            height,
            width,
            vec![0.0; channels * height * width],
        )
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }
}

/// Mean subtracted from every preprocessed image.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSpec {
    /// One scalar per channel.
    PerChannel(Vec<f32>),
    /// Full per-pixel mean image shaped like the network input.
    Image(Tensor3),
}

/// A validated feature-extraction network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSpec {
    input_shape: (usize, usize, usize),
    layers: Vec<LayerSpec>,
    mean_channel: Vec<f32>,
    mean_image: Option<Tensor3>,
    output_shape: (usize, usize, usize),
}

impl NetSpec {
    /// Checks shape compatibility of the whole layer chain.
    pub fn new(
        input_shape: (usize, usize, usize),
        layers: Vec<LayerSpec>,
        mean_channel: Vec<f32>,
        mean_image: Option<Tensor3>,
    ) -> Result<Self, FeatxError> {
        let (c, h, w) = input_shape;
        if c == 0 || h == 0 || w == 0 {
            return Err(FeatxError::EmptyImage {
                width: w,
                height: h,
            });
        }
        if mean_channel.len() != c {
            return Err(FeatxError::MeanLength {
                expected: c,
                found: mean_channel.len(),
            });
        }
        if mean_channel.iter().any(|v| !v.is_finite()) {
            return Err(FeatxError::NonFinite("mean channel values"));
        }
        if let Some(img) = &mean_image {
            if img.shape() != input_shape {
                return Err(FeatxError::TensorShape {
                    expected: input_shape,
                    found: img.shape(),
                });
            }
        }
        let mut shape = input_shape;
        for (index, layer) in layers.iter().enumerate() {
            shape = layer
                .output_shape(shape)
                .map_err(|source| FeatxError::Layer {
                    index,
                    kind: layer.name(),
                    source,
                })?;
        }
        Ok(Self {
            input_shape,
            layers,
            mean_channel,
            mean_image,
            output_shape: shape,
        })
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    pub fn output_shape(&self) -> (usize, usize, usize) {
        self.output_shape
    }

    pub fn feature_dim(&self) -> usize {
        let (c, h, w) = self.output_shape;
        c * h * w
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn mean_channel(&self) -> &[f32] {
        &self.mean_channel
    }

    pub fn mean_image(&self) -> Option<&Tensor3> {
        self.mean_image.as_ref()
    }

    /// Runs the layer stack on an already preprocessed tensor.
    pub fn forward(&self, input: &Tensor3) -> Result<Tensor3, FeatxError> {
        if input.shape() != self.input_shape {
            return Err(FeatxError::TensorShape {
                expected: self.input_shape,
                found: input.shape(),
            });
        }
        let mut current = input.clone();
        for (index, layer) in self.layers.iter().enumerate() {
            current = layer
                .forward(&current)
                .map_err(|source| FeatxError::Layer {
                    index,
                    kind: layer.name(),
                    source,
                })?;
        }
        Ok(current)
    }

    /// The five-convolution AlexNet stub with seeded random weights.
    ///
    /// Weights are uniform in `±sqrt(3 / fan_in)`, biases zero. Useful for
    /// shape checks and timing; real features need converted pretrained
    /// weights loaded through [`load_netspec`].
    pub fn alexnet_stub(seed: u64, mean_channel: [f32; 3]) -> Self {
        let lrn = || LayerSpec::Lrn(LrnLayer::default());
        let pool = || {
            LayerSpec::MaxPool(PoolLayer {
                kernel: 3,
                stride: 2,
            })
        };
        let convs = [
            // in, out, kernel, stride, pad, groups
            (3, 96, 11, 4, 0, 1),
            (96, 256, 5, 1, 2, 2),
            (256, 384, 3, 1, 1, 1),
            (384, 384, 3, 1, 1, 2),
            (384, 256, 3, 1, 1, 2),
        ];
        let mut conv = convs
            .iter()
            .enumerate()
            .map(|(i, &(cin, cout, k, s, p, g))| {
                let fan_in = (cin / g) * k * k;
                let bound = (3.0 / fan_in as f64).sqrt();
                let key = rng::derive_key(seed, &[i as u64]);
                let weights = (0..(cout * fan_in) as u64)
                    .map(|j| (bound * rng::symmetric_f64(key, j)) as f32)
                    .collect();
                LayerSpec::Conv(
                    ConvLayer::new(cin, cout, k, s, p, g, weights, vec![0.0; cout])
                        .expect("static AlexNet layer parameters are valid"),
                )
            });
        let mut layers = Vec::with_capacity(15);
        layers.extend([conv.next().unwrap(), LayerSpec::Relu, lrn(), pool()]);
        layers.extend([conv.next().unwrap(), LayerSpec::Relu, lrn(), pool()]);
        layers.extend([conv.next().unwrap(), LayerSpec::Relu]);
        layers.extend([conv.next().unwrap(), LayerSpec::Relu]);
        layers.extend([conv.next().unwrap(), LayerSpec::Relu, pool()]);
        Self::new((3, 227, 227), layers, mean_channel.to_vec(), None)
            .expect("AlexNet stub shape chain is valid")
    }
}

/// Preprocesses `image`, runs the network and flattens the result.
pub fn extract(image: &Raster, net: &NetSpec) -> Result<Vec<f32>, FeatxError> {
    let input = preprocess(image, net)?;
    Ok(net.forward(&input)?.into_vec())
}

/// [`extract`] with an explicit resize policy.
pub fn extract_with(
    image: &Raster,
    net: &NetSpec,
    mode: ResizeMode,
) -> Result<Vec<f32>, FeatxError> {
    let input = preprocess_with(image, net, mode)?;
    Ok(net.forward(&input)?.into_vec())
}

/// Extracts every image in parallel; results keep input order.
pub fn extract_batch(
    images: &[Raster],
    net: &NetSpec,
    mode: ResizeMode,
) -> Vec<Result<Vec<f32>, FeatxError>> {
    images
        .par_iter()
        .map(|img| extract_with(img, net, mode))
        .collect()
}
