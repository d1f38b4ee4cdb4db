//! Forward-only convolution, ReLU, max-pooling and local response
//! normalisation on channel-major `f32` tensors.

use thiserror::Error;

use super::Tensor3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayerError {
    #[error("expected {expected} input channels, got {found}")]
    Channels { expected: usize, found: usize },
    #[error("kernel {kernel} exceeds padded input extent {extent}")]
    KernelTooLarge { kernel: usize, extent: usize },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

/// Grouped 2-D cross-correlation with zero padding.
///
/// Weights are laid out `[out][in / groups][kernel][kernel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    groups: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl ConvLayer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        groups: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self, LayerError> {
        if kernel == 0 || stride == 0 || groups == 0 {
            return Err(LayerError::Invalid(format!(
                "kernel {kernel}, stride {stride} and groups {groups} must all be at least 1"
            )));
        }
        if in_channels == 0 || out_channels == 0 {
            return Err(LayerError::Invalid(
                "channel counts must be at least 1".into(),
            ));
        }
        if in_channels % groups != 0 || out_channels % groups != 0 {
            return Err(LayerError::Invalid(format!(
                "channels {in_channels}->{out_channels} not divisible by {groups} groups"
            )));
        }
        let expected = out_channels * (in_channels / groups) * kernel * kernel;
        if weights.len() != expected {
            return Err(LayerError::Invalid(format!(
                "weight block has {} values, expected {expected}",
                weights.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(LayerError::Invalid(format!(
                "bias has {} values, expected {out_channels}",
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(LayerError::Invalid("non-finite weight or bias".into()));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            pad,
            groups,
            weights,
            bias,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }
    pub fn out_channels(&self) -> usize {
        self.out_channels
    }
    pub fn kernel(&self) -> usize {
        self.kernel
    }
    pub fn stride(&self) -> usize {
        self.stride
    }
    pub fn pad(&self) -> usize {
        self.pad
    }
    pub fn groups(&self) -> usize {
        self.groups
    }
    pub fn weights(&self) -> &[f32] {
        &self.weights
    }
    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn output_shape(
        &self,
        (c, h, w): (usize, usize, usize),
    ) -> Result<(usize, usize, usize), LayerError> {
        if c != self.in_channels {
            return Err(LayerError::Channels {
                expected: self.in_channels,
                found: c,
            });
        }
        let oh = conv_extent(h, self.kernel, self.stride, self.pad)?;
        let ow = conv_extent(w, self.kernel, self.stride, self.pad)?;
        Ok((self.out_channels, oh, ow))
    }
}

fn conv_extent(size: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize, LayerError> {
    let extent = size + 2 * pad;
    if kernel > extent {
        return Err(LayerError::KernelTooLarge { kernel, extent });
    }
    Ok((extent - kernel) / stride + 1)
}

/// Max-pooling with windows clipped at the bottom/right border.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolLayer {
    pub kernel: usize,
    pub stride: usize,
}

impl PoolLayer {
    pub fn new(kernel: usize, stride: usize) -> Result<Self, LayerError> {
        if kernel == 0 || stride == 0 {
            return Err(LayerError::Invalid(format!(
                "pool kernel {kernel} and stride {stride} must be at least 1"
            )));
        }
        Ok(Self { kernel, stride })
    }

    pub fn output_shape(
        &self,
        (c, h, w): (usize, usize, usize),
    ) -> Result<(usize, usize, usize), LayerError> {
        Ok((
            c,
            pool_extent(h, self.kernel, self.stride)?,
            pool_extent(w, self.kernel, self.stride)?,
        ))
    }
}

/// Ceil-mode output size: the last window may hang over the border.
fn pool_extent(size: usize, kernel: usize, stride: usize) -> Result<usize, LayerError> {
    if kernel == 0 || stride == 0 {
        return Err(LayerError::Invalid(
            "pool kernel and stride must be at least 1".into(),
        ));
    }
    if kernel > size {
        return Err(LayerError::KernelTooLarge {
            kernel,
            extent: size,
        });
    }
    let mut out = (size - kernel).div_ceil(stride) + 1;
    // A window must start inside the input.
    if (out - 1) * stride >= size {
        out -= 1;
    }
    Ok(out)
}

/// Cross-channel local response normalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrnLayer {
    pub local_size: usize,
    pub alpha: f32,
    pub beta: f32,
    pub k: f32,
}

impl Default for LrnLayer {
    fn default() -> Self {
        Self {
            local_size: 5,
            alpha: 1e-4,
            beta: 0.75,
            k: 1.0,
        }
    }
}

impl LrnLayer {
    pub fn new(local_size: usize, alpha: f32, beta: f32, k: f32) -> Result<Self, LayerError> {
        if local_size % 2 == 0 {
            return Err(LayerError::Invalid(format!(
                "LRN local size must be odd, got {local_size}"
            )));
        }
        if ![alpha, beta, k].iter().all(|v| v.is_finite()) {
            return Err(LayerError::Invalid("non-finite LRN parameter".into()));
        }
        Ok(Self {
            local_size,
            alpha,
            beta,
            k,
        })
    }
}

/// One stage of the feature extractor.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv(ConvLayer),
    Relu,
    MaxPool(PoolLayer),
    Lrn(LrnLayer),
}

impl LayerSpec {
    pub fn output_shape(
        &self,
        input: (usize, usize, usize),
    ) -> Result<(usize, usize, usize), LayerError> {
        match self {
            LayerSpec::Conv(c) => c.output_shape(input),
            LayerSpec::MaxPool(p) => p.output_shape(input),
            LayerSpec::Relu => Ok(input),
            LayerSpec::Lrn(l) => {
                if l.local_size % 2 == 0 {
                    return Err(LayerError::Invalid("LRN local size must be odd".into()));
                }
                Ok(input)
            }
        }
    }

    pub fn forward(&self, input: &Tensor3) -> Result<Tensor3, LayerError> {
        match self {
            LayerSpec::Conv(c) => conv_forward(input, c),
            LayerSpec::Relu => Ok(relu_forward(input.clone())),
            LayerSpec::MaxPool(p) => maxpool_forward(input, p),
            LayerSpec::Lrn(l) => lrn_forward(input, l),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv(_) => "conv",
            LayerSpec::Relu => "relu",
            LayerSpec::MaxPool(_) => "maxpool",
            LayerSpec::Lrn(_) => "lrn",
        }
    }
}

/// Convolution by im2col followed by one SGEMM per group.
pub fn conv_forward(input: &Tensor3, layer: &ConvLayer) -> Result<Tensor3, LayerError> {
    let (_, oh, ow) = layer.output_shape(input.shape())?;
    let (h, w) = (input.height(), input.width());
    let k = layer.kernel;
    let (stride, pad) = (layer.stride, layer.pad);
    let cg = layer.in_channels / layer.groups;
    let og = layer.out_channels / layer.groups;
    let patch = cg * k * k;
    let plane = oh * ow;
    let src = input.as_slice();

    let mut cols = vec![0.0f32; patch * plane];
    let mut out = vec![0.0f32; layer.out_channels * plane];
    for g in 0..layer.groups {
        cols.iter_mut().for_each(|v| *v = 0.0);
        for ci in 0..cg {
            let chan = &src[(g * cg + ci) * h * w..(g * cg + ci + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (ci * k + ky) * k + kx;
                    let dst = &mut cols[row * plane..(row + 1) * plane];
                    for oy in 0..oh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let src_row = &chan[iy as usize * w..(iy as usize + 1) * w];
                        let dst_row = &mut dst[oy * ow..(oy + 1) * ow];
                        for (ox, d) in dst_row.iter_mut().enumerate() {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix >= 0 && ix < w as isize {
                                *d = src_row[ix as usize];
                            }
                        }
                    }
                }
            }
        }
        let wg = &layer.weights[g * og * patch..(g + 1) * og * patch];
        let og_out = &mut out[g * og * plane..(g + 1) * og * plane];
        // SAFETY: wg is og×patch, cols is patch×plane and og_out is og×plane,
        // all row-major and sized exactly by the slices above.
        unsafe {
            matrixmultiply::sgemm(
                og,
                patch,
                plane,
                1.0,
                wg.as_ptr(),
                patch as isize,
                1,
                cols.as_ptr(),
                plane as isize,
                1,
                0.0,
                og_out.as_mut_ptr(),
                plane as isize,
                1,
            );
        }
    }
    for (o, chunk) in out.chunks_exact_mut(plane.max(1)).enumerate() {
        let b = layer.bias[o];
        chunk.iter_mut().for_each(|v| *v += b);
    }
    Ok(Tensor3::from_raw(layer.out_channels, oh, ow, out))
}

pub fn relu_forward(mut input: Tensor3) -> Tensor3 {
    input.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    input
}

pub fn maxpool_forward(input: &Tensor3, layer: &PoolLayer) -> Result<Tensor3, LayerError> {
    let (c, oh, ow) = layer.output_shape(input.shape())?;
    let (h, w) = (input.height(), input.width());
    let src = input.as_slice();
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let plane = &src[ch * h * w..(ch + 1) * h * w];
        for oy in 0..oh {
            let y0 = oy * layer.stride;
            let y1 = (y0 + layer.kernel).min(h);
            for ox in 0..ow {
                let x0 = ox * layer.stride;
                let x1 = (x0 + layer.kernel).min(w);
                let mut best = f32::NEG_INFINITY;
                for y in y0..y1 {
                    for &v in &plane[y * w + x0..y * w + x1] {
                        if v > best {
                            best = v;
                        }
                    }
                }
                out.push(best);
            }
        }
    }
    Ok(Tensor3::from_raw(c, oh, ow, out))
}

/// `out = in / (k + alpha/size · Σ in²)^beta` over a channel window centred
/// on each channel and clipped at the ends.
pub fn lrn_forward(input: &Tensor3, layer: &LrnLayer) -> Result<Tensor3, LayerError> {
    if layer.local_size % 2 == 0 {
        return Err(LayerError::Invalid(format!(
            "LRN local size must be odd, got {}",
            layer.local_size
        )));
    }
    let (c, h, w) = input.shape();
    let plane = h * w;
    let half = layer.local_size / 2;
    let src = input.as_slice();
    let scale = f64::from(layer.alpha) / layer.local_size as f64;
    let (k, beta) = (f64::from(layer.k), f64::from(layer.beta));
    let mut out = vec![0.0f32; src.len()];
    let mut sumsq = vec![0.0f64; plane];
    for ch in 0..c {
        sumsq.iter_mut().for_each(|v| *v = 0.0);
        let lo = ch.saturating_sub(half);
        let hi = (ch + half).min(c - 1);
        for n in lo..=hi {
            for (s, &v) in sumsq.iter_mut().zip(&src[n * plane..(n + 1) * plane]) {
                let v = f64::from(v);
                *s += v * v;
            }
        }
        let dst = &mut out[ch * plane..(ch + 1) * plane];
        for ((d, &v), s) in dst
            .iter_mut()
            .zip(&src[ch * plane..(ch + 1) * plane])
            .zip(&sumsq)
        {
            *d = (f64::from(v) / (k + scale * s).powf(beta)) as f32;
        }
    }
    Ok(Tensor3::from_raw(c, h, w, out))
}
