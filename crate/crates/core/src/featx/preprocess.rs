use super::{FeatxError, NetSpec, Tensor3};

/// 8-bit image, interleaved row-major, 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl Raster {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        pixels: Vec<u8>,
    ) -> Result<Self, FeatxError> {
        if width == 0 || height == 0 {
            return Err(FeatxError::EmptyImage { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(FeatxError::InputChannels {
                expected: 3,
                found: channels,
            });
        }
        let expected = width * height * channels;
        if pixels.len() != expected {
            return Err(FeatxError::RasterLength {
                width,
                height,
                channels,
                expected,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Channel-major `f32` planes.
    fn planes(&self) -> Vec<Vec<f32>> {
        (0..self.channels)
            .map(|c| {
                self.pixels
                    .iter()
                    .skip(c)
                    .step_by(self.channels)
                    .map(|&p| f32::from(p))
                    .collect()
            })
            .collect()
    }
}

/// How the image is fitted to the network's input size.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ResizeMode {
    /// Stretch to the target size; aspect ratio is not preserved.
    #[default]
    Squash,
    /// Preserve the aspect ratio and fill the margins with this value.
    Letterbox(u8),
}

/// Bilinear resize of one plane with half-pixel centres and edge clamping.
pub fn resize_bilinear(
    src: &[f32],
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<f32> {
    assert_eq!(src.len(), in_h * in_w, "plane size does not match shape");
    let taps = |out: usize, inp: usize| -> Vec<(usize, usize, f32)> {
        let ratio = inp as f64 / out as f64;
        (0..out)
            .map(|o| {
                let s = ((o as f64 + 0.5) * ratio - 0.5).clamp(0.0, (inp - 1) as f64);
                let lo = s.floor() as usize;
                let hi = (lo + 1).min(inp - 1);
                (lo, hi, (s - lo as f64) as f32)
            })
            .collect()
    };
    let ys = taps(out_h, in_h);
    let xs = taps(out_w, in_w);
    let mut out = Vec::with_capacity(out_h * out_w);
    for &(y0, y1, wy) in &ys {
        let r0 = &src[y0 * in_w..(y0 + 1) * in_w];
        let r1 = &src[y1 * in_w..(y1 + 1) * in_w];
        for &(x0, x1, wx) in &xs {
            let top = r0[x0] + (r0[x1] - r0[x0]) * wx;
            let bottom = r1[x0] + (r1[x1] - r1[x0]) * wx;
            out.push(top + (bottom - top) * wy);
        }
    }
    out
}

/// [`preprocess_with`] using [`ResizeMode::Squash`].
pub fn preprocess(image: &Raster, net: &NetSpec) -> Result<Tensor3, FeatxError> {
    preprocess_with(image, net, ResizeMode::Squash)
}

/// Resizes `image` to the network input, replicates a gray channel across
/// all input channels and subtracts the network's mean.
pub fn preprocess_with(
    image: &Raster,
    net: &NetSpec,
    mode: ResizeMode,
) -> Result<Tensor3, FeatxError> {
    let (c, h, w) = net.input_shape();
    if image.channels != 1 && image.channels != c {
        return Err(FeatxError::InputChannels {
            expected: c,
            found: image.channels,
        });
    }
    let planes: Vec<Vec<f32>> = image
        .planes()
        .into_iter()
        .map(|p| fit_plane(&p, image.height, image.width, h, w, mode))
        .collect();

    let mut data = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        let src = if planes.len() == 1 {
            &planes[0]
        } else {
            &planes[ch]
        };
        data.extend_from_slice(src);
    }
    match net.mean_image() {
        Some(mean) => data
            .iter_mut()
            .zip(mean.as_slice())
            .for_each(|(v, m)| *v -= m),
        None => {
            for (plane, &m) in data.chunks_exact_mut(h * w).zip(net.mean_channel()) {
                plane.iter_mut().for_each(|v| *v -= m);
            }
        }
    }
    Ok(Tensor3::from_raw(c, h, w, data))
}

fn fit_plane(
    src: &[f32],
    in_h: usize,
    in_w: usize,
    h: usize,
    w: usize,
    mode: ResizeMode,
) -> Vec<f32> {
    match mode {
        ResizeMode::Squash => resize_bilinear(src, in_h, in_w, h, w),
        ResizeMode::Letterbox(fill) => {
            let scale = (h as f64 / in_h as f64).min(w as f64 / in_w as f64);
            let rh = ((in_h as f64 * scale).round() as usize).clamp(1, h);
            let rw = ((in_w as f64 * scale).round() as usize).clamp(1, w);
            let inner = resize_bilinear(src, in_h, in_w, rh, rw);
            let (top, left) = ((h - rh) / 2, (w - rw) / 2);
            let mut out = vec![f32::from(fill); h * w];
            for y in 0..rh {
                out[(top + y) * w + left..(top + y) * w + left + rw]
                    .copy_from_slice(&inner[y * rw..(y + 1) * rw]);
            }
            out
        }
    }
}
