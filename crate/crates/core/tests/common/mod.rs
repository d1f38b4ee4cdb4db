//! Reference implementations used as test oracles. Each is a direct scalar
//! transcription of the definition, sharing no code with the library kernels.
#![allow(dead_code, clippy::needless_range_loop)]

use elmdoc_core::elm::Activation;
use elmdoc_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

pub fn to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

pub fn naive_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for p in 0..k {
                s += a[i][p] * b[p][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn naive_transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn diff_frobenius(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        assert!(p.abs() > 1e-300, "singular matrix");
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = aug[row][col];
                if f != 0.0 {
                    for j in 0..2 * n {
                        aug[row][j] -= f * aug[col][j];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn act(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        Activation::Relu => {
            if z > 0.0 {
                z
            } else {
                0.0
            }
        }
    }
}

/// `H[j][i] = g(Σ_k W[i][k] · (x[j][k] − mean[k]) / std[k] + b[i])`.
pub fn scalar_hidden(
    w: &[Vec<f64>],
    b: &[f64],
    x: &[Vec<f64>],
    mean: &[f64],
    std: &[f64],
    a: Activation,
) -> Vec<Vec<f64>> {
    x.iter()
        .map(|xj| {
            (0..w.len())
                .map(|i| {
                    let mut z = b[i];
                    for k in 0..xj.len() {
                        z += w[i][k] * (xj[k] - mean[k]) / std[k];
                    }
                    act(a, z)
                })
                .collect()
        })
        .collect()
}

pub fn one_hot_rows(y: &[usize], m: usize) -> Vec<Vec<f64>> {
    y.iter()
        .map(|&c| (0..m).map(|j| if j == c { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Minimises `C/2 ‖T − HB‖² + 1/2 ‖B‖²` by full-batch gradient descent until
/// the gradient's Frobenius norm falls below `tol`.
///
/// Step size is `1/L` with `L = 1 + C·‖HᵀH‖_F`, an upper bound on the
/// largest eigenvalue of the Hessian `I + C·HᵀH`.
pub fn gradient_descent_ridge(
    h: &[Vec<f64>],
    t: &[Vec<f64>],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> (Vec<Vec<f64>>, f64, usize) {
    let n_hidden = h[0].len();
    let m = t[0].len();
    let ht = naive_transpose(h);
    let hth = naive_matmul(&ht, h);
    let htt = naive_matmul(&ht, t);
    let lipschitz = 1.0 + c * frobenius(&hth);
    let step = 1.0 / lipschitz;
    let mut b = vec![vec![0.0; m]; n_hidden];
    let mut grad_norm = f64::INFINITY;
    for iter in 0..max_iter {
        // grad = B + C (HᵀH B − HᵀT)
        let hthb = naive_matmul(&hth, &b);
        let mut g = vec![vec![0.0; m]; n_hidden];
        for i in 0..n_hidden {
            for j in 0..m {
                g[i][j] = b[i][j] + c * (hthb[i][j] - htt[i][j]);
            }
        }
        grad_norm = frobenius(&g);
        if grad_norm < tol {
            return (b, grad_norm, iter);
        }
        for i in 0..n_hidden {
            for j in 0..m {
                b[i][j] -= step * g[i][j];
            }
        }
    }
    (b, grad_norm, max_iter)
}

/// Direct grouped cross-correlation: out, group-in-channel, ky, kx loops per
/// output pixel.
#[allow(clippy::too_many_arguments)]
pub fn naive_conv(
    input: &[f32],
    (c, h, w): (usize, usize, usize),
    weights: &[f32],
    bias: &[f32],
    out_c: usize,
    k: usize,
    stride: usize,
    pad: usize,
    groups: usize,
) -> (Vec<f32>, (usize, usize, usize)) {
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (w + 2 * pad - k) / stride + 1;
    let cg = c / groups;
    let og = out_c / groups;
    let mut out = vec![0.0f32; out_c * oh * ow];
    for o in 0..out_c {
        let g = o / og;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut s = f64::from(bias[o]);
                for ci in 0..cg {
                    let ic = g * cg + ci;
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy * stride + ky) as i64 - pad as i64;
                            let ix = (ox * stride + kx) as i64 - pad as i64;
                            if iy < 0 || ix < 0 || iy >= h as i64 || ix >= w as i64 {
                                continue;
                            }
                            let v = input[(ic * h + iy as usize) * w + ix as usize];
                            let wt = weights[((o * cg + ci) * k + ky) * k + kx];
                            s += f64::from(v) * f64::from(wt);
                        }
                    }
                }
                out[(o * oh + oy) * ow + ox] = s as f32;
            }
        }
    }
    (out, (out_c, oh, ow))
}

/// Windows start at `0, s, 2s, …` until one reaches the last row/column;
/// windows are clipped at the border.
pub fn naive_maxpool(
    input: &[f32],
    (c, h, w): (usize, usize, usize),
    k: usize,
    s: usize,
) -> (Vec<f32>, (usize, usize, usize)) {
    let extent = |n: usize| {
        let mut count = 0;
        let mut start = 0;
        loop {
            count += 1;
            if start + k >= n {
                break;
            }
            start += s;
            if start >= n {
                break;
            }
        }
        count
    };
    let (oh, ow) = (extent(h), extent(w));
    let mut out = Vec::new();
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f32::NEG_INFINITY;
                for y in oy * s..(oy * s + k).min(h) {
                    for x in ox * s..(ox * s + k).min(w) {
                        best = best.max(input[(ch * h + y) * w + x]);
                    }
                }
                out.push(best);
            }
        }
    }
    (out, (c, oh, ow))
}

pub fn scalar_lrn(
    input: &[f32],
    (c, h, w): (usize, usize, usize),
    size: usize,
    alpha: f64,
    beta: f64,
    k: f64,
) -> Vec<f32> {
    let half = (size / 2) as i64;
    let mut out = vec![0.0f32; input.len()];
    for ch in 0..c as i64 {
        for y in 0..h {
            for x in 0..w {
                let mut sum = 0.0f64;
                for n in (ch - half)..=(ch + half) {
                    if n >= 0 && n < c as i64 {
                        let v = f64::from(input[(n as usize * h + y) * w + x]);
                        sum += v * v;
                    }
                }
                let idx = (ch as usize * h + y) * w + x;
                out[idx] =
                    (f64::from(input[idx]) / (k + alpha / size as f64 * sum).powf(beta)) as f32;
            }
        }
    }
    out
}

/// Bilinear sample at half-pixel centres with edge clamping.
pub fn scalar_bilinear(src: &[Vec<f64>], out_h: usize, out_w: usize) -> Vec<Vec<f64>> {
    let (ih, iw) = (src.len(), src[0].len());
    let coord = |o: usize, out: usize, inp: usize| -> f64 {
        let s = (o as f64 + 0.5) * inp as f64 / out as f64 - 0.5;
        s.max(0.0).min((inp - 1) as f64)
    };
    let mut out = vec![vec![0.0; out_w]; out_h];
    for (oy, row) in out.iter_mut().enumerate() {
        let sy = coord(oy, out_h, ih);
        for (ox, v) in row.iter_mut().enumerate() {
            let sx = coord(ox, out_w, iw);
            // Weighted sum over the four neighbouring source pixels.
            let mut acc = 0.0;
            for yy in 0..ih {
                let wy = (1.0 - (sy - yy as f64).abs()).max(0.0);
                for xx in 0..iw {
                    let wx = (1.0 - (sx - xx as f64).abs()).max(0.0);
                    acc += wy * wx * src[yy][xx];
                }
            }
            *v = acc;
        }
    }
    out
}
