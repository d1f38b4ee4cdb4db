//! Deterministic inputs shared by the benchmarks.

use elmdoc_core::featx::Raster;
use elmdoc_core::rng::symmetric_f64;
use elmdoc_core::DenseMatrix;

/// `rows × cols` matrix with entries uniform in `[-1, 1)`.
pub fn matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |r, c| {
        symmetric_f64(seed, (r * cols + c) as u64)
    })
}

/// Symmetric positive definite `n × n` matrix `MᵀM + n·I`.
pub fn spd(n: usize, seed: u64) -> DenseMatrix {
    let m = matrix(n, n, seed);
    elmdoc_core::linalg::gram(&m)
        .add_diagonal(n as f64)
        .expect("square")
}

/// Grey page-like raster with horizontal text bands.
pub fn page(width: usize, height: usize) -> Raster {
    let pixels = (0..width * height)
        .map(|i| {
            let (x, y) = (i % width, i / width);
            if (y / 12) % 3 == 0 && (x / 5) % 4 != 0 {
                30
            } else {
                235
            }
        })
        .collect();
    Raster::new(width, height, 1, pixels).expect("valid raster")
}
