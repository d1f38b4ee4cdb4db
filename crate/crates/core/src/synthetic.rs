//! Gaussian-blob data sets with known structure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::elm::LabeledFeatureSet;
use crate::linalg::DenseMatrix;

/// `per_class` unit-variance samples around each centre, grouped by class.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_class: usize, seed: u64) -> LabeledFeatureSet {
    assert!(!centers.is_empty(), "need at least one centre");
    let d = centers[0].len();
    assert!(
        centers.iter().all(|c| c.len() == d),
        "centres differ in dimension"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(centers.len() * per_class * d);
    let mut labels = Vec::with_capacity(centers.len() * per_class);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            for &c in center {
                let z: f64 = StandardNormal.sample(&mut rng);
                values.push((c + z) as f32);
            }
            labels.push(class);
        }
    }
    let names = (0..centers.len()).map(|i| format!("class{i}")).collect();
    let x = DenseMatrix::new(labels.len(), d, values).expect("samples are finite");
    LabeledFeatureSet::new(x, labels, names).expect("labels are in range")
}

/// Two classes centred at `−offset·1` and `+offset·1`.
pub fn two_blobs(dim: usize, per_class: usize, offset: f64, seed: u64) -> LabeledFeatureSet {
    gaussian_blobs(&[vec![-offset; dim], vec![offset; dim]], per_class, seed)
}

/// Class `k` centred at `scale · e_k`; requires `classes <= dim`.
pub fn corner_blobs(
    classes: usize,
    dim: usize,
    per_class: usize,
    scale: f64,
    seed: u64,
) -> LabeledFeatureSet {
    assert!(classes <= dim, "more classes than dimensions");
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|k| {
            let mut c = vec![0.0; dim];
            c[k] = scale;
            c
        })
        .collect();
    gaussian_blobs(&centers, per_class, seed)
}

/// `classes` blobs whose centres are drawn uniformly from `[-spread, spread]^dim`,
/// so the class signal is spread over every coordinate.
pub fn dense_blobs(
    classes: usize,
    dim: usize,
    per_class: usize,
    spread: f64,
    seed: u64,
) -> LabeledFeatureSet {
    let key = crate::rng::derive_key(seed, &[classes as u64, dim as u64]);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|k| {
            (0..dim)
                .map(|j| spread * crate::rng::symmetric_f64(key, (k * dim + j) as u64))
                .collect()
        })
        .collect();
    gaussian_blobs(&centers, per_class, seed)
}
