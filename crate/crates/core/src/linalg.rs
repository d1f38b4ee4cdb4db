//! Dense real matrices and the handful of kernels ridge regression needs:
//! products, Gram matrices and symmetric positive-definite solves.
//!
//! Storage is row-major. Solver math is always `f64`; `f32` matrices exist so
//! that extracted features can be held at half the memory and promoted on use.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("data length {len} does not match shape {rows}x{cols}")]
    DataLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("{op}: dimension mismatch between {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op}: matrix is {rows}x{cols}, expected square")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not symmetric at ({row}, {col}): {upper} vs {lower}")]
    Asymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },
    #[error("matrix is not positive definite: pivot {pivot} is {value}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
}

/// Element types a [`DenseMatrix`] may hold.
pub trait Scalar: Copy + Default + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix {}x{} ", self.rows, self.cols)?;
        if self.data.len() <= 64 {
            f.debug_list()
                .entries((0..self.rows).map(|r| self.row(r)))
                .finish()
        } else {
            f.write_str("[..]")
        }
    }
}

impl<T: Scalar> DenseMatrix<T> {
    /// Builds a matrix from row-major data, rejecting bad lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(LinalgError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Skips the finiteness scan; for kernels whose output is finite whenever
    /// their inputs are.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![T::default(); rows * cols])
    }

    /// Builds a matrix by evaluating `f(row, col)`. Panics on non-finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced a non-finite entry")
    }

    /// Builds from nested rows; all rows must share a length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::DataLength {
                    rows: rows.len(),
                    cols,
                    len: data.len() + r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.data[r * self.cols + c]);
            }
        }
        Self::from_raw(self.cols, self.rows, out)
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        DenseMatrix::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v.to_f64()).collect(),
        )
    }

    pub fn to_f32(&self) -> DenseMatrix<f32> {
        DenseMatrix::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v.to_f64() as f32).collect(),
        )
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::from_raw(indices.len(), self.cols, data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|v| {
                let x = v.to_f64();
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }
}

impl DenseMatrix<f64> {
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "sub",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// Adds `value` to every diagonal entry of a square matrix.
    pub fn add_diagonal(&self, value: f64) -> Result<Self, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                op: "add_diagonal",
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] += value;
        }
        Ok(out)
    }
}

/// `c = a_op * b_op` where each operand is addressed by explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm_strided(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: the caller's strides address only elements inside `a` and `b`
    // (checked by the shape logic of every caller), and `c` is m*n row-major.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

/// Matrix product `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let c = gemm_strided(
        a.rows, a.cols, b.cols, &a.data, a.cols, 1, &b.data, b.cols, 1,
    );
    Ok(DenseMatrix::from_raw(a.rows, b.cols, c))
}

/// `aᵀ * b` without materialising the transpose.
pub fn transpose_matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.rows != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "transpose_matmul",
            left: (a.cols, a.rows),
            right: b.shape(),
        });
    }
    let c = gemm_strided(
        a.cols, a.rows, b.cols, &a.data, 1, a.cols, &b.data, b.cols, 1,
    );
    Ok(DenseMatrix::from_raw(a.cols, b.cols, c))
}

/// `a * bᵀ` without materialising the transpose.
pub fn matmul_transpose(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.cols != b.cols {
        return Err(LinalgError::DimensionMismatch {
            op: "matmul_transpose",
            left: a.shape(),
            right: (b.cols, b.rows),
        });
    }
    let c = gemm_strided(
        a.rows, a.cols, b.rows, &a.data, a.cols, 1, &b.data, 1, b.cols,
    );
    Ok(DenseMatrix::from_raw(a.rows, b.rows, c))
}

/// Gram matrix `aᵀa`. The result is exactly symmetric.
pub fn gram(a: &DenseMatrix) -> DenseMatrix {
    let n = a.cols;
    let mut c = gemm_strided(n, a.rows, n, &a.data, 1, a.cols, &a.data, a.cols, 1);
    for i in 0..n {
        for j in 0..i {
            c[i * n + j] = c[j * n + i];
        }
    }
    DenseMatrix::from_raw(n, n, c)
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // Row-major, only the lower triangle is meaningful.
    lower: Vec<f64>,
}

const SYMMETRY_RTOL: f64 = 1e-10;

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

impl Cholesky {
    /// Factorises a symmetric positive-definite matrix. Entries are
    /// symmetrised as `(A + Aᵀ)/2` after the symmetry check.
    pub fn factor(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let n = a.rows;
        if a.cols != n {
            return Err(LinalgError::NotSquare {
                op: "cholesky",
                rows: a.rows,
                cols: a.cols,
            });
        }
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = SYMMETRY_RTOL * scale;
        for i in 0..n {
            for j in 0..i {
                let (lower, upper) = (a.data[i * n + j], a.data[j * n + i]);
                if (lower - upper).abs() > tol {
                    return Err(LinalgError::Asymmetric {
                        row: j,
                        col: i,
                        upper,
                        lower,
                    });
                }
            }
        }

        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let sym = 0.5 * (a.data[i * n + j] + a.data[j * n + i]);
                let (row_i, row_j) = if i == j {
                    let r = &l[i * n..i * n + j];
                    (r, r)
                } else {
                    (&l[i * n..i * n + j], &l[j * n..j * n + j])
                };
                let s = sym - dot(row_i, row_j);
                if i == j {
                    if !(s.is_finite() && s > 0.0) {
                        return Err(LinalgError::NotPositiveDefinite { pivot: i, value: s });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// The factor `L` as a dense matrix (upper triangle zero).
    pub fn lower(&self) -> DenseMatrix {
        DenseMatrix::from_raw(self.n, self.n, self.lower.clone())
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        let n = self.n;
        if b.rows != n {
            return Err(LinalgError::DimensionMismatch {
                op: "spd_solve",
                left: (n, n),
                right: b.shape(),
            });
        }
        let m = b.cols;
        let l = &self.lower;
        let mut x = b.data.clone();

        // Forward: L Y = B, row by row.
        for i in 0..n {
            let (done, rest) = x.split_at_mut(i * m);
            let xi = &mut rest[..m];
            for k in 0..i {
                let lik = l[i * n + k];
                if lik != 0.0 {
                    let xk = &done[k * m..(k + 1) * m];
                    for (dst, src) in xi.iter_mut().zip(xk) {
                        *dst -= lik * src;
                    }
                }
            }
            let d = l[i * n + i];
            xi.iter_mut().for_each(|v| *v /= d);
        }

        // Backward: Lᵀ X = Y.
        for i in (0..n).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * m);
            let xi = &mut head[i * m..];
            for k in (i + 1)..n {
                let lki = l[k * n + i];
                if lki != 0.0 {
                    let xk = &tail[(k - i - 1) * m..(k - i) * m];
                    for (dst, src) in xi.iter_mut().zip(xk) {
                        *dst -= lki * src;
                    }
                }
            }
            let d = l[i * n + i];
            xi.iter_mut().for_each(|v| *v /= d);
        }
        Ok(DenseMatrix::from_raw(n, m, x))
    }
}

/// Solves `a X = b` for symmetric positive-definite `a` via Cholesky.
pub fn spd_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.rows == a.cols && b.rows != a.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "spd_solve",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Cholesky::factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn rejects_bad_length_and_nan() {
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0; 3]),
            Err(LinalgError::DataLength { .. })
        ));
        assert_eq!(
            DenseMatrix::new(2, 2, vec![1.0, 2.0, f64::NAN, 0.0]),
            Err(LinalgError::NonFinite { row: 1, col: 0 })
        );
        assert!(DenseMatrix::<f32>::new(1, 1, vec![f32::INFINITY]).is_err());
    }

    #[test]
    fn identity_times_m_is_m() {
        let a = DenseMatrix::from_fn(3, 4, |r, c| (r * 4 + c) as f64 - 5.5);
        assert_eq!(matmul(&DenseMatrix::identity(3), &a).unwrap(), a);
    }

    #[test]
    fn small_product_by_hand() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[0.0], &[1.0]]);
        assert_eq!(matmul(&a, &b).unwrap(), m(&[&[2.0], &[4.0]]));
    }

    #[test]
    fn matmul_reports_both_shapes() {
        let err = matmul(&DenseMatrix::zeros(2, 3), &DenseMatrix::zeros(2, 3)).unwrap_err();
        assert_eq!(
            err,
            LinalgError::DimensionMismatch {
                op: "matmul",
                left: (2, 3),
                right: (2, 3)
            }
        );
        assert!(err.to_string().contains("(2, 3)"));
    }

    #[test]
    fn transposed_variants_agree_with_explicit_transpose() {
        let a = DenseMatrix::from_fn(5, 3, |r, c| ((r * 7 + c * 3) % 11) as f64 - 4.0);
        let b = DenseMatrix::from_fn(5, 2, |r, c| ((r + 2 * c) % 5) as f64);
        assert_eq!(
            transpose_matmul(&a, &b).unwrap(),
            matmul(&a.transpose(), &b).unwrap()
        );
        let c = DenseMatrix::from_fn(4, 3, |r, c| (r as f64) - (c as f64) * 0.5);
        assert_eq!(
            matmul_transpose(&a, &c).unwrap(),
            matmul(&a, &c.transpose()).unwrap()
        );
    }

    #[test]
    fn gram_of_column_vector_is_dot() {
        let v = m(&[&[1.0], &[2.0], &[3.0]]);
        assert_eq!(gram(&v), m(&[&[14.0]]));
    }

    #[test]
    fn gram_of_orthonormal_is_identity() {
        // Rotation about z composed with a reflection.
        let (s, c) = 0.3f64.sin_cos();
        let q = m(&[&[c, -s, 0.0], &[s, c, 0.0], &[0.0, 0.0, -1.0]]);
        let g = gram(&q);
        let diff = g.sub(&DenseMatrix::identity(3)).unwrap();
        assert!(diff.frobenius_norm() < 1e-12);
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = DenseMatrix::from_fn(4, 2, |r, c| (r as f64) + 10.0 * c as f64);
        assert_eq!(spd_solve(&DenseMatrix::identity(4), &b).unwrap(), b);

        let a = m(&[&[4.0, 0.0], &[0.0, 9.0]]);
        let x = spd_solve(&a, &m(&[&[2.0], &[3.0]])).unwrap();
        assert!((x.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((x.get(1, 0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn non_positive_definite_names_pivot() {
        // Leading 1x1 block is fine, the 2x2 minor is singular-negative.
        let a = m(&[&[1.0, 2.0, 0.0], &[2.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        match spd_solve(&a, &DenseMatrix::zeros(3, 1)) {
            Err(LinalgError::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymmetric_is_rejected() {
        let a = m(&[&[2.0, 1.0], &[0.0, 2.0]]);
        assert!(matches!(
            spd_solve(&a, &DenseMatrix::zeros(2, 1)),
            Err(LinalgError::Asymmetric { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn tiny_asymmetry_is_absorbed() {
        let a = m(&[&[2.0, 1.0 + 1e-14], &[1.0, 2.0]]);
        let x = spd_solve(&a, &m(&[&[3.0], &[3.0]])).unwrap();
        assert!((x.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            spd_solve(&DenseMatrix::zeros(2, 3), &DenseMatrix::zeros(2, 1)),
            Err(LinalgError::NotSquare { .. })
        ));
        assert!(matches!(
            spd_solve(&DenseMatrix::identity(2), &DenseMatrix::zeros(3, 1)),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cholesky_factor_reconstructs() {
        let a = m(&[&[4.0, 2.0, 0.4], &[2.0, 5.0, 1.0], &[0.4, 1.0, 3.0]]);
        let l = Cholesky::factor(&a).unwrap().lower();
        let back = matmul_transpose(&l, &l).unwrap();
        assert!(back.sub(&a).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (0..19).map(f64::from).collect();
        let expect: f64 = a.iter().map(|x| x * x).sum();
        assert_eq!(dot(&a, &a), expect);
    }
}
