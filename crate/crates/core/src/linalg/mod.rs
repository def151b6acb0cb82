//! Dense real-matrix kernels: Cholesky, Householder QR least squares, cyclic
//! Jacobi symmetric eigendecomposition, and the scaled Padé matrix exponential.
//!
//! Everything in here operates on the row-major [`Matrix`] type and is pure:
//! no operation mutates its inputs, so values can be shared freely across
//! threads. Sizes in this project stay in the low hundreds, which is why the
//! kernels are deliberately simple O(n³) dense routines.

mod chol;
mod eig;
mod expm;
mod qr;

pub use chol::{
    back_substitute_transposed, forward_substitute, invert_lower_triangular, solve_unit_lower,
};
pub use eig::SymEig;

use std::fmt;

/// Errors from the dense kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Dimensions of the operands do not line up.
    DimensionMismatch(String),
    /// A Cholesky pivot fell at or below tolerance: the matrix is singular or
    /// indefinite.
    NotPositiveDefinite { pivot: f64, index: usize },
    /// A diagonal of R fell below tolerance times the largest diagonal.
    RankDeficient { diag: f64, index: usize },
    /// The Jacobi sweep limit was exhausted before the off-diagonal norm
    /// dropped below tolerance.
    NoConvergence { sweeps: usize, off_norm: f64 },
    /// A constructor was handed NaN or infinite entries.
    NotFinite,
    /// The operation requires symmetry and the input is not symmetric.
    NotSymmetric { deviation: f64 },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            LinalgError::NotPositiveDefinite { pivot, index } => {
                write!(f, "not positive definite: pivot {pivot:e} at index {index}")
            }
            LinalgError::RankDeficient { diag, index } => {
                write!(f, "rank deficient: |R[{index},{index}]| = {diag:e}")
            }
            LinalgError::NoConvergence { sweeps, off_norm } => {
                write!(f, "no convergence after {sweeps} sweeps, off-diagonal {off_norm:e}")
            }
            LinalgError::NotFinite => write!(f, "non-finite entry"),
            LinalgError::NotSymmetric { deviation } => {
                write!(f, "matrix not symmetric, deviation {deviation:e}")
            }
        }
    }
}

impl std::error::Error for LinalgError {}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build from a row-major buffer, checking shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "buffer of {} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(LinalgError::NotFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from nested row slices; panics on ragged input or non-finite
    /// entries (intended for literals in code and tests).
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data: Vec<f64> = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self::from_vec(r, c, data).expect("invalid matrix literal")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vec(entries: &[f64]) -> Self {
        Self { rows: entries.len(), cols: 1, data: entries.to_vec() }
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} by {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b_row = rhs.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        let data = self.data.iter().map(|a| a * s).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Frobenius norm.
    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, &x) in sums.iter_mut().zip(self.row(i)) {
                *s += x.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Copy of the `r x c` block with top-left corner `(i0, j0)`.
    pub fn block(&self, i0: usize, j0: usize, r: usize, c: usize) -> Matrix {
        assert!(i0 + r <= self.rows && j0 + c <= self.cols, "block out of range");
        let mut out = Matrix::zeros(r, c);
        for i in 0..r {
            out.row_mut(i).copy_from_slice(&self.row(i0 + i)[j0..j0 + c]);
        }
        out
    }

    pub fn set_block(&mut self, i0: usize, j0: usize, b: &Matrix) {
        assert!(i0 + b.rows <= self.rows && j0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            let src = b.row(i);
            self.row_mut(i0 + i)[j0..j0 + src.len()].copy_from_slice(src);
        }
    }

    /// Horizontal concatenation `[self, rhs]`.
    pub fn hcat(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "hcat rows");
        let mut out = Matrix::zeros(self.rows, self.cols + rhs.cols);
        out.set_block(0, 0, self);
        out.set_block(0, self.cols, rhs);
        out
    }

    /// Block-diagonal stack of the given blocks.
    pub fn block_diag(blocks: &[Matrix]) -> Matrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let (mut i0, mut j0) = (0, 0);
        for b in blocks {
            out.set_block(i0, j0, b);
            i0 += b.rows;
            j0 += b.cols;
        }
        out
    }

    /// Largest relative deviation from symmetry, `max |S - Sᵀ| / max |S|`.
    pub fn symmetry_deviation(&self) -> f64 {
        assert!(self.is_square());
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        dev / scale
    }

    /// Force exact symmetry by averaging with the transpose.
    pub fn symmetrized(&self) -> Matrix {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Spectral norm: square root of the largest eigenvalue of `GᵀG`,
    /// computed on the smaller of the two Gram matrices.
    pub fn spectral_norm(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let gram = if self.rows <= self.cols {
            self.matmul(&self.transpose())
        } else {
            self.transpose().matmul(self)
        };
        let eig = gram.symmetrized().sym_eig().expect("Gram eigendecomposition");
        eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product of two slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm of a slice.
#[inline]
pub fn vec_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert_eq!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap_err(), LinalgError::NotFinite);
        assert!(Matrix::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn matmul_matches_hand_product() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let c = a.matmul(&b);
        assert_eq!(c, Matrix::from_rows(&[&[19.0, 22.0], &[43.0, 50.0]]));
    }

    #[test]
    fn block_roundtrip() {
        let mut m = Matrix::zeros(4, 4);
        let b = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        m.set_block(1, 2, &b);
        assert_eq!(m.block(1, 2, 2, 2), b);
        assert_eq!(m[(1, 2)], 1.0);
        assert_eq!(m[(2, 3)], 4.0);
    }

    #[test]
    fn norms() {
        let m = Matrix::from_rows(&[&[3.0, 0.0], &[-4.0, 0.0]]);
        assert!((m.frob_norm() - 5.0).abs() < 1e-15);
        assert!((m.one_norm() - 7.0).abs() < 1e-15);
        assert_eq!(m.max_abs(), 4.0);
    }

    #[test]
    fn spectral_norm_identity_and_diag() {
        assert!((Matrix::identity(4).spectral_norm() - 1.0).abs() < 1e-10);
        let d = Matrix::diag(&[3.0, -5.0]);
        assert!((d.spectral_norm() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_norm_shear() {
        // GᵀG of [[1,1],[0,1]] has eigenvalues (3 ± √5)/2.
        let g = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let expected = ((3.0 + 5.0f64.sqrt()) / 2.0).sqrt();
        assert!((g.spectral_norm() - expected).abs() < 1e-10);
        assert!((g.spectral_norm() - 1.618034).abs() < 1e-6);
    }

    #[test]
    fn spectral_norm_is_sampled_max_upper_bound() {
        let g = Matrix::from_rows(&[&[0.3, -1.2, 0.4], &[0.0, 0.7, 2.1], &[1.0, 0.0, -0.5]]);
        let s = g.spectral_norm();
        let mut rng = crate::rng::SplitMix64::new(7);
        let mut best: f64 = 0.0;
        for _ in 0..1000 {
            let u: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
            let nu = vec_norm(&u);
            let gu = g.matvec(&u.iter().map(|x| x / nu).collect::<Vec<_>>());
            best = best.max(vec_norm(&gu));
        }
        assert!(best <= s + 1e-12);
        assert!(best >= s - 1e-6 * s.max(1.0) - 5e-2);
    }
}
