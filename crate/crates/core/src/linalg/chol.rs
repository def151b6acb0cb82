//! Cholesky factorization and SPD solves.

use super::{LinalgError, Matrix};

/// Relative pivot tolerance: a pivot at or below this times the largest
/// diagonal entry counts as a positive-definiteness failure.
const PIVOT_RTOL: f64 = 1e-14;

impl Matrix {
    /// Lower-triangular Cholesky factor `L` with `L Lᵀ = self`.
    ///
    /// The input must be symmetric within `1e-12` relative and positive
    /// definite; a pivot at or below tolerance reports
    /// [`LinalgError::NotPositiveDefinite`].
    pub fn cholesky(&self) -> Result<Matrix, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::DimensionMismatch("cholesky of non-square".into()));
        }
        let dev = self.symmetry_deviation();
        if dev > 1e-12 {
            return Err(LinalgError::NotSymmetric { deviation: dev });
        }
        self.cholesky_unchecked()
    }

    /// Cholesky without the symmetry pre-check; reads only the lower triangle.
    /// Used in inner loops where the caller guarantees symmetry.
    pub(crate) fn cholesky_unchecked(&self) -> Result<Matrix, LinalgError> {
        let n = self.rows();
        let max_diag = (0..n).fold(f64::MIN_POSITIVE, |m, i| m.max(self[(i, i)].abs()));
        let tol = PIVOT_RTOL * max_diag;
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= tol {
                        return Err(LinalgError::NotPositiveDefinite { pivot: s, index: i });
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// Solve `self * x = b` for SPD `self` via Cholesky.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let l = self.cholesky()?;
        let y = forward_substitute(&l, b);
        Ok(back_substitute_transposed(&l, &y))
    }

    /// Inverse of an SPD matrix from its Cholesky factor, `L⁻ᵀ L⁻¹`.
    pub fn spd_inverse_from_chol(l: &Matrix) -> Matrix {
        let n = l.rows();
        let linv = invert_lower_triangular(l);
        // Symmetric product L⁻ᵀ L⁻¹; fill both halves.
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                // column i of L⁻¹ overlaps column j only from row i downward
                let mut s = 0.0;
                for k in i..n {
                    s += linv[(k, i)] * linv[(k, j)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    /// `log det` of an SPD matrix from its Cholesky factor.
    pub fn logdet_from_chol(l: &Matrix) -> f64 {
        (0..l.rows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
    }
}

/// Solve `L y = b` for lower-triangular `L`.
pub fn forward_substitute(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let row = l.row(i);
        let s: f64 = row[..i].iter().zip(&y[..i]).map(|(a, x)| a * x).sum();
        y[i] = (b[i] - s) / row[i];
    }
    y
}

/// Solve `Lᵀ x = y` for lower-triangular `L`.
pub fn back_substitute_transposed(l: &Matrix, y: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(y.len(), n);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Inverse of a lower-triangular matrix.
pub fn invert_lower_triangular(l: &Matrix) -> Matrix {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / l[(i, i)];
        }
    }
    inv
}

/// Solve `L X = B` columnwise where `L` is lower-triangular with unit
/// diagonal assumed exact (the division is skipped).
pub fn solve_unit_lower(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    assert_eq!(b.rows(), n);
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            if lik == 0.0 {
                continue;
            }
            // x.row(i) -= lik * x.row(k)
            let (head, tail) = x.data_mut().split_at_mut(i * b.cols());
            let row_k = &head[k * b.cols()..(k + 1) * b.cols()];
            for (xi, xk) in tail[..b.cols()].iter_mut().zip(row_k) {
                *xi -= lik * xk;
            }
        }
    }
    x
}
