//! Householder QR least squares.

use super::{LinalgError, Matrix};

/// Rank tolerance relative to the largest |R_ii|.
const RANK_RTOL: f64 = 1e-12;

impl Matrix {
    /// Least-squares solve: the `X` minimizing `‖self·X − B‖_F`.
    ///
    /// Factors `self` (which must have at least as many rows as columns and
    /// full column rank) by Householder reflections, applies the reflectors
    /// to `B`, and back-substitutes against `R`.
    pub fn solve_least_squares(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        let (m, n) = (self.rows(), self.cols());
        if b.rows() != m {
            return Err(LinalgError::DimensionMismatch(format!(
                "lstsq: A is {m}x{n}, B has {} rows",
                b.rows()
            )));
        }
        if m < n {
            return Err(LinalgError::DimensionMismatch(format!(
                "lstsq: underdetermined {m}x{n} system"
            )));
        }
        let mut r = self.clone();
        let mut rhs = b.clone();

        // Householder triangularization, reflectors applied to rhs in step.
        for k in 0..n {
            let mut norm2 = 0.0;
            for i in k..m {
                norm2 += r[(i, k)] * r[(i, k)];
            }
            let norm = norm2.sqrt();
            if norm == 0.0 {
                return Err(LinalgError::RankDeficient { diag: 0.0, index: k });
            }
            let alpha = if r[(k, k)] >= 0.0 { -norm } else { norm };
            // v = x - alpha e_k, normalized so v[k] = 1
            let vk = r[(k, k)] - alpha;
            let mut v = vec![0.0; m - k];
            v[0] = 1.0;
            for i in (k + 1)..m {
                v[i - k] = r[(i, k)] / vk;
            }
            let beta = -vk / alpha; // 2 / (vᵀv) for this scaling

            apply_reflector(&mut r, k, &v, beta, k);
            apply_reflector(&mut rhs, k, &v, beta, 0);
            r[(k, k)] = alpha;
            for i in (k + 1)..m {
                r[(i, k)] = 0.0;
            }
        }

        let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(r[(i, i)].abs()));
        for i in 0..n {
            let d = r[(i, i)].abs();
            if d < RANK_RTOL * max_diag {
                return Err(LinalgError::RankDeficient { diag: d, index: i });
            }
        }

        // Back substitution on the leading n rows of rhs.
        let mut x = Matrix::zeros(n, b.cols());
        for j in 0..b.cols() {
            for i in (0..n).rev() {
                let mut s = rhs[(i, j)];
                for k in (i + 1)..n {
                    s -= r[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s / r[(i, i)];
            }
        }
        Ok(x)
    }

    /// Solve the square system `self · X = B` (full rank required).
    pub fn solve_square(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::DimensionMismatch("solve_square on non-square".into()));
        }
        self.solve_least_squares(b)
    }
}

/// Apply `I - beta v vᵀ` to rows `k..` of `a`, columns `col0..`.
fn apply_reflector(a: &mut Matrix, k: usize, v: &[f64], beta: f64, col0: usize) {
    let m = a.rows();
    for j in col0..a.cols() {
        let mut s = 0.0;
        for i in k..m {
            s += v[i - k] * a[(i, j)];
        }
        s *= beta;
        for i in k..m {
            a[(i, j)] -= s * v[i - k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::rng::SplitMix64;

    #[test]
    fn identity_returns_rhs() {
        let b = Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let x = Matrix::identity(2).solve_least_squares(&b).unwrap();
        assert!(x.sub(&b).max_abs() < 1e-14);
    }

    #[test]
    fn mean_of_two_points() {
        let a = Matrix::from_rows(&[&[1.0], &[1.0]]);
        let b = Matrix::from_rows(&[&[0.0], &[2.0]]);
        let x = a.solve_least_squares(&b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn line_fit_matches_normal_equations() {
        // Fit y = c0 + c1 t through (0,0), (1,1), (2,2): exact line c = (0,1).
        let a = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 1.0], &[1.0, 2.0]]);
        let b = Matrix::from_rows(&[&[0.0], &[1.0], &[2.0]]);
        let x = a.solve_least_squares(&b).unwrap();
        assert!((x[(0, 0)]).abs() < 1e-14);
        assert!((x[(1, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn residual_orthogonality_on_random_systems() {
        let mut rng = SplitMix64::new(31);
        for &(m, n, k) in &[(6usize, 3usize, 2usize), (20, 7, 4), (40, 15, 1)] {
            let a = crate::testkit::random_matrix(&mut rng, m, n);
            let b = crate::testkit::random_matrix(&mut rng, m, k);
            let x = a.solve_least_squares(&b).unwrap();
            let resid = a.matmul(&x).sub(&b);
            let ortho = a.transpose().matmul(&resid).frob_norm();
            assert!(
                ortho <= 1e-8 * a.frob_norm() * b.frob_norm(),
                "orthogonality {ortho:e}"
            );
        }
    }

    #[test]
    fn flags_rank_deficiency() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        let b = Matrix::from_rows(&[&[1.0], &[1.0], &[1.0]]);
        assert!(matches!(
            a.solve_least_squares(&b),
            Err(LinalgError::RankDeficient { .. })
        ));
    }

    #[test]
    fn square_solve() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let b = Matrix::from_rows(&[&[5.0], &[10.0]]);
        let x = a.solve_square(&b).unwrap();
        let r = a.matvec(&[x[(0, 0)], x[(1, 0)]]);
        assert!((r[0] - 5.0).abs() < 1e-12 && (r[1] - 10.0).abs() < 1e-12);
        let _ = dot(&r, &r);
    }
}
