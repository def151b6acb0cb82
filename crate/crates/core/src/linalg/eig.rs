//! Cyclic Jacobi eigendecomposition for symmetric matrices.

use super::{LinalgError, Matrix};

/// Convergence: off-diagonal Frobenius norm at or below this times ‖S‖_F.
const OFF_RTOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix: `S = V diag(λ) Vᵀ` with
/// eigenvalues sorted ascending and orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SymEig {
    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("empty spectrum")
    }

    /// Eigenvector column `j` as a vector.
    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.eigenvectors.rows()).map(|i| self.eigenvectors[(i, j)]).collect()
    }

    /// Reconstruct `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.eigenvalues.len();
        let mut vd = self.eigenvectors.clone();
        for j in 0..n {
            for i in 0..n {
                vd[(i, j)] *= self.eigenvalues[j];
            }
        }
        vd.matmul(&self.eigenvectors.transpose())
    }
}

impl Matrix {
    /// Symmetric eigendecomposition by cyclic-by-row Jacobi rotations.
    ///
    /// The input must be symmetric within `1e-12` relative. Sweeps run until
    /// the off-diagonal Frobenius norm falls below `1e-12 ‖S‖_F`, erroring
    /// out after 100 sweeps.
    pub fn sym_eig(&self) -> Result<SymEig, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::DimensionMismatch("sym_eig of non-square".into()));
        }
        let dev = self.symmetry_deviation();
        if dev > 1e-12 {
            return Err(LinalgError::NotSymmetric { deviation: dev });
        }
        let n = self.rows();
        if n == 0 {
            return Ok(SymEig { eigenvalues: vec![], eigenvectors: Matrix::zeros(0, 0) });
        }

        let mut a = self.symmetrized();
        let mut v = Matrix::identity(n);
        let norm = a.frob_norm().max(f64::MIN_POSITIVE);
        let tol = OFF_RTOL * norm;

        let mut sweeps = 0;
        loop {
            let off = off_diag_norm(&a);
            if off <= tol {
                break;
            }
            if sweeps >= MAX_SWEEPS {
                return Err(LinalgError::NoConvergence { sweeps, off_norm: off });
            }
            sweeps += 1;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }

        // Sort ascending, permuting eigenvector columns to match.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
        let mut eigenvectors = Matrix::zeros(n, n);
        for (new_j, &old_j) in order.iter().enumerate() {
            for i in 0..n {
                eigenvectors[(i, new_j)] = v[(i, old_j)];
            }
        }
        Ok(SymEig { eigenvalues, eigenvectors })
    }
}

impl Matrix {
    /// Symmetric positive-definite square root `V diag(√λ) Vᵀ`.
    pub fn spd_sqrt(&self) -> Result<Matrix, LinalgError> {
        let eig = self.sym_eig()?;
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        let n = self.rows();
        let mut vd = eig.eigenvectors.clone();
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= -1e-10 * scale {
                return Err(LinalgError::NotPositiveDefinite { pivot: lambda, index: j });
            }
            let root = lambda.max(0.0).sqrt();
            for i in 0..n {
                vd[(i, j)] *= root;
            }
        }
        Ok(vd.matmul(&eig.eigenvectors.transpose()))
    }
}

fn off_diag_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

/// One Jacobi rotation zeroing `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() < 1e150 {
        theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
    } else {
        0.5 / theta
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    let n = a.rows();
    for i in 0..n {
        if i != p && i != q {
            let aip = a[(i, p)];
            let aiq = a[(i, q)];
            let new_p = aip - s * (aiq + tau * aip);
            let new_q = aiq + s * (aip - tau * aiq);
            a[(i, p)] = new_p;
            a[(p, i)] = new_p;
            a[(i, q)] = new_q;
            a[(q, i)] = new_q;
        }
    }
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip - s * (viq + tau * vip);
        v[(i, q)] = viq + s * (vip - tau * viq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn check_invariants(s: &Matrix, eig: &SymEig) {
        let n = s.rows();
        let vtv = eig.eigenvectors.transpose().matmul(&eig.eigenvectors);
        assert!(
            vtv.sub(&Matrix::identity(n)).frob_norm() <= 1e-10 * n as f64,
            "orthonormality"
        );
        let sv = s.matmul(&eig.eigenvectors);
        let mut vd = eig.eigenvectors.clone();
        for j in 0..n {
            for i in 0..n {
                vd[(i, j)] *= eig.eigenvalues[j];
            }
        }
        assert!(
            sv.sub(&vd).frob_norm() <= 1e-9 * s.frob_norm().max(1e-300),
            "eigen residual"
        );
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]), "ascending order");
    }

    #[test]
    fn diagonal_matrix() {
        let s = Matrix::diag(&[3.0, 1.0, 2.0]);
        let eig = s.sym_eig().unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
        check_invariants(&s, &eig);
    }

    #[test]
    fn exchange_matrix() {
        let s = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let eig = s.sym_eig().unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_hand_spectrum() {
        // [[2,1],[1,2]]: characteristic polynomial (2-λ)² = 1 → λ ∈ {1, 3}.
        let s = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let eig = s.sym_eig().unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-12);
        check_invariants(&s, &eig);
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = SplitMix64::new(0xE16);
        for dim in [2usize, 5, 13, 33, 60] {
            let s = crate::testkit::random_symmetric(&mut rng, dim);
            let eig = s.sym_eig().unwrap();
            check_invariants(&s, &eig);
            let rel = eig.reconstruct().sub(&s).frob_norm() / s.frob_norm();
            assert!(rel < 1e-8, "dim {dim}: reconstruction {rel:e}");
        }
    }

    #[test]
    fn zero_matrix() {
        let eig = Matrix::zeros(4, 4).sym_eig().unwrap();
        assert!(eig.eigenvalues.iter().all(|&x| x == 0.0));
    }
}
