//! Matrix exponential by scaling and squaring with a diagonal Padé
//! approximant of order 6.

use super::Matrix;

// Coefficients of the (6,6) diagonal Padé numerator:
// c_k = (12-k)! 6! / (12! k! (6-k)!).
const PADE6: [f64; 7] = [
    1.0,
    1.0 / 2.0,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

impl Matrix {
    /// `exp(self)` for a square matrix.
    ///
    /// Scales by powers of two until the 1-norm is at most 0.5, evaluates the
    /// order-6 diagonal Padé approximant, then squares back.
    pub fn expm(&self) -> Matrix {
        assert!(self.is_square(), "expm of non-square matrix");
        let n = self.rows();
        if n == 0 {
            return Matrix::zeros(0, 0);
        }

        let norm = self.one_norm();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = self.scaled(0.5f64.powi(squarings as i32));

        // Numerator N = Σ c_k M^k, denominator D = Σ c_k (-M)^k.
        let mut numer = Matrix::identity(n);
        let mut denom = Matrix::identity(n);
        let mut power = Matrix::identity(n);
        for (k, &c) in PADE6.iter().enumerate().skip(1) {
            power = power.matmul(&scaled);
            let term = power.scaled(c);
            numer = numer.add(&term);
            if k % 2 == 0 {
                denom = denom.add(&term);
            } else {
                denom = denom.sub(&term);
            }
        }

        let mut result = denom.solve_square(&numer).expect("Padé denominator is well conditioned");
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }
}
