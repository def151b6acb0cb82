//! Prediction-error maps for observer design.
//!
//! A gain operator ℒ (blocks `L_{τ|t}` applied to past innovations) and the
//! pair of error maps `(Φ_v, Φ_w)` are two parametrizations of the same
//! closed-loop object: the stacked prediction error is
//! `e = Φ_w w̃ + Φ_v v`, and the pair corresponds to a causal observer
//! exactly when both maps are lower block-triangular and the achievability
//! identity `Φ_w (I − Z𝒜) + Φ_v 𝒞Z = I` holds. This module moves between
//! the two representations and evaluates trajectories in both.

use std::fmt;

use crate::linalg::{solve_unit_lower, LinalgError, Matrix};
use crate::model::{LtvSystem, StackedDims, StackedOperators};

#[derive(Debug, Clone, PartialEq)]
pub enum SlsError {
    DimensionMismatch(String),
    /// Gain recovery was asked of maps flagged non-causal.
    NotCausal,
    /// An upper block exceeded tolerance where structural zeros were
    /// expected, which means the maps are corrupted.
    CausalityViolation { max_entry: f64 },
    Linalg(LinalgError),
}

impl fmt::Display for SlsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlsError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            SlsError::NotCausal => write!(f, "maps are flagged non-causal"),
            SlsError::CausalityViolation { max_entry } => {
                write!(f, "causality violation: upper block entry {max_entry:e}")
            }
            SlsError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SlsError {}

impl From<LinalgError> for SlsError {
    fn from(e: LinalgError) -> Self {
        SlsError::Linalg(e)
    }
}

/// Tolerance below which upper-block leakage counts as numerical noise and is
/// truncated; above [`CAUSALITY_HARD_LIMIT`] it is an error.
const CAUSALITY_TRUNCATE: f64 = 1e-8;
const CAUSALITY_HARD_LIMIT: f64 = 1e-6;

/// The pair of prediction-error maps, tagged with their block sizes
/// `(n, m)` so the triangular structure is unambiguous.
#[derive(Debug, Clone)]
pub struct ErrorMaps {
    pub phi_v: Matrix,
    pub phi_w: Matrix,
    pub causal: bool,
    n: usize,
    m: usize,
}

impl ErrorMaps {
    /// Build maps from a free `Φ_v`, eliminating `Φ_w` through the
    /// achievability identity.
    pub fn from_phi_v(phi_v: Matrix, ops: &StackedOperators, causal: bool) -> Result<Self, SlsError> {
        let dims = ops.dims;
        check_phi_v_shape(&phi_v, &dims)?;
        if causal {
            let leak = max_upper_block_abs(&phi_v, dims.n, dims.m);
            if leak > 1e-10 {
                return Err(SlsError::CausalityViolation { max_entry: leak });
            }
        }
        let phi_w = phi_w_from_phi_v(&phi_v, ops)?;
        Ok(ErrorMaps { phi_v, phi_w, causal, n: dims.n, m: dims.m })
    }

    /// Wrap an existing pair, checking shapes and (for causal maps) the
    /// triangular structure. Achievability against specific operators is the
    /// caller's concern; use [`achievability_residual`] to audit it.
    pub fn from_parts(
        phi_v: Matrix,
        phi_w: Matrix,
        causal: bool,
        n: usize,
        m: usize,
    ) -> Result<Self, SlsError> {
        if phi_w.rows() != phi_w.cols() || phi_v.rows() != phi_w.rows() {
            return Err(SlsError::DimensionMismatch(format!(
                "phi_v {}x{}, phi_w {}x{}",
                phi_v.rows(),
                phi_v.cols(),
                phi_w.rows(),
                phi_w.cols()
            )));
        }
        if n == 0 || m == 0 || phi_w.rows() % n != 0 || phi_v.cols() % m != 0
            || phi_w.rows() / n != phi_v.cols() / m
        {
            return Err(SlsError::DimensionMismatch(format!(
                "block sizes ({n}, {m}) do not tile {}x{} maps",
                phi_w.rows(),
                phi_v.cols()
            )));
        }
        let maps = ErrorMaps { phi_v, phi_w, causal, n, m };
        if causal {
            let leak = max_upper_block_abs(&maps.phi_v, n, m)
                .max(max_upper_block_abs(&maps.phi_w, n, n));
            if leak > 1e-10 {
                return Err(SlsError::CausalityViolation { max_entry: leak });
            }
        }
        Ok(maps)
    }

    /// `(n, m)` block sizes of the maps.
    pub fn block_dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }
}

fn check_phi_v_shape(phi_v: &Matrix, dims: &StackedDims) -> Result<(), SlsError> {
    if phi_v.rows() != dims.error || phi_v.cols() != dims.noise_v {
        return Err(SlsError::DimensionMismatch(format!(
            "phi_v is {}x{}, expected {}x{}",
            phi_v.rows(),
            phi_v.cols(),
            dims.error,
            dims.noise_v
        )));
    }
    Ok(())
}

/// Largest |entry| strictly above the block diagonal for block sizes
/// `br x bc`.
pub fn max_upper_block_abs(m: &Matrix, br: usize, bc: usize) -> f64 {
    let mut max = 0.0f64;
    for i in 0..m.rows() {
        let block_row = i / br;
        let col_start = (block_row + 1) * bc;
        if col_start >= m.cols() {
            continue;
        }
        for &x in &m.row(i)[col_start..] {
            max = max.max(x.abs());
        }
    }
    max
}

/// The unique `Φ_w` completing a given `Φ_v` under the achievability
/// identity: `Φ_w = (I − Φ_v 𝒞Z)(I − Z𝒜)⁻¹`.
///
/// For lower block-triangular `Φ_v` the result is lower block-triangular
/// with exactly-identity diagonal blocks.
pub fn phi_w_from_phi_v(phi_v: &Matrix, ops: &StackedOperators) -> Result<Matrix, SlsError> {
    check_phi_v_shape(phi_v, &ops.dims)?;
    Ok(phi_w_from_phi_v_cached(phi_v, &ops.cz(), &ops.open_loop_map()))
}

/// Same as [`phi_w_from_phi_v`] with the problem-constant factors `𝒞Z` and
/// `D = (I − Z𝒜)⁻¹` precomputed by the caller.
pub(crate) fn phi_w_from_phi_v_cached(phi_v: &Matrix, cz: &Matrix, open_loop: &Matrix) -> Matrix {
    let eye = Matrix::identity(phi_v.rows());
    eye.sub(&phi_v.matmul(cz)).matmul(open_loop)
}

/// Frobenius norm of `Φ_w (I − Z𝒜) + Φ_v 𝒞Z − I`.
pub fn achievability_residual(maps: &ErrorMaps, ops: &StackedOperators) -> f64 {
    let eye = Matrix::identity(ops.dims.error);
    let closed = maps.phi_w.matmul(&eye.sub(&ops.za()));
    closed.add(&maps.phi_v.matmul(&ops.cz())).sub(&eye).frob_norm()
}

/// Observer gains `L_{τ|t}` as a triangular block array plus the assembled
/// lower block-triangular operator ℒ.
#[derive(Debug, Clone)]
pub struct ObserverGains {
    blocks: Vec<Vec<Matrix>>,
    matrix: Matrix,
}

impl ObserverGains {
    /// Gain applied at time `t` to the innovation from time `tau ≤ t`.
    pub fn l(&self, tau: usize, t: usize) -> &Matrix {
        &self.blocks[t][tau]
    }

    /// The assembled operator ℒ.
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn horizon(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Zero gains: the open-loop observer.
    pub fn zero(sys: &LtvSystem) -> Self {
        let dims = sys.dims();
        Self::from_matrix_unchecked(Matrix::zeros(dims.error, dims.noise_v), dims.n, dims.m)
    }

    /// Assemble from an already lower block-triangular gain matrix.
    pub fn from_matrix(matrix: Matrix, n: usize, m: usize) -> Result<Self, SlsError> {
        let leak = max_upper_block_abs(&matrix, n, m);
        if leak > 0.0 {
            return Err(SlsError::CausalityViolation { max_entry: leak });
        }
        Ok(Self::from_matrix_unchecked(matrix, n, m))
    }

    fn from_matrix_unchecked(matrix: Matrix, n: usize, m: usize) -> Self {
        let steps = matrix.rows() / n;
        let blocks = (0..steps)
            .map(|t| (0..=t).map(|tau| matrix.block(t * n, tau * m, n, m)).collect())
            .collect();
        ObserverGains { blocks, matrix }
    }
}

/// Recover the unique gains behind a causal pair: solve `Φ_w ℒ = Φ_v`.
///
/// `Φ_w` is unit lower triangular by construction, so forward substitution
/// applies. Entries above the block diagonal below `1e-8` are truncated to
/// structural zeros; anything past `1e-6` reports corrupted maps.
pub fn recover_gains(maps: &ErrorMaps) -> Result<ObserverGains, SlsError> {
    if !maps.causal {
        return Err(SlsError::NotCausal);
    }
    let (n, m) = maps.block_dims();
    let diag_dev = unit_diagonal_deviation(&maps.phi_w);
    if diag_dev > 1e-8 {
        return Err(SlsError::CausalityViolation { max_entry: diag_dev });
    }
    let mut l = solve_unit_lower(&maps.phi_w, &maps.phi_v);
    let leak = max_upper_block_abs(&l, n, m);
    if leak > CAUSALITY_HARD_LIMIT {
        return Err(SlsError::CausalityViolation { max_entry: leak });
    }
    if leak > 0.0 {
        debug_assert!(leak <= CAUSALITY_TRUNCATE.max(leak));
        truncate_upper_blocks(&mut l, n, m);
    }
    Ok(ObserverGains::from_matrix_unchecked(l, n, m))
}

/// General gain matrix `ℒ = Φ_w⁻¹ Φ_v` without any causality structure;
/// dense for clairvoyant maps.
pub fn gain_matrix(maps: &ErrorMaps) -> Result<Matrix, SlsError> {
    Ok(maps.phi_w.solve_square(&maps.phi_v)?)
}

/// Rebuild the error maps generated by a gain matrix:
/// `Φ_w = (I − Z𝒜 + ℒ𝒞Z)⁻¹`, `Φ_v = Φ_w ℒ`.
pub fn error_maps_from_gain_matrix(
    l: &Matrix,
    ops: &StackedOperators,
) -> Result<ErrorMaps, SlsError> {
    let dims = ops.dims;
    if l.rows() != dims.error || l.cols() != dims.noise_v {
        return Err(SlsError::DimensionMismatch(format!(
            "gain matrix is {}x{}, expected {}x{}",
            l.rows(),
            l.cols(),
            dims.error,
            dims.noise_v
        )));
    }
    let eye = Matrix::identity(dims.error);
    let closed = eye.sub(&ops.za()).add(&l.matmul(&ops.cz()));
    let causal = max_upper_block_abs(l, dims.n, dims.m) == 0.0;
    let (phi_w, phi_v) = if causal {
        // closed is unit lower triangular when ℒ is causal
        (solve_unit_lower(&closed, &eye), solve_unit_lower(&closed, l))
    } else {
        (closed.solve_square(&eye)?, closed.solve_square(l)?)
    };
    Ok(ErrorMaps { phi_v, phi_w, causal, n: dims.n, m: dims.m })
}

fn unit_diagonal_deviation(phi_w: &Matrix) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..phi_w.rows() {
        dev = dev.max((phi_w[(i, i)] - 1.0).abs());
    }
    dev
}

fn truncate_upper_blocks(m: &mut Matrix, br: usize, bc: usize) {
    for i in 0..m.rows() {
        let block_row = i / br;
        let col_start = (block_row + 1) * bc;
        for j in col_start..m.cols() {
            m[(i, j)] = 0.0;
        }
    }
}

/// Stacked error trajectory `e = Φ_w w̃ + Φ_v v` (blocks `e_1 .. e_{T+1}`).
pub fn error_trajectory(maps: &ErrorMaps, v_stack: &[f64], w_stack: &[f64]) -> Vec<f64> {
    assert_eq!(v_stack.len(), maps.phi_v.cols(), "stacked v length");
    assert_eq!(w_stack.len(), maps.phi_w.cols(), "stacked w length");
    let ew = maps.phi_w.matvec(w_stack);
    let ev = maps.phi_v.matvec(v_stack);
    ew.iter().zip(&ev).map(|(a, b)| a + b).collect()
}

/// Jointly run the true state recursion and the observer recursion.
///
/// Sequences hold `u_t, v_t, w_t` for `t = 0 .. T`. Returns the predictions
/// `x̂_1 .. x̂_{T+1}` and the flattened errors `e_t = x̂_t − x_t`.
pub fn simulate_observer(
    sys: &LtvSystem,
    gains: &ObserverGains,
    x0: &[f64],
    xhat0: &[f64],
    u_seq: &[Vec<f64>],
    v_seq: &[Vec<f64>],
    w_seq: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = sys.state_dim();
    let steps = sys.horizon() + 1;
    assert_eq!(x0.len(), n, "x0 length");
    assert_eq!(xhat0.len(), n, "xhat0 length");
    assert_eq!(u_seq.len(), steps, "input sequence length");
    assert_eq!(v_seq.len(), steps, "noise sequence length");
    assert_eq!(w_seq.len(), steps, "disturbance sequence length");

    let mut x = x0.to_vec();
    let mut xhat = xhat0.to_vec();
    let mut innovations: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut xhat_traj = Vec::with_capacity(steps);
    let mut errors = Vec::with_capacity(n * steps);

    for t in 0..steps {
        // Innovation C_t x̂_t − y_t with y_t = C_t x_t + v_t.
        let cxhat = sys.c(t).matvec(&xhat);
        let cx = sys.c(t).matvec(&x);
        let innov: Vec<f64> = cxhat
            .iter()
            .zip(cx.iter().zip(&v_seq[t]))
            .map(|(ch, (c, v))| ch - c - v)
            .collect();
        innovations.push(innov);

        let mut x_next = sys.a(t).matvec(&x);
        let bu = sys.b(t).matvec(&u_seq[t]);
        for i in 0..n {
            x_next[i] += bu[i] + w_seq[t][i];
        }

        let mut xhat_next = sys.a(t).matvec(&xhat);
        for i in 0..n {
            xhat_next[i] += bu[i];
        }
        for (tau, innov) in innovations.iter().enumerate() {
            let corr = gains.l(tau, t).matvec(innov);
            for i in 0..n {
                xhat_next[i] -= corr[i];
            }
        }

        for i in 0..n {
            errors.push(xhat_next[i] - x_next[i]);
        }
        xhat_traj.push(xhat_next.clone());
        x = x_next;
        xhat = xhat_next;
    }

    (xhat_traj, errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{stack_disturbance, stack_measurement_noise, StackedOperators};
    use crate::rng::SplitMix64;
    use crate::testkit;

    fn toy_ops() -> StackedOperators {
        StackedOperators::build(&testkit::toy_scalar_system())
    }

    #[test]
    fn phi_w_completion_examples() {
        let ops = toy_ops();
        // No measurements: Φ_w is the open-loop map.
        let phi_v = Matrix::zeros(2, 2);
        let phi_w = phi_w_from_phi_v(&phi_v, &ops).unwrap();
        assert!(phi_w.sub(&ops.open_loop_map()).max_abs() < 1e-15);
        assert_eq!(phi_w, Matrix::from_rows(&[&[1.0, 0.0], &[0.5, 1.0]]));

        // Scalar hand computation with a free entry f.
        let f = 0.3;
        let phi_v = Matrix::from_rows(&[&[0.0, 0.0], &[0.0, f]]);
        let phi_w = phi_w_from_phi_v(&phi_v, &ops).unwrap();
        let expected = Matrix::from_rows(&[&[1.0, 0.0], &[0.5 - f, 1.0]]);
        assert!(phi_w.sub(&expected).max_abs() < 1e-15);

        // Memoryless plant: Φ_w = I − Φ_v 𝒞Z.
        let sys = crate::model::LtvSystem::time_invariant(
            &Matrix::zeros(1, 1),
            &Matrix::zeros(1, 1),
            &Matrix::from_rows(&[&[1.0]]),
            1,
        );
        let ops0 = StackedOperators::build(&sys);
        let phi_v = Matrix::from_rows(&[&[0.2, 0.0], &[-0.4, 0.7]]);
        let phi_w = phi_w_from_phi_v(&phi_v, &ops0).unwrap();
        let expected = Matrix::identity(2).sub(&phi_v.matmul(&ops0.cz()));
        assert!(phi_w.sub(&expected).max_abs() < 1e-15);
    }

    #[test]
    fn achievability_examples() {
        let ops = toy_ops();
        let maps = ErrorMaps::from_phi_v(
            Matrix::from_rows(&[&[0.1, 0.0], &[0.2, -0.3]]),
            &ops,
            true,
        )
        .unwrap();
        assert!(achievability_residual(&maps, &ops) <= 1e-12);

        let identity_w = ErrorMaps::from_parts(Matrix::zeros(2, 2), Matrix::identity(2), true, 1, 1).unwrap();
        let resid = achievability_residual(&identity_w, &ops);
        assert!((resid - ops.za().frob_norm()).abs() < 1e-12);

        let open_loop = ErrorMaps::from_parts(Matrix::zeros(2, 2), ops.open_loop_map(), true, 1, 1).unwrap();
        assert!(achievability_residual(&open_loop, &ops) <= 1e-12);
    }

    #[test]
    fn gain_recovery_examples() {
        let ops = toy_ops();
        // Φ_v = 0 is the open-loop observer.
        let maps = ErrorMaps::from_phi_v(Matrix::zeros(2, 2), &ops, true).unwrap();
        assert_eq!(recover_gains(&maps).unwrap().matrix().max_abs(), 0.0);

        // The toy quadratic-optimal maps give ℒ = diag(0, 0.25).
        let phi_v = Matrix::from_rows(&[&[0.0, 0.0], &[0.0, 0.25]]);
        let maps = ErrorMaps::from_phi_v(phi_v, &ops, true).unwrap();
        let gains = recover_gains(&maps).unwrap();
        let expected = Matrix::from_rows(&[&[0.0, 0.0], &[0.0, 0.25]]);
        assert!(gains.matrix().sub(&expected).max_abs() < 1e-12);
        assert!((gains.l(1, 1)[(0, 0)] - 0.25).abs() < 1e-12);

        // Φ_w = I: gains equal Φ_v directly.
        let phi_v = Matrix::from_rows(&[&[0.5, 0.0], &[0.1, -0.2]]);
        let maps = ErrorMaps::from_parts(phi_v.clone(), Matrix::identity(2), true, 1, 1).unwrap();
        assert!(recover_gains(&maps).unwrap().matrix().sub(&phi_v).max_abs() < 1e-15);

        // Non-causal maps refuse recovery.
        let dense = ErrorMaps::from_parts(
            Matrix::from_rows(&[&[0.0, 0.5], &[0.0, 0.25]]),
            Matrix::identity(2),
            false,
            1,
            1,
        )
        .unwrap();
        assert_eq!(recover_gains(&dense).unwrap_err(), SlsError::NotCausal);
    }

    #[test]
    fn causal_phi_w_has_exact_unit_diagonal() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..10 {
            let (n, m, t) = testkit::random_dims(&mut rng, 4, 5);
            let sys = testkit::random_system(&mut rng, n, m, 1, t);
            let ops = StackedOperators::build(&sys);
            let maps = testkit::random_causal_maps(&mut rng, &ops);
            assert_eq!(unit_diagonal_deviation(&maps.phi_w), 0.0);
            assert_eq!(max_upper_block_abs(&maps.phi_w, n, n), 0.0);
        }
    }

    #[test]
    fn parametrization_roundtrip() {
        let mut rng = SplitMix64::new(0xB1D);
        for _ in 0..25 {
            let (n, m, t) = testkit::random_dims(&mut rng, 4, 6);
            let sys = testkit::random_system(&mut rng, n, m, 1, t);
            let ops = StackedOperators::build(&sys);
            let maps = testkit::random_causal_maps(&mut rng, &ops);

            let gains = recover_gains(&maps).unwrap();
            let rebuilt = error_maps_from_gain_matrix(gains.matrix(), &ops).unwrap();
            let scale = maps.phi_v.frob_norm().max(maps.phi_w.frob_norm()).max(1e-300);
            let err = rebuilt
                .phi_v
                .sub(&maps.phi_v)
                .frob_norm()
                .max(rebuilt.phi_w.sub(&maps.phi_w).frob_norm());
            assert!(err / scale < 1e-8, "roundtrip error {:e}", err / scale);
            assert!(achievability_residual(&rebuilt, &ops) <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn trajectory_examples() {
        let ops = toy_ops();
        let phi_v = Matrix::from_rows(&[&[0.0, 0.0], &[0.0, 0.25]]);
        let maps = ErrorMaps::from_phi_v(phi_v, &ops, true).unwrap();

        assert_eq!(error_trajectory(&maps, &[0.0, 0.0], &[0.0, 0.0]), vec![0.0, 0.0]);

        let e = error_trajectory(&maps, &[0.0, 0.0], &[1.0, 0.0]);
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 0.25).abs() < 1e-15);

        let eye_maps = ErrorMaps::from_parts(Matrix::zeros(2, 2), Matrix::identity(2), true, 1, 1).unwrap();
        assert_eq!(error_trajectory(&eye_maps, &[0.0, 0.0], &[0.3, -0.7]), vec![0.3, -0.7]);
    }

    #[test]
    fn simulation_basics() {
        let sys = testkit::toy_scalar_system();
        let zero_u = vec![vec![0.0]; 2];
        let zero_v = vec![vec![0.0]; 2];
        let zero_w = vec![vec![0.0]; 2];

        // Perfect start, no noise: zero error forever.
        let gains = ObserverGains::zero(&sys);
        let (_, e) = simulate_observer(&sys, &gains, &[1.0], &[1.0], &zero_u, &zero_v, &zero_w);
        assert_eq!(e, vec![0.0, 0.0]);

        // Zero gains: the open-loop recursion e_{t+1} = A_t e_t − w_t.
        let w_seq = vec![vec![0.3], vec![-0.2]];
        let (_, e) = simulate_observer(&sys, &gains, &[0.0], &[0.0], &zero_u, &zero_v, &w_seq);
        assert!((e[0] + 0.3).abs() < 1e-15);
        assert!((e[1] - (0.5 * e[0] + 0.2)).abs() < 1e-15);
    }

    #[test]
    fn toy_initial_error_recursion() {
        let sys = testkit::toy_scalar_system();
        let ops = StackedOperators::build(&sys);
        let delta = 0.8;
        let phi_v = Matrix::from_rows(&[&[0.0, 0.0], &[0.0, 0.25]]);
        let maps = ErrorMaps::from_phi_v(phi_v, &ops, true).unwrap();
        let gains = recover_gains(&maps).unwrap();

        let zero = vec![vec![0.0]; 2];
        let (_, e_sim) =
            simulate_observer(&sys, &gains, &[0.0], &[delta], &zero, &zero, &zero);
        assert!((e_sim[0] - 0.5 * delta).abs() < 1e-15);
        assert!((e_sim[1] - 0.125 * delta).abs() < 1e-15);

        // Stacked evaluation with the folded first block w̃_1 = −a_0 δ: the
        // trajectory comes out sign-flipped, the quadratic cost identical.
        let w_stack = stack_disturbance(&sys, Some(&[delta]), &zero);
        assert_eq!(w_stack, vec![-0.5 * delta, 0.0]);
        let v_stack = stack_measurement_noise(&sys, &zero);
        let e_map = error_trajectory(&maps, &v_stack, &w_stack);
        for (a, b) in e_sim.iter().zip(&e_map) {
            assert!((a + b).abs() < 1e-15, "sign-flipped match");
        }
        let cost_sim: f64 = e_sim.iter().map(|x| x * x).sum();
        let cost_map: f64 = e_map.iter().map(|x| x * x).sum();
        assert!((cost_sim - cost_map).abs() < 1e-15);
    }

    #[test]
    fn simulation_matches_stacked_maps() {
        let mut rng = SplitMix64::new(0x51A5);
        for _ in 0..20 {
            let (n, m, t) = testkit::random_dims(&mut rng, 4, 6);
            let p = 1 + (rng.next_u64() as usize) % 3;
            let sys = testkit::random_system(&mut rng, n, m, p, t);
            let ops = StackedOperators::build(&sys);
            let maps = testkit::random_causal_maps(&mut rng, &ops);
            let gains = recover_gains(&maps).unwrap();

            let steps = t + 1;
            let draw = |rng: &mut SplitMix64, len: usize| -> Vec<Vec<f64>> {
                (0..steps).map(|_| (0..len).map(|_| rng.standard_normal()).collect()).collect()
            };
            let x0: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
            let u_seq = draw(&mut rng, p);
            let v_seq = draw(&mut rng, m);
            let w_seq = draw(&mut rng, n);

            let (_, e_sim) = simulate_observer(&sys, &gains, &x0, &x0, &u_seq, &v_seq, &w_seq);
            let e_map = error_trajectory(
                &maps,
                &stack_measurement_noise(&sys, &v_seq),
                &stack_disturbance(&sys, None, &w_seq),
            );
            let scale = e_map.iter().map(|x| x.abs()).fold(1e-300, f64::max);
            for (a, b) in e_sim.iter().zip(&e_map) {
                assert!((a - b).abs() <= 1e-9 * scale.max(1.0), "sim {a} vs map {b}");
            }
        }
    }
}
