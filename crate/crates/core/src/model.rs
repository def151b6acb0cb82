//! Linear time-varying system descriptions, noise and cost data, and the
//! stacked operators behind the finite-horizon error dynamics.
//!
//! Over a horizon of `T` prediction steps the stacked error vector holds the
//! blocks `e_1 .. e_{T+1}`, the stacked measurement noise holds `v_0 .. v_T`,
//! and the stacked disturbance holds the effective blocks
//! `w̃_{k} = −w_{k−1}` with the initial estimate mismatch folded into the
//! first one: `w̃_1 = −A_0 (x̂_0 − x_0) − w_0`. One fixed sign convention is
//! used everywhere; quadratic costs are unaffected by it.

use std::fmt;

use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    DimensionMismatch(String),
    /// A noise bound or covariance block failed its definiteness check.
    SingularBlock { which: &'static str, index: usize },
    Parse(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            ModelError::SingularBlock { which, index } => {
                write!(f, "{which} block {index} is singular or not positive definite")
            }
            ModelError::Parse(what) => write!(f, "parse error: {what}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<LinalgError> for ModelError {
    fn from(e: LinalgError) -> Self {
        ModelError::DimensionMismatch(e.to_string())
    }
}

/// Discrete linear time-varying system over a fixed horizon:
/// `x_{t+1} = A_t x_t + B_t u_t + w_t`, `y_t = C_t x_t + v_t` for
/// `t = 0 .. T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtvSystem {
    n: usize,
    m: usize,
    p: usize,
    horizon: usize,
    a_seq: Vec<Matrix>,
    b_seq: Vec<Matrix>,
    c_seq: Vec<Matrix>,
}

impl LtvSystem {
    pub fn new(
        n: usize,
        m: usize,
        p: usize,
        horizon: usize,
        a_seq: Vec<Matrix>,
        b_seq: Vec<Matrix>,
        c_seq: Vec<Matrix>,
    ) -> Result<Self, ModelError> {
        if n == 0 || m == 0 {
            return Err(ModelError::DimensionMismatch("state and output dims must be positive".into()));
        }
        let steps = horizon + 1;
        if a_seq.len() != steps || b_seq.len() != steps || c_seq.len() != steps {
            return Err(ModelError::DimensionMismatch(format!(
                "expected {steps} blocks per sequence, got A:{} B:{} C:{}",
                a_seq.len(),
                b_seq.len(),
                c_seq.len()
            )));
        }
        for (t, a) in a_seq.iter().enumerate() {
            if a.rows() != n || a.cols() != n {
                return Err(ModelError::DimensionMismatch(format!("A_{t} is not {n}x{n}")));
            }
        }
        for (t, b) in b_seq.iter().enumerate() {
            if b.rows() != n || b.cols() != p {
                return Err(ModelError::DimensionMismatch(format!("B_{t} is not {n}x{p}")));
            }
        }
        for (t, c) in c_seq.iter().enumerate() {
            if c.rows() != m || c.cols() != n {
                return Err(ModelError::DimensionMismatch(format!("C_{t} is not {m}x{n}")));
            }
        }
        Ok(Self { n, m, p, horizon, a_seq, b_seq, c_seq })
    }

    /// Time-invariant system: the same `(A, B, C)` repeated over the horizon.
    pub fn time_invariant(a: &Matrix, b: &Matrix, c: &Matrix, horizon: usize) -> Self {
        let steps = horizon + 1;
        Self::new(
            a.rows(),
            c.rows(),
            b.cols(),
            horizon,
            vec![a.clone(); steps],
            vec![b.clone(); steps],
            vec![c.clone(); steps],
        )
        .expect("consistent time-invariant blocks")
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn output_dim(&self) -> usize {
        self.m
    }

    pub fn input_dim(&self) -> usize {
        self.p
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn a(&self, t: usize) -> &Matrix {
        &self.a_seq[t]
    }

    pub fn b(&self, t: usize) -> &Matrix {
        &self.b_seq[t]
    }

    pub fn c(&self, t: usize) -> &Matrix {
        &self.c_seq[t]
    }

    pub fn is_time_invariant(&self) -> bool {
        self.a_seq.iter().all(|a| *a == self.a_seq[0])
            && self.b_seq.iter().all(|b| *b == self.b_seq[0])
            && self.c_seq.iter().all(|c| *c == self.c_seq[0])
    }

    /// Stacked dimensions of this system.
    pub fn dims(&self) -> StackedDims {
        StackedDims {
            n: self.n,
            m: self.m,
            p: self.p,
            horizon: self.horizon,
            error: self.n * (self.horizon + 1),
            noise_v: self.m * (self.horizon + 1),
        }
    }
}

/// Dimension record shared by the stacked-space types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackedDims {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub horizon: usize,
    /// Stacked error/disturbance length `n (T+1)`.
    pub error: usize,
    /// Stacked measurement-noise length `m (T+1)`.
    pub noise_v: usize,
}

impl StackedDims {
    pub fn steps(&self) -> usize {
        self.horizon + 1
    }
}

/// Block-downshift operator and block-diagonal system stacks.
///
/// The stacked space has `T+1` blocks. `a_stack = blkdiag(A_1, .., A_T, 0)`
/// and `c_stack = blkdiag(0, C_1, .., C_T)`: with these, `Z·a_stack` places
/// `A_k` on block row `k+1` and `c_stack·Z` places `C_k` on block row `k+1`,
/// which is exactly how the stepwise error recursion stacks (`A_0` and `C_0`
/// never act on a stacked block because `e_0 = 0` is folded into the first
/// disturbance).
#[derive(Debug, Clone)]
pub struct StackedOperators {
    pub z: Matrix,
    pub a_stack: Matrix,
    pub c_stack: Matrix,
    pub dims: StackedDims,
}

impl StackedOperators {
    pub fn build(sys: &LtvSystem) -> Self {
        let dims = sys.dims();
        let (n, m, steps) = (dims.n, dims.m, dims.steps());

        let mut z = Matrix::zeros(dims.error, dims.error);
        for k in 1..steps {
            z.set_block(k * n, (k - 1) * n, &Matrix::identity(n));
        }

        let mut a_blocks: Vec<Matrix> = (1..steps).map(|t| sys.a(t).clone()).collect();
        a_blocks.push(Matrix::zeros(n, n));
        let a_stack = Matrix::block_diag(&a_blocks);

        let mut c_blocks: Vec<Matrix> = vec![Matrix::zeros(m, n)];
        c_blocks.extend((1..steps).map(|t| sys.c(t).clone()));
        let c_stack = Matrix::block_diag(&c_blocks);

        StackedOperators { z, a_stack, c_stack, dims }
    }

    /// `Z · a_stack`, the strictly lower block-triangular state propagator.
    pub fn za(&self) -> Matrix {
        self.z.matmul(&self.a_stack)
    }

    /// `c_stack · Z`, the strictly lower block-triangular delayed output map.
    pub fn cz(&self) -> Matrix {
        self.c_stack.matmul(&self.z)
    }

    /// `(I − Z·a_stack)⁻¹`, unit lower block-triangular.
    pub fn open_loop_map(&self) -> Matrix {
        let eye = Matrix::identity(self.dims.error);
        crate::linalg::solve_unit_lower(&eye.sub(&self.za()), &eye)
    }
}

/// Ellipsoidal noise bounds and Gaussian covariances, block per time step.
///
/// The bounds are `‖H_v v_t‖ ≤ 1`, `‖H_w w_t‖ ≤ 1` with every block square
/// invertible, so the stacked sets are full-dimensional ellipsoids.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    hv_blocks: Vec<Matrix>,
    hw_blocks: Vec<Matrix>,
    sigma_v_blocks: Vec<Matrix>,
    sigma_w_blocks: Vec<Matrix>,
}

impl NoiseModel {
    pub fn new(
        hv_blocks: Vec<Matrix>,
        hw_blocks: Vec<Matrix>,
        sigma_v_blocks: Vec<Matrix>,
        sigma_w_blocks: Vec<Matrix>,
    ) -> Result<Self, ModelError> {
        let steps = hv_blocks.len();
        if hw_blocks.len() != steps || sigma_v_blocks.len() != steps || sigma_w_blocks.len() != steps {
            return Err(ModelError::DimensionMismatch("noise block counts differ".into()));
        }
        // Invertibility of H: Cholesky of HᵀH must succeed.
        for (i, h) in hv_blocks.iter().enumerate() {
            if !h.is_square() || h.transpose().matmul(h).cholesky_unchecked().is_err() {
                return Err(ModelError::SingularBlock { which: "H_v", index: i });
            }
        }
        for (i, h) in hw_blocks.iter().enumerate() {
            if !h.is_square() || h.transpose().matmul(h).cholesky_unchecked().is_err() {
                return Err(ModelError::SingularBlock { which: "H_w", index: i });
            }
        }
        for (i, s) in sigma_v_blocks.iter().enumerate() {
            if s.cholesky().is_err() {
                return Err(ModelError::SingularBlock { which: "Sigma_v", index: i });
            }
        }
        for (i, s) in sigma_w_blocks.iter().enumerate() {
            if s.cholesky().is_err() {
                return Err(ModelError::SingularBlock { which: "Sigma_w", index: i });
            }
        }
        Ok(Self { hv_blocks, hw_blocks, sigma_v_blocks, sigma_w_blocks })
    }

    /// Identity bounds and unit covariances for every step.
    pub fn identity(sys: &LtvSystem) -> Self {
        Self::uniform_scalars(sys, 1.0, 1.0, 1.0, 1.0).expect("identity blocks are valid")
    }

    /// Scalar multiples of identity: bounds `hv·I`, `hw·I` and covariances
    /// `sigma_v·I`, `sigma_w·I` at every step.
    pub fn uniform_scalars(
        sys: &LtvSystem,
        hv: f64,
        hw: f64,
        sigma_v: f64,
        sigma_w: f64,
    ) -> Result<Self, ModelError> {
        let steps = sys.horizon() + 1;
        let (n, m) = (sys.state_dim(), sys.output_dim());
        Self::new(
            vec![Matrix::identity(m).scaled(hv); steps],
            vec![Matrix::identity(n).scaled(hw); steps],
            vec![Matrix::identity(m).scaled(sigma_v); steps],
            vec![Matrix::identity(n).scaled(sigma_w); steps],
        )
    }

    pub fn steps(&self) -> usize {
        self.hv_blocks.len()
    }
}

/// Per-step quadratic loss weights `ℓ_t(e) = eᵀ Q_t e` for the error blocks
/// `e_1 .. e_{T+1}`.
#[derive(Debug, Clone)]
pub struct CostWeights {
    q_blocks: Vec<Matrix>,
}

impl CostWeights {
    pub fn new(q_blocks: Vec<Matrix>) -> Result<Self, ModelError> {
        for (i, q) in q_blocks.iter().enumerate() {
            if q.cholesky().is_err() {
                return Err(ModelError::SingularBlock { which: "Q", index: i });
            }
        }
        Ok(Self { q_blocks })
    }

    pub fn identity(sys: &LtvSystem) -> Self {
        let steps = sys.horizon() + 1;
        Self { q_blocks: vec![Matrix::identity(sys.state_dim()); steps] }
    }

    pub fn uniform_scalar(sys: &LtvSystem, q: f64) -> Result<Self, ModelError> {
        let steps = sys.horizon() + 1;
        Self::new(vec![Matrix::identity(sys.state_dim()).scaled(q); steps])
    }

    /// Block-diagonal stack of the matrix square roots `Q_t^{1/2}`.
    pub fn stacked_sqrt(&self) -> Result<Matrix, ModelError> {
        let roots: Result<Vec<Matrix>, LinalgError> =
            self.q_blocks.iter().map(|q| q.spd_sqrt()).collect();
        Ok(Matrix::block_diag(&roots?))
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.q_blocks
    }
}

/// Block-diagonal stacks of the noise data, with the `H` inverses computed
/// blockwise.
#[derive(Debug, Clone)]
pub struct StackedNoise {
    pub hv: Matrix,
    pub hw: Matrix,
    pub hv_inv: Matrix,
    pub hw_inv: Matrix,
    pub sigma_v_half: Matrix,
    pub sigma_w_half: Matrix,
}

impl StackedNoise {
    pub fn build(noise: &NoiseModel) -> Result<Self, ModelError> {
        let inv_blocks = |blocks: &[Matrix], which: &'static str| -> Result<Vec<Matrix>, ModelError> {
            blocks
                .iter()
                .enumerate()
                .map(|(i, h)| {
                    h.solve_square(&Matrix::identity(h.rows()))
                        .map_err(|_| ModelError::SingularBlock { which, index: i })
                })
                .collect()
        };
        let sqrt_blocks = |blocks: &[Matrix], which: &'static str| -> Result<Vec<Matrix>, ModelError> {
            blocks
                .iter()
                .enumerate()
                .map(|(i, s)| s.spd_sqrt().map_err(|_| ModelError::SingularBlock { which, index: i }))
                .collect()
        };

        Ok(StackedNoise {
            hv: Matrix::block_diag(&noise.hv_blocks),
            hw: Matrix::block_diag(&noise.hw_blocks),
            hv_inv: Matrix::block_diag(&inv_blocks(&noise.hv_blocks, "H_v")?),
            hw_inv: Matrix::block_diag(&inv_blocks(&noise.hw_blocks, "H_w")?),
            sigma_v_half: Matrix::block_diag(&sqrt_blocks(&noise.sigma_v_blocks, "Sigma_v")?),
            sigma_w_half: Matrix::block_diag(&sqrt_blocks(&noise.sigma_w_blocks, "Sigma_w")?),
        })
    }
}

/// Stack per-step disturbances into the fixed sign convention, folding the
/// initial estimate mismatch into the first block:
/// `w̃_1 = −A_0 δ − w_0` and `w̃_k = −w_{k−1}` for `k ≥ 2`.
pub fn stack_disturbance(sys: &LtvSystem, initial_error: Option<&[f64]>, w_seq: &[Vec<f64>]) -> Vec<f64> {
    let n = sys.state_dim();
    let steps = sys.horizon() + 1;
    assert_eq!(w_seq.len(), steps, "disturbance sequence length");
    let mut out = Vec::with_capacity(n * steps);
    for (t, w) in w_seq.iter().enumerate() {
        assert_eq!(w.len(), n, "disturbance block {t} length");
        if t == 0 {
            let fold = match initial_error {
                Some(delta) => sys.a(0).matvec(delta),
                None => vec![0.0; n],
            };
            out.extend(w.iter().zip(&fold).map(|(wi, fi)| -fi - wi));
        } else {
            out.extend(w.iter().map(|wi| -wi));
        }
    }
    out
}

/// Stack per-step measurement noises `v_0 .. v_T`.
pub fn stack_measurement_noise(sys: &LtvSystem, v_seq: &[Vec<f64>]) -> Vec<f64> {
    let m = sys.output_dim();
    let steps = sys.horizon() + 1;
    assert_eq!(v_seq.len(), steps, "noise sequence length");
    let mut out = Vec::with_capacity(m * steps);
    for (t, v) in v_seq.iter().enumerate() {
        assert_eq!(v.len(), m, "noise block {t} length");
        out.extend_from_slice(v);
    }
    out
}

// ── system file format ──────────────────────────────────────────────

/// Parse the plain-text system format.
///
/// Line 1 holds `n m p T`; the rest are labeled matrix blocks `A t`, `B t`,
/// `C t` with row-major whitespace-separated entries, where `t` is a step
/// index or `*` for time-invariant repetition. Lines starting with `#` are
/// comments. Every step of every sequence must be covered exactly once.
pub fn parse_system(text: &str) -> Result<LtvSystem, ModelError> {
    let mut tokens = Tokens::new(text);
    let n = tokens.usize_token("n")?;
    let m = tokens.usize_token("m")?;
    let p = tokens.usize_token("p")?;
    let horizon = tokens.usize_token("T")?;
    let steps = horizon + 1;

    let mut a_seq: Vec<Option<Matrix>> = vec![None; steps];
    let mut b_seq: Vec<Option<Matrix>> = vec![None; steps];
    let mut c_seq: Vec<Option<Matrix>> = vec![None; steps];

    while let Some(label) = tokens.next_token() {
        let (seq, rows, cols): (&mut Vec<Option<Matrix>>, usize, usize) = match label.as_str() {
            "A" => (&mut a_seq, n, n),
            "B" => (&mut b_seq, n, p),
            "C" => (&mut c_seq, m, n),
            other => {
                return Err(ModelError::Parse(format!("unexpected block label `{other}`")));
            }
        };
        let index = tokens
            .next_token()
            .ok_or_else(|| ModelError::Parse(format!("missing time index after `{label}`")))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let tok = tokens.next_token().ok_or_else(|| {
                ModelError::Parse(format!("block {label} {index}: not enough entries"))
            })?;
            data.push(tok.parse::<f64>().map_err(|_| {
                ModelError::Parse(format!("block {label} {index}: bad number `{tok}`"))
            })?);
        }
        let matrix = Matrix::from_vec(rows, cols, data)
            .map_err(|e| ModelError::Parse(format!("block {label} {index}: {e}")))?;
        if index == "*" {
            for (t, slot) in seq.iter_mut().enumerate() {
                if slot.is_some() {
                    return Err(ModelError::Parse(format!("block {label} {t} given twice")));
                }
                *slot = Some(matrix.clone());
            }
        } else {
            let t: usize = index
                .parse()
                .map_err(|_| ModelError::Parse(format!("bad time index `{index}`")))?;
            if t >= steps {
                return Err(ModelError::Parse(format!("time index {t} exceeds horizon {horizon}")));
            }
            if seq[t].is_some() {
                return Err(ModelError::Parse(format!("block {label} {t} given twice")));
            }
            seq[t] = Some(matrix);
        }
    }

    let unwrap_seq = |seq: Vec<Option<Matrix>>, label: &str| -> Result<Vec<Matrix>, ModelError> {
        seq.into_iter()
            .enumerate()
            .map(|(t, slot)| slot.ok_or_else(|| ModelError::Parse(format!("missing block {label} {t}"))))
            .collect()
    };

    LtvSystem::new(
        n,
        m,
        p,
        horizon,
        unwrap_seq(a_seq, "A")?,
        unwrap_seq(b_seq, "B")?,
        unwrap_seq(c_seq, "C")?,
    )
}

/// Render a system in the file format; time-invariant systems use `*` blocks.
pub fn format_system(sys: &LtvSystem) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {}",
        sys.state_dim(),
        sys.output_dim(),
        sys.input_dim(),
        sys.horizon()
    );
    let write_block = |out: &mut String, label: &str, idx: &str, mat: &Matrix| {
        let _ = writeln!(out, "{label} {idx}");
        for i in 0..mat.rows() {
            let row: Vec<String> = mat.row(i).iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    };
    if sys.is_time_invariant() {
        write_block(&mut out, "A", "*", sys.a(0));
        write_block(&mut out, "B", "*", sys.b(0));
        write_block(&mut out, "C", "*", sys.c(0));
    } else {
        for t in 0..=sys.horizon() {
            write_block(&mut out, "A", &t.to_string(), sys.a(t));
        }
        for t in 0..=sys.horizon() {
            write_block(&mut out, "B", &t.to_string(), sys.b(t));
        }
        for t in 0..=sys.horizon() {
            write_block(&mut out, "C", &t.to_string(), sys.c(t));
        }
    }
    out
}

/// Whitespace tokenizer that drops `#` comments.
struct Tokens<'a> {
    inner: std::vec::IntoIter<&'a str>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let toks: Vec<&str> = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or(""))
            .flat_map(|line| line.split_whitespace())
            .collect();
        Tokens { inner: toks.into_iter() }
    }

    fn next_token(&mut self) -> Option<String> {
        self.inner.next().map(str::to_string)
    }

    fn usize_token(&mut self, name: &str) -> Result<usize, ModelError> {
        self.next_token()
            .ok_or_else(|| ModelError::Parse(format!("missing header field {name}")))?
            .parse()
            .map_err(|_| ModelError::Parse(format!("bad header field {name}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn downshift_structure() {
        let sys = crate::testkit::toy_scalar_system();
        let ops = StackedOperators::build(&sys);
        assert_eq!(ops.z, Matrix::from_rows(&[&[0.0, 0.0], &[1.0, 0.0]]));
        // Astack = diag(a_1, 0), so Z·Astack puts a_1 on the subdiagonal.
        assert_eq!(ops.a_stack, Matrix::diag(&[0.5, 0.0]));
        assert_eq!(ops.za(), Matrix::from_rows(&[&[0.0, 0.0], &[0.5, 0.0]]));
        // Cstack = diag(0, c_1), so Cstack·Z contributes C_1 e_1 to row 2.
        assert_eq!(ops.c_stack, Matrix::diag(&[0.0, 1.0]));
        assert_eq!(ops.cz(), Matrix::from_rows(&[&[0.0, 0.0], &[1.0, 0.0]]));
    }

    #[test]
    fn downshift_nilpotent_and_triangular() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..20 {
            let (n, m, t) = crate::testkit::random_dims(&mut rng, 3, 4);
            let sys = crate::testkit::random_system(&mut rng, n, m, 1, t);
            let ops = StackedOperators::build(&sys);

            let mut zpow = Matrix::identity(ops.dims.error);
            for _ in 0..=t {
                zpow = zpow.matmul(&ops.z);
            }
            assert_eq!(zpow.max_abs(), 0.0, "Z^(T+1) = 0");

            // Strictly lower block-triangular: zero on and above the block diagonal.
            let za = ops.za();
            for bi in 0..=t {
                for bj in bi..=t {
                    assert_eq!(za.block(bi * n, bj * n, n, n).max_abs(), 0.0);
                }
            }
            let cz = ops.cz();
            for bi in 0..=t {
                for bj in bi..=t {
                    assert_eq!(cz.block(bi * m, bj * n, m, n).max_abs(), 0.0);
                }
            }

            // (I - Z·Astack)⁻¹ exists and is unit lower block-triangular.
            let inv = ops.open_loop_map();
            let eye = Matrix::identity(ops.dims.error);
            let resid = eye.sub(&za).matmul(&inv).sub(&eye).max_abs();
            assert!(resid < 1e-12);
            for bi in 0..=t {
                let diag = inv.block(bi * n, bi * n, n, n);
                assert!(diag.sub(&Matrix::identity(n)).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_stacks() {
        let sys = crate::testkit::toy_scalar_system();
        let noise = NoiseModel::identity(&sys);
        let stacks = StackedNoise::build(&noise).unwrap();
        assert_eq!(stacks.hv, Matrix::identity(2));
        assert_eq!(stacks.hv_inv, Matrix::identity(2));
        assert_eq!(stacks.sigma_w_half, Matrix::identity(2));

        // Sigma_v = 4I stacks to a square root of 2I.
        let noise = NoiseModel::uniform_scalars(&sys, 1.0, 1.0, 4.0, 1.0).unwrap();
        let stacks = StackedNoise::build(&noise).unwrap();
        assert!(stacks.sigma_v_half.sub(&Matrix::identity(2).scaled(2.0)).max_abs() < 1e-12);

        // Scalar bound blocks 2 invert to 0.5 per block.
        let noise = NoiseModel::uniform_scalars(&sys, 2.0, 1.0, 1.0, 1.0).unwrap();
        let stacks = StackedNoise::build(&noise).unwrap();
        assert!(stacks.hv_inv.sub(&Matrix::identity(2).scaled(0.5)).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_singular_noise_blocks() {
        let sys = crate::testkit::toy_scalar_system();
        let singular = Matrix::zeros(1, 1);
        let err = NoiseModel::new(
            vec![singular.clone(); 2],
            vec![Matrix::identity(1); 2],
            vec![Matrix::identity(1); 2],
            vec![Matrix::identity(1); 2],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::SingularBlock { which: "H_v", .. }));
        let _ = sys;
    }

    #[test]
    fn cost_sqrt_squares_back() {
        let mut rng = SplitMix64::new(5);
        let sys = crate::testkit::random_system(&mut rng, 3, 2, 1, 2);
        let weights = crate::testkit::random_weights(&mut rng, &sys);
        let root = weights.stacked_sqrt().unwrap();
        let q_full = Matrix::block_diag(weights.blocks());
        let rel = root.matmul(&root).sub(&q_full).frob_norm() / q_full.frob_norm();
        assert!(rel < 1e-9, "square-root residual {rel:e}");
    }

    #[test]
    fn disturbance_sign_convention() {
        let sys = crate::testkit::toy_scalar_system();
        // No initial error: every block is the negated disturbance.
        let w = stack_disturbance(&sys, None, &[vec![1.0], vec![2.0]]);
        assert_eq!(w, vec![-1.0, -2.0]);
        // Initial mismatch folds through A_0 into the first block.
        let w = stack_disturbance(&sys, Some(&[1.0]), &[vec![0.0], vec![0.0]]);
        assert_eq!(w, vec![-0.5, 0.0]);
        let v = stack_measurement_noise(&sys, &[vec![3.0], vec![4.0]]);
        assert_eq!(v, vec![3.0, 4.0]);
    }

    #[test]
    fn parse_and_format_roundtrip() {
        let text = "# toy system\n1 1 1 1\nA *\n0.5\nB *\n0\nC *\n1\n";
        let sys = parse_system(text).unwrap();
        assert_eq!(sys, crate::testkit::toy_scalar_system());
        let rendered = format_system(&sys);
        assert_eq!(parse_system(&rendered).unwrap(), sys);

        let mut rng = SplitMix64::new(8);
        let ltv = crate::testkit::random_system(&mut rng, 2, 1, 2, 3);
        assert_eq!(parse_system(&format_system(&ltv)).unwrap(), ltv);
    }

    #[test]
    fn parser_rejects_missing_and_duplicate_blocks() {
        let missing = "1 1 1 1\nA *\n0.5\nB *\n0\n";
        assert!(matches!(parse_system(missing), Err(ModelError::Parse(_))));
        let duplicate = "1 1 1 0\nA 0\n0.5\nA 0\n0.5\nB 0\n0\nC 0\n1\n";
        assert!(matches!(parse_system(duplicate), Err(ModelError::Parse(_))));
        let explicit_and_wild = "1 1 1 0\nA *\n0.5\nA 0\n0.5\nB 0\n0\nC 0\n1\n";
        assert!(matches!(parse_system(explicit_and_wild), Err(ModelError::Parse(_))));
    }
}
