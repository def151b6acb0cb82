//! Synthesis of the four observers and their performance functionals.
//!
//! All four searches share one parametrization: the free decision object is
//! `Φ_v` (lower block-triangular for causal observers, dense for the
//! clairvoyant) and `Φ_w` is eliminated affinely through the achievability
//! identity, which also makes its triangularity automatic.
//!
//! * Quadratic-optimal (`synth_h2`): the weighted Frobenius objective
//!   separates across block rows of `Φ_v` after elimination, so each block
//!   row is an independent linear least-squares solve.
//! * Clairvoyant (`synth_clairvoyant`): the same least squares with the
//!   causality constraint dropped; the unique Frobenius minimizer is also
//!   spectral-optimal among non-causal observers.
//! * Worst-case-optimal (`synth_hinf`): minimizes the squared spectral norm
//!   of the weighted error gain through the Schur-complement LMI
//!   `[[λI, G], [Gᵀ, I]] ⪰ 0`.
//! * Minimal regret (`synth_regret`): minimizes the worst-case cost gap to
//!   the clairvoyant via `[[I, G], [Gᵀ, λI + J_nc]] ⪰ 0` where `J_nc` is the
//!   clairvoyant's weighted Gram matrix.
//!
//! Costs are unnormalized sums over the `T+1` stacked blocks, and the state
//! weighting enters every functional through `Q^{1/2}` so the four observers
//! stay comparable under non-identity weights.

use std::fmt;

use crate::linalg::{LinalgError, Matrix};
use crate::model::{
    CostWeights, LtvSystem, ModelError, NoiseModel, StackedDims, StackedNoise, StackedOperators,
};
use crate::sdp::{
    solve_min_cost_lmi, ConstraintMatrix, LmiProblem, SdpError, SdpStatus, SolverOptions, SparseVec,
};
use crate::sls::{self, ErrorMaps, SlsError};

#[derive(Debug)]
pub enum SynthesisError {
    Model(ModelError),
    Sls(SlsError),
    Linalg(LinalgError),
    Sdp(SdpError),
    /// The SDP finished without an optimality certificate.
    SolverStatus(SdpStatus),
    /// `synth_regret` needs the clairvoyant maps as its baseline.
    NotClairvoyant,
}

impl fmt::Display for SynthesisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthesisError::Model(e) => write!(f, "{e}"),
            SynthesisError::Sls(e) => write!(f, "{e}"),
            SynthesisError::Linalg(e) => write!(f, "{e}"),
            SynthesisError::Sdp(e) => write!(f, "{e}"),
            SynthesisError::SolverStatus(s) => write!(f, "SDP returned status: {s}"),
            SynthesisError::NotClairvoyant => {
                write!(f, "regret synthesis needs the clairvoyant baseline maps")
            }
        }
    }
}

impl std::error::Error for SynthesisError {}

impl From<ModelError> for SynthesisError {
    fn from(e: ModelError) -> Self {
        SynthesisError::Model(e)
    }
}
impl From<SlsError> for SynthesisError {
    fn from(e: SlsError) -> Self {
        SynthesisError::Sls(e)
    }
}
impl From<LinalgError> for SynthesisError {
    fn from(e: LinalgError) -> Self {
        SynthesisError::Linalg(e)
    }
}
impl From<SdpError> for SynthesisError {
    fn from(e: SdpError) -> Self {
        SynthesisError::Sdp(e)
    }
}

/// A stacked noise direction split into its measurement and disturbance
/// components (in the model-module sign convention for `w`).
#[derive(Debug, Clone)]
pub struct StackedNoiseVec {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

/// Everything the synthesis routines need about one problem instance.
#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub ops: StackedOperators,
    pub noise: StackedNoise,
    /// Block-diagonal stack of `Q_t^{1/2}`.
    pub q_half: Matrix,
    // Problem constants reused by every routine.
    open_loop: Matrix,
    cz: Matrix,
    cz_open: Matrix,
}

impl SynthesisProblem {
    pub fn new(
        sys: &LtvSystem,
        noise: &NoiseModel,
        weights: &CostWeights,
    ) -> Result<Self, SynthesisError> {
        let ops = StackedOperators::build(sys);
        if noise.steps() != sys.horizon() + 1 {
            return Err(SynthesisError::Model(ModelError::DimensionMismatch(
                "noise model covers a different horizon".into(),
            )));
        }
        if weights.blocks().len() != sys.horizon() + 1 {
            return Err(SynthesisError::Model(ModelError::DimensionMismatch(
                "cost weights cover a different horizon".into(),
            )));
        }
        let stacked = StackedNoise::build(noise)?;
        let q_half = weights.stacked_sqrt()?;
        let open_loop = ops.open_loop_map();
        let cz = ops.cz();
        let cz_open = cz.matmul(&open_loop);
        Ok(Self { ops, noise: stacked, q_half, open_loop, cz, cz_open })
    }

    /// Identity noise bounds, covariances, and weights.
    pub fn unit(sys: &LtvSystem) -> Self {
        Self::new(sys, &NoiseModel::identity(sys), &CostWeights::identity(sys))
            .expect("identity data is always consistent")
    }

    pub fn dims(&self) -> StackedDims {
        self.ops.dims
    }

    /// The weighted error gain `G = Q^{1/2} [Φ_v H_v⁻¹, Φ_w H_w⁻¹]`, the
    /// map from normalized noise to weighted error.
    pub fn weighted_gain(&self, maps: &ErrorMaps) -> Matrix {
        let left = self.q_half.matmul(&maps.phi_v.matmul(&self.noise.hv_inv));
        let right = self.q_half.matmul(&maps.phi_w.matmul(&self.noise.hw_inv));
        left.hcat(&right)
    }

    /// Complete `Φ_v` into maps using the cached problem constants.
    fn maps_from_phi_v(&self, phi_v: Matrix, causal: bool) -> Result<ErrorMaps, SynthesisError> {
        let phi_w = sls::phi_w_from_phi_v_cached(&phi_v, &self.cz, &self.open_loop);
        Ok(ErrorMaps::from_parts(phi_v, phi_w, causal, self.dims().n, self.dims().m)?)
    }
}

/// Quadratic (expected-energy) cost of a pair of maps:
/// `‖Q^{1/2} Φ_v Σ_v^{1/2}‖_F² + ‖Q^{1/2} Φ_w Σ_w^{1/2}‖_F²`.
pub fn h2_cost(maps: &ErrorMaps, prob: &SynthesisProblem) -> f64 {
    let v_term = prob.q_half.matmul(&maps.phi_v.matmul(&prob.noise.sigma_v_half)).frob_norm();
    let w_term = prob.q_half.matmul(&maps.phi_w.matmul(&prob.noise.sigma_w_half)).frob_norm();
    v_term * v_term + w_term * w_term
}

/// Worst-case quadratic cost over the normalized noise ball: the squared
/// spectral norm of the weighted error gain.
pub fn hinf_cost(maps: &ErrorMaps, prob: &SynthesisProblem) -> f64 {
    let s = prob.weighted_gain(maps).spectral_norm();
    s * s
}

/// Noise direction on the unit ball attaining [`hinf_cost`], mapped back to
/// physical `(v, w)` coordinates, together with the attained cost.
pub fn worst_case_direction(maps: &ErrorMaps, prob: &SynthesisProblem) -> (StackedNoiseVec, f64) {
    let g = prob.weighted_gain(maps);
    let nv = maps.phi_v.cols();
    // Top right-singular direction via the smaller Gram matrix G Gᵀ.
    let gram = g.matmul(&g.transpose()).symmetrized();
    let eig = gram.sym_eig().expect("Gram eigendecomposition");
    let top = eig.vector(g.rows() - 1);
    let mut z = g.transpose().matvec(&top);
    let norm = crate::linalg::vec_norm(&z);
    if norm <= 1e-300 {
        z = vec![0.0; g.cols()];
        z[0] = 1.0;
    } else {
        for zi in &mut z {
            *zi /= norm;
        }
    }
    let cost = {
        let gz = g.matvec(&z);
        crate::linalg::dot(&gz, &gz)
    };
    (map_back(&z, nv, prob), cost)
}

/// Worst-case regret of `maps` against the clairvoyant baseline `nc`: the
/// largest eigenvalue of `ℳ = GᵀG − G_ncᵀG_nc` over the normalized noise
/// ball, plus the attaining direction in physical coordinates.
pub fn regret_value(
    maps: &ErrorMaps,
    nc: &ErrorMaps,
    prob: &SynthesisProblem,
) -> (f64, StackedNoiseVec) {
    let m = regret_quadratic_form(maps, nc, prob);
    let eig = m.sym_eig().expect("regret form eigendecomposition");
    let lambda = eig.lambda_max();
    let z = eig.vector(m.rows() - 1);
    (lambda, map_back(&z, maps.phi_v.cols(), prob))
}

/// The regret quadratic form `ℳ` in normalized noise coordinates.
pub fn regret_quadratic_form(maps: &ErrorMaps, nc: &ErrorMaps, prob: &SynthesisProblem) -> Matrix {
    let g = prob.weighted_gain(maps);
    let g_nc = prob.weighted_gain(nc);
    g.transpose().matmul(&g).sub(&g_nc.transpose().matmul(&g_nc)).symmetrized()
}

fn map_back(z: &[f64], nv: usize, prob: &SynthesisProblem) -> StackedNoiseVec {
    let v_n = &z[..nv];
    let w_n = &z[nv..];
    StackedNoiseVec { v: prob.noise.hv_inv.matvec(v_n), w: prob.noise.hw_inv.matvec(w_n) }
}

/// Optimality certificate attached to the minimal-regret maps.
#[derive(Debug, Clone)]
pub struct RegretCertificate {
    /// Optimal regret bound from the SDP.
    pub lambda_star: f64,
    /// Spectrum of `ℳ` at the returned maps, ascending.
    pub m_eigs: Vec<f64>,
    /// Unit-ball noise direction achieving the largest eigenvalue.
    pub worst_noise: StackedNoiseVec,
}

/// Quadratic-optimal causal observer.
pub fn synth_h2(prob: &SynthesisProblem) -> Result<ErrorMaps, SynthesisError> {
    let phi_v = frobenius_optimal_phi_v(prob, true)?;
    prob.maps_from_phi_v(phi_v, true)
}

/// Optimal non-causal (clairvoyant) observer: the causality constraint is
/// dropped and `Φ_v` is dense.
pub fn synth_clairvoyant(prob: &SynthesisProblem) -> Result<ErrorMaps, SynthesisError> {
    let phi_v = frobenius_optimal_phi_v(prob, false)?;
    prob.maps_from_phi_v(phi_v, false)
}

/// Row-decoupled least squares for the Frobenius objective.
///
/// For block row `r`, writing `x` for the free part of that row of `Φ_v`,
/// the objective contribution is
/// `‖Q_r^{1/2}(x Σ_v^{1/2}|_r)‖² + ‖Q_r^{1/2}((D_r − x M_r) Σ_w^{1/2})‖²`
/// with `M = 𝒞Z D`; the left factor `Q_r^{1/2} ≻ 0` is common to both
/// residuals, so the minimizer does not depend on it.
fn frobenius_optimal_phi_v(prob: &SynthesisProblem, causal: bool) -> Result<Matrix, SynthesisError> {
    let dims = prob.dims();
    let (n, m) = (dims.n, dims.m);
    let mw = prob.cz_open.matmul(&prob.noise.sigma_w_half);
    let dw = prob.open_loop.matmul(&prob.noise.sigma_w_half);

    let mut phi_v = Matrix::zeros(dims.error, dims.noise_v);
    for r in 0..dims.steps() {
        let free_cols = if causal { (r + 1) * m } else { dims.noise_v };
        // Design matrix [Σ_v^{1/2}|_r, M_r Σ_w^{1/2}]ᵀ and its targets.
        let s_r = prob.noise.sigma_v_half.block(0, 0, free_cols, free_cols);
        let m_r = mw.block(0, 0, free_cols, dims.error);
        let design = s_r.hcat(&m_r).transpose();
        let mut target = Matrix::zeros(free_cols + dims.error, n);
        let d_r = dw.block(r * n, 0, n, dims.error);
        target.set_block(free_cols, 0, &d_r.transpose());
        let solution = design.solve_least_squares(&target)?;
        phi_v.set_block(r * n, 0, &solution.transpose());
    }
    Ok(phi_v)
}

/// Worst-case-optimal causal observer via the spectral-norm LMI.
///
/// The optimum may be non-unique (only the top singular value is
/// penalized); the returned maps are whatever the barrier converges to from
/// the analytic-center start.
pub fn synth_hinf(
    prob: &SynthesisProblem,
    opts: &SolverOptions,
) -> Result<ErrorMaps, SynthesisError> {
    let dims = prob.dims();
    let (ne, nv) = (dims.error, dims.noise_v);
    let d = 2 * ne + nv;

    // F(Φ, λ) = [[λI, G(Φ)], [G(Φ)ᵀ, I]].
    let (vars, mut fs) = gain_perturbation_terms(prob, d, ne);
    fs.push(ConstraintMatrix::identity_block(d, 0, ne));
    let mut cost = vec![0.0; vars.len() + 1];
    cost[vars.len()] = 1.0;

    let mut f0 = Matrix::zeros(d, d);
    let qdw = prob.q_half.matmul(&prob.open_loop.matmul(&prob.noise.hw_inv));
    f0.set_block(0, ne + nv, &qdw);
    f0.set_block(ne + nv, 0, &qdw.transpose());
    f0.set_block(ne, ne, &Matrix::identity(ne + nv));

    let sol = solve_min_cost_lmi(&LmiProblem::new(cost, f0, fs)?, opts)?;
    if sol.status != SdpStatus::Optimal {
        return Err(SynthesisError::SolverStatus(sol.status));
    }
    prob.maps_from_phi_v(phi_v_from_solution(&sol.x, &vars, dims), true)
}

/// Minimal-regret causal observer against the clairvoyant baseline.
pub fn synth_regret(
    prob: &SynthesisProblem,
    nc: &ErrorMaps,
    opts: &SolverOptions,
) -> Result<(ErrorMaps, RegretCertificate), SynthesisError> {
    if nc.causal {
        return Err(SynthesisError::NotClairvoyant);
    }
    let dims = prob.dims();
    let (ne, nv) = (dims.error, dims.noise_v);
    let d = 2 * ne + nv;

    // F(Φ, λ) = [[I, G(Φ)], [G(Φ)ᵀ, λI + J_nc]], J_nc = G_ncᵀ G_nc.
    let (vars, mut fs) = gain_perturbation_terms(prob, d, ne);
    fs.push(ConstraintMatrix::identity_block(d, ne, d));
    let mut cost = vec![0.0; vars.len() + 1];
    cost[vars.len()] = 1.0;

    let g_nc = prob.weighted_gain(nc);
    let j_nc = g_nc.transpose().matmul(&g_nc).symmetrized();
    let qdw = prob.q_half.matmul(&prob.open_loop.matmul(&prob.noise.hw_inv));
    let mut f0 = Matrix::zeros(d, d);
    f0.set_block(0, 0, &Matrix::identity(ne));
    f0.set_block(0, ne + nv, &qdw);
    f0.set_block(ne + nv, 0, &qdw.transpose());
    f0.set_block(ne, ne, &j_nc);

    let sol = solve_min_cost_lmi(&LmiProblem::new(cost, f0, fs)?, opts)?;
    if sol.status != SdpStatus::Optimal {
        return Err(SynthesisError::SolverStatus(sol.status));
    }
    let lambda_star = sol.x[vars.len()];
    let maps = prob.maps_from_phi_v(phi_v_from_solution(&sol.x, &vars, dims), true)?;

    let m_form = regret_quadratic_form(&maps, nc, prob);
    let eig = m_form.sym_eig()?;
    let z = eig.vector(m_form.rows() - 1);
    let certificate = RegretCertificate {
        lambda_star,
        worst_noise: map_back(&z, nv, prob),
        m_eigs: eig.eigenvalues,
    };
    Ok((maps, certificate))
}

/// The per-entry LMI terms shared by the spectral and regret problems.
///
/// Perturbing entry `(i, j)` of `Φ_v` shifts the weighted gain by the
/// rank-one matrix `(Q^{1/2} e_i) g_jᵀ` with
/// `g_j = [row_j(H_v⁻¹), −row_j(𝒞Z D H_w⁻¹)]`, which enters the symmetric
/// LMI as one outer pair across the off-diagonal blocks.
fn gain_perturbation_terms(
    prob: &SynthesisProblem,
    d: usize,
    gain_col_offset: usize,
) -> (Vec<(usize, usize)>, Vec<ConstraintMatrix>) {
    let dims = prob.dims();
    let (n, m, ne, nv) = (dims.n, dims.m, dims.error, dims.noise_v);
    let mhw = prob.cz_open.matmul(&prob.noise.hw_inv);

    let mut vars = Vec::new();
    let mut fs = Vec::new();
    for i in 0..ne {
        let block_row = i / n;
        // Column i of the block-diagonal Q^{1/2} lives inside its block.
        let qb = block_row * n;
        let u = SparseVec::new((qb..qb + n).map(|row| (row, prob.q_half[(row, i)])).collect());
        let max_col = nv.min((block_row + 1) * m);
        for j in 0..max_col {
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(m + ne);
            let vb = (j / m) * m;
            for col in vb..vb + m {
                entries.push((gain_col_offset + col, prob.noise.hv_inv[(j, col)]));
            }
            for col in 0..ne {
                entries.push((gain_col_offset + nv + col, -mhw[(j, col)]));
            }
            vars.push((i, j));
            fs.push(ConstraintMatrix::outer_pair(d, u.clone(), SparseVec::new(entries)));
        }
    }
    (vars, fs)
}

fn phi_v_from_solution(x: &[f64], vars: &[(usize, usize)], dims: StackedDims) -> Matrix {
    let mut phi_v = Matrix::zeros(dims.error, dims.noise_v);
    for (&(i, j), &value) in vars.iter().zip(x) {
        phi_v[(i, j)] = value;
    }
    phi_v
}
