//! Barrier interior-point solver for small dense LMI problems:
//!
//! ```text
//! minimize    cᵀx
//! subject to  F(x) = F0 + Σ x_i F_i ⪰ 0
//! ```
//!
//! Phase 1 minimizes a slack `s` with `F(x) + sI ⪰ 0`, which is strictly
//! feasible for large `s`; phase 2 follows the central path of the log-det
//! barrier with damped Newton steps and backtracking, cutting the barrier
//! parameter by a fixed factor after each centering. Iterates stay strictly
//! feasible throughout (a trial point is accepted only if its Cholesky
//! factorization succeeds), so the returned point always carries a
//! feasibility certificate.
//!
//! Constraint matrices are stored as sums of symmetric outer products
//! `u vᵀ + v uᵀ` with sparse `u`, `v`. The observer-synthesis LMIs have
//! exactly one such pair per scalar decision variable, which turns the
//! Newton Hessian `H_ij = μ tr(F⁻¹F_i F⁻¹F_j)` into a handful of sparse dot
//! products per entry instead of dense matrix products. Dense symmetric
//! matrices still round-trip through [`ConstraintMatrix::from_dense`], so
//! nothing here is specific to those LMIs.

use std::fmt;

use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub enum SdpError {
    DimensionMismatch(String),
    /// A constraint matrix failed its symmetry check.
    NotSymmetric { index: usize, deviation: f64 },
    /// The interior-point iteration lost positive definiteness in a way the
    /// line search could not recover (numerically degenerate problem).
    NumericalBreakdown(String),
}

impl fmt::Display for SdpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SdpError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            SdpError::NotSymmetric { index, deviation } => {
                write!(f, "constraint {index} not symmetric (deviation {deviation:e})")
            }
            SdpError::NumericalBreakdown(what) => write!(f, "numerical breakdown: {what}"),
        }
    }
}

impl std::error::Error for SdpError {}

impl From<LinalgError> for SdpError {
    fn from(e: LinalgError) -> Self {
        SdpError::NumericalBreakdown(e.to_string())
    }
}

/// Sparse vector as sorted `(index, value)` entries.
#[derive(Debug, Clone)]
pub struct SparseVec {
    entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_by_key(|&(i, _)| i);
        Self { entries }
    }

    pub fn unit(index: usize) -> Self {
        Self { entries: vec![(index, 1.0)] }
    }

    /// Entries of `row` placed at indices `offset..offset+row.len()`.
    pub fn from_dense_row(offset: usize, row: &[f64]) -> Self {
        Self::new(
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, &v)| (offset + j, v))
                .collect(),
        )
    }

    fn scale(&mut self, s: f64) {
        for e in &mut self.entries {
            e.1 *= s;
        }
    }

    #[inline]
    fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }
}

/// Symmetric matrix in outer-product form `F = Σ_s (u_s v_sᵀ + v_s u_sᵀ)`.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    dim: usize,
    pairs: Vec<(SparseVec, SparseVec)>,
}

impl ConstraintMatrix {
    /// One symmetric pair `u vᵀ + v uᵀ`.
    pub fn outer_pair(dim: usize, u: SparseVec, v: SparseVec) -> Self {
        Self { dim, pairs: vec![(u, v)] }
    }

    /// Identity restricted to the index range `lo..hi`.
    pub fn identity_block(dim: usize, lo: usize, hi: usize) -> Self {
        let pairs = (lo..hi)
            .map(|i| (SparseVec::unit(i), SparseVec::new(vec![(i, 0.5)])))
            .collect();
        Self { dim, pairs }
    }

    /// Decompose a dense symmetric matrix (checked to `1e-12` relative).
    pub fn from_dense(m: &Matrix) -> Result<Self, SdpError> {
        if !m.is_square() {
            return Err(SdpError::DimensionMismatch("constraint matrix not square".into()));
        }
        let dev = m.symmetry_deviation();
        if dev > 1e-12 {
            return Err(SdpError::NotSymmetric { index: 0, deviation: dev });
        }
        let sym = m.symmetrized();
        let pairs = (0..sym.rows())
            .filter_map(|i| {
                let mut half = SparseVec::from_dense_row(0, sym.row(i));
                if half.entries.is_empty() {
                    None
                } else {
                    half.scale(0.5);
                    Some((SparseVec::unit(i), half))
                }
            })
            .collect();
        Ok(Self { dim: sym.rows(), pairs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for (_, v) in &mut self.pairs {
            v.scale(s);
        }
        self
    }

    /// Dense assembly `target += scale · F`.
    pub fn add_to(&self, target: &mut Matrix, scale: f64) {
        for (u, v) in &self.pairs {
            for &(iu, au) in &u.entries {
                for &(iv, av) in &v.entries {
                    let s = scale * au * av;
                    target[(iu, iv)] += s;
                    target[(iv, iu)] += s;
                }
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.dim, self.dim);
        self.add_to(&mut out, 1.0);
        out
    }
}

/// Eigenvalue-minimization LMI in standard affine form.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    cost: Vec<f64>,
    f0: Matrix,
    fs: Vec<ConstraintMatrix>,
}

impl LmiProblem {
    pub fn new(cost: Vec<f64>, f0: Matrix, fs: Vec<ConstraintMatrix>) -> Result<Self, SdpError> {
        if !f0.is_square() {
            return Err(SdpError::DimensionMismatch("F0 not square".into()));
        }
        let dev = f0.symmetry_deviation();
        if dev > 1e-12 {
            return Err(SdpError::NotSymmetric { index: usize::MAX, deviation: dev });
        }
        if cost.len() != fs.len() {
            return Err(SdpError::DimensionMismatch(format!(
                "{} cost entries for {} constraint matrices",
                cost.len(),
                fs.len()
            )));
        }
        for (i, f) in fs.iter().enumerate() {
            if f.dim() != f0.rows() {
                return Err(SdpError::DimensionMismatch(format!(
                    "F_{i} has dim {}, F0 has {}",
                    f.dim(),
                    f0.rows()
                )));
            }
        }
        Ok(Self { cost, f0: f0.symmetrized(), fs })
    }

    /// Build from dense symmetric `F_i`, validating each.
    pub fn from_dense(cost: Vec<f64>, f0: Matrix, fs_dense: &[Matrix]) -> Result<Self, SdpError> {
        let fs = fs_dense
            .iter()
            .enumerate()
            .map(|(i, m)| {
                ConstraintMatrix::from_dense(m).map_err(|e| match e {
                    SdpError::NotSymmetric { deviation, .. } => {
                        SdpError::NotSymmetric { index: i, deviation }
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(cost, f0, fs)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn lmi_dim(&self) -> usize {
        self.f0.rows()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    /// Dense `F(x)`.
    pub fn eval(&self, x: &[f64]) -> Matrix {
        assert_eq!(x.len(), self.num_vars());
        let mut f = self.f0.clone();
        for (fi, &xi) in self.fs.iter().zip(x) {
            if xi != 0.0 {
                fi.add_to(&mut f, xi);
            }
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

impl fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SdpStatus::Optimal => write!(f, "optimal"),
            SdpStatus::Infeasible => write!(f, "infeasible"),
            SdpStatus::MaxIterations => write!(f, "max iterations"),
        }
    }
}

/// One row of the optional per-iteration debug trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iteration: usize,
    pub mu: f64,
    pub objective: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SdpStatus,
    /// Smallest eigenvalue of `F(x)` at the returned point.
    pub min_eig: f64,
    pub iterations: usize,
    /// Barrier suboptimality estimate `max(k, d)·μ_final`.
    pub gap_estimate: f64,
    /// Per-iteration trace, populated when [`SolverOptions::trace`] is set.
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Initial barrier parameter.
    pub mu_init: f64,
    /// Multiplicative decrease applied after each centering.
    pub mu_factor: f64,
    /// Armijo fraction for the backtracking line search.
    pub armijo: f64,
    /// Backtracking step shrink factor.
    pub backtrack: f64,
    /// Total Newton step budget across both phases.
    pub max_newton: usize,
    /// Relative gap tolerance: stop once `max(k,d)·μ ≤ tol·(1 + |cᵀx|)`.
    pub gap_tol: f64,
    /// Collect a per-iteration trace (adds an eigendecomposition per step).
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mu_init: 1.0,
            mu_factor: 0.1,
            armijo: 0.3,
            backtrack: 0.5,
            max_newton: 500,
            gap_tol: 1e-8,
            trace: false,
        }
    }
}

/// Slack larger than this after phase 1 means no strictly feasible point.
const PHASE1_INFEASIBLE: f64 = 1e-8;

/// Minimize `cᵀx` subject to `F(x) ⪰ 0`.
pub fn solve_min_cost_lmi(prob: &LmiProblem, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    let k = prob.num_vars();
    let d = prob.lmi_dim();
    let mut iterations = 0usize;
    let mut trace = Vec::new();

    // Phase 1 in (x, s): minimize s with F(x) + sI ⪰ 0, started strictly
    // feasible at x = 0, s = max(0, −λmin(F0)) + 1. Skipped when x = 0 is
    // already comfortably interior.
    let f0_min_eig = prob.f0.sym_eig()?.eigenvalues[0];
    let mut x = vec![0.0; k];
    if f0_min_eig <= 1e-10 * (1.0 + prob.f0.max_abs()) {
        let mut p1_cost = vec![0.0; k + 1];
        p1_cost[k] = 1.0;
        let mut p1_fs = prob.fs.clone();
        p1_fs.push(ConstraintMatrix::identity_block(d, 0, d));
        let p1 = LmiProblem { cost: p1_cost, f0: prob.f0.clone(), fs: p1_fs };

        let mut p1_x = vec![0.0; k + 1];
        let s0 = (-f0_min_eig).max(0.0) + 1.0;
        p1_x[k] = s0;
        // Stop as soon as the slack is comfortably negative. A small barrier
        // parameter makes phase 1 head for feasibility rather than chase the
        // centering problem, whose minimizer may not even exist when some
        // constraint matrix is itself PSD.
        let margin = 1e-2 * (1.0 + prob.f0.max_abs());
        let p1_mu = 1e-2 * (1.0 + s0);
        let exit =
            barrier_minimize(&p1, p1_x, opts, p1_mu, Some(-margin), &mut iterations, &mut trace)?;

        let s_star = exit.x[k];
        if s_star >= -PHASE1_INFEASIBLE {
            let status = match exit.status {
                SdpStatus::MaxIterations => SdpStatus::MaxIterations,
                _ if s_star > PHASE1_INFEASIBLE => SdpStatus::Infeasible,
                _ => SdpStatus::Infeasible,
            };
            return Ok(finish(prob, exit.x[..k].to_vec(), status, iterations, f64::NAN, trace));
        }
        x = exit.x[..k].to_vec();
        if prob.eval(&x).cholesky_unchecked().is_err() {
            return Ok(finish(prob, x, SdpStatus::Infeasible, iterations, f64::NAN, trace));
        }
    }

    let exit = barrier_minimize(prob, x, opts, opts.mu_init, None, &mut iterations, &mut trace)?;
    let gap = exit.final_mu * k.max(d) as f64;
    Ok(finish(prob, exit.x, exit.status, iterations, gap, trace))
}

/// Minimize the largest eigenvalue of an affine symmetric map:
/// `min_x λmax(S0 + Σ x_i S_i)`, returned as `(x, λ*, solution)`.
///
/// Solved as `min λ` subject to `λI − S(x) ⪰ 0` with `λ` appended as the
/// last decision variable.
pub fn min_max_eigenvalue(
    s0: &Matrix,
    s_terms: &[ConstraintMatrix],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, f64, SdpSolution), SdpError> {
    let d = s0.rows();
    let k = s_terms.len();
    let mut cost = vec![0.0; k + 1];
    cost[k] = 1.0;
    let mut fs: Vec<ConstraintMatrix> = s_terms.iter().map(|t| t.clone().scaled(-1.0)).collect();
    fs.push(ConstraintMatrix::identity_block(d, 0, d));
    let prob = LmiProblem::new(cost, s0.scaled(-1.0), fs)?;
    let sol = solve_min_cost_lmi(&prob, opts)?;
    let lambda = *sol.x.last().expect("lambda variable present");
    Ok((sol.x[..k].to_vec(), lambda, sol))
}

/// Render the debug trace as CSV.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,mu,objective,min_eig\n");
    for row in trace {
        out.push_str(&format!("{},{},{},{}\n", row.iteration, row.mu, row.objective, row.min_eig));
    }
    out
}

struct BarrierExit {
    x: Vec<f64>,
    status: SdpStatus,
    final_mu: f64,
}

/// Follow the central path from a strictly feasible start.
fn barrier_minimize(
    prob: &LmiProblem,
    mut x: Vec<f64>,
    opts: &SolverOptions,
    mu_init: f64,
    stop_below: Option<f64>,
    iterations: &mut usize,
    trace: &mut Vec<TraceRow>,
) -> Result<BarrierExit, SdpError> {
    let k = prob.num_vars();
    let d = prob.lmi_dim();
    let scale = k.max(d) as f64;
    let mut mu = mu_init;

    // Flattened vector table: pair p of constraint i owns the vector slots
    // recorded in slots[i][p].
    let mut vectors: Vec<&SparseVec> = Vec::new();
    let mut slots: Vec<Vec<(usize, usize)>> = Vec::with_capacity(k);
    for f in &prob.fs {
        let mut per = Vec::with_capacity(f.pairs.len());
        for (u, v) in &f.pairs {
            vectors.push(u);
            vectors.push(v);
            per.push((vectors.len() - 2, vectors.len() - 1));
        }
        slots.push(per);
    }

    let mut f = prob.eval(&x);
    let mut chol = f
        .cholesky_unchecked()
        .map_err(|_| SdpError::NumericalBreakdown("barrier started outside the cone".into()))?;

    loop {
        // Center at the current μ.
        let mut prev_obj = f64::INFINITY;
        let mut stalled = 0usize;
        loop {
            if *iterations >= opts.max_newton {
                return Ok(BarrierExit { x, status: SdpStatus::MaxIterations, final_mu: mu });
            }
            *iterations += 1;

            let u = Matrix::spd_inverse_from_chol(&chol);
            // W[slot] = F⁻¹ · vector (F⁻¹ is symmetric, so rows are columns).
            let w: Vec<Vec<f64>> = vectors
                .iter()
                .map(|sv| {
                    let mut acc = vec![0.0; d];
                    for &(idx, val) in &sv.entries {
                        for (a, &ui) in acc.iter_mut().zip(u.row(idx)) {
                            *a += val * ui;
                        }
                    }
                    acc
                })
                .collect();

            // Gradient of cᵀx − μ log det F(x).
            let mut grad = prob.cost.clone();
            for i in 0..k {
                let mut tr = 0.0;
                for &(su, sv) in &slots[i] {
                    tr += 2.0 * vectors[su].dot_dense(&w[sv]);
                }
                grad[i] -= mu * tr;
            }

            // H_ij = μ tr(F⁻¹F_iF⁻¹F_j), expanded over the outer pairs.
            let mut hess = Matrix::zeros(k, k);
            for i in 0..k {
                for j in i..k {
                    let mut h = 0.0;
                    for &(su, sv) in &slots[i] {
                        for &(su2, sv2) in &slots[j] {
                            let v_u2 = vectors[sv].dot_dense(&w[su2]);
                            let u_v2 = vectors[su].dot_dense(&w[sv2]);
                            let v_v2 = vectors[sv].dot_dense(&w[sv2]);
                            let u_u2 = vectors[su].dot_dense(&w[su2]);
                            h += 2.0 * (v_u2 * u_v2 + v_v2 * u_u2);
                        }
                    }
                    h *= mu;
                    hess[(i, j)] = h;
                    hess[(j, i)] = h;
                }
            }

            let step = solve_newton_system(&mut hess, &grad)?;
            let decrement_sq: f64 =
                grad.iter().zip(&step).map(|(g, s)| -g * s).sum::<f64>().max(0.0);

            if opts.trace {
                let objective = dot(&prob.cost, &x);
                let min_eig = f.sym_eig().map(|e| e.eigenvalues[0]).unwrap_or(f64::NAN);
                trace.push(TraceRow { iteration: *iterations, mu, objective, min_eig });
            }

            // Backtracking line search keeping F(x) ≻ 0.
            let phi0 = dot(&prob.cost, &x) - mu * Matrix::logdet_from_chol(&chol);
            let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-14 {
                let x_try: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi + t * si).collect();
                let f_try = prob.eval(&x_try);
                if let Ok(chol_try) = f_try.cholesky_unchecked() {
                    let phi_try = dot(&prob.cost, &x_try) - mu * Matrix::logdet_from_chol(&chol_try);
                    if phi_try <= phi0 + opts.armijo * t * slope {
                        x = x_try;
                        f = f_try;
                        chol = chol_try;
                        accepted = true;
                        break;
                    }
                }
                t *= opts.backtrack;
            }

            let obj_now = dot(&prob.cost, &x);
            if let Some(threshold) = stop_below {
                if obj_now <= threshold {
                    return Ok(BarrierExit { x, status: SdpStatus::Optimal, final_mu: mu });
                }
            }
            // Exit centering on a small Newton decrement, a failed line
            // search, or repeated steps without objective progress. The
            // last case covers centering problems whose minimizer escapes
            // to infinity along a PSD recession direction (then the
            // decrement stays bounded away from zero while the objective
            // has already converged).
            if (obj_now - prev_obj).abs() <= 1e-9 * (1.0 + obj_now.abs()) {
                stalled += 1;
            } else {
                stalled = 0;
            }
            prev_obj = obj_now;
            if !accepted || stalled >= 2 || decrement_sq <= 1e-6 * mu + 1e-14 {
                break;
            }
        }

        let objective = dot(&prob.cost, &x);
        if scale * mu <= opts.gap_tol * (1.0 + objective.abs()) {
            return Ok(BarrierExit { x, status: SdpStatus::Optimal, final_mu: mu });
        }
        mu *= opts.mu_factor;
    }
}

/// Solve `H Δ = −g` by Cholesky with an escalating ridge fallback.
fn solve_newton_system(hess: &mut Matrix, grad: &[f64]) -> Result<Vec<f64>, SdpError> {
    let k = grad.len();
    let base = (0..k).map(|i| hess[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
    let mut ridge = 0.0;
    for attempt in 0..12 {
        if attempt > 0 {
            ridge = if ridge == 0.0 { base * 1e-14 } else { ridge * 100.0 };
            for i in 0..k {
                hess[(i, i)] += ridge;
            }
        }
        if let Ok(chol) = hess.cholesky_unchecked() {
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            let y = crate::linalg::forward_substitute(&chol, &neg);
            return Ok(crate::linalg::back_substitute_transposed(&chol, &y));
        }
    }
    Err(SdpError::NumericalBreakdown("Newton system not positive definite".into()))
}

fn finish(
    prob: &LmiProblem,
    x: Vec<f64>,
    status: SdpStatus,
    iterations: usize,
    gap: f64,
    trace: Vec<TraceRow>,
) -> SdpSolution {
    let objective = dot(&prob.cost, &x);
    let min_eig = prob.eval(&x).sym_eig().map(|e| e.eigenvalues[0]).unwrap_or(f64::NAN);
    SdpSolution { x, objective, status, min_eig, iterations, gap_estimate: gap, trace }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::testkit;

    fn solve(prob: &LmiProblem) -> SdpSolution {
        solve_min_cost_lmi(prob, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn constraint_matrix_dense_roundtrip() {
        let mut rng = SplitMix64::new(3);
        let s = testkit::random_symmetric(&mut rng, 6);
        let c = ConstraintMatrix::from_dense(&s).unwrap();
        assert!(c.to_dense().sub(&s).max_abs() < 1e-14);
        let id = ConstraintMatrix::identity_block(5, 1, 4).to_dense();
        let mut expected = Matrix::zeros(5, 5);
        for i in 1..4 {
            expected[(i, i)] = 1.0;
        }
        assert_eq!(id, expected);
    }

    #[test]
    fn max_eigenvalue_of_diagonal() {
        // min λ s.t. λI − diag(1,2,3) ⪰ 0 → λ = 3.
        let (_, lambda, sol) =
            min_max_eigenvalue(&Matrix::diag(&[1.0, 2.0, 3.0]), &[], &SolverOptions::default())
                .unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((lambda - 3.0).abs() < 1e-6, "lambda = {lambda}");
        assert!(sol.min_eig >= -1e-7);
    }

    #[test]
    fn determinant_boundary() {
        // min x s.t. [[x,1],[1,x]] ⪰ 0: needs x² ≥ 1 with x > 0, so x = 1.
        let f0 = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let prob = LmiProblem::from_dense(vec![1.0], f0, &[Matrix::identity(2)]).unwrap();
        let sol = solve(&prob);
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "x = {}", sol.x[0]);
        assert!(sol.min_eig >= -1e-7);
        assert!(sol.gap_estimate <= 1e-6 * (1.0 + sol.objective.abs()));
    }

    #[test]
    fn random_min_max_eigenvalue_matches_eigensolver() {
        let mut rng = SplitMix64::new(0x5D9);
        for dim in [2usize, 4, 8] {
            let s = testkit::random_symmetric(&mut rng, dim);
            let (_, lambda, sol) = min_max_eigenvalue(&s, &[], &SolverOptions::default()).unwrap();
            let expected = s.sym_eig().unwrap().lambda_max();
            assert_eq!(sol.status, SdpStatus::Optimal);
            assert!((lambda - expected).abs() < 1e-6, "dim {dim}: {lambda} vs {expected}");
        }
    }

    #[test]
    fn min_max_eigenvalue_with_free_variables() {
        let opts = SolverOptions::default();
        // S(x) = diag(x, −x): λ* = 0 at x = 0.
        let terms = vec![ConstraintMatrix::from_dense(&Matrix::diag(&[1.0, -1.0])).unwrap()];
        let (x, lambda, _) = min_max_eigenvalue(&Matrix::zeros(2, 2), &terms, &opts).unwrap();
        assert!(lambda.abs() < 1e-6, "lambda = {lambda}");
        assert!(x[0].abs() < 1e-3, "x = {}", x[0]);

        // S(x) = [[1, x], [x, 1]]: eigenvalues 1 ± |x|, so λ* = 1 at x = 0.
        let off = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let terms = vec![ConstraintMatrix::from_dense(&off).unwrap()];
        let (x, lambda, _) = min_max_eigenvalue(&Matrix::identity(2), &terms, &opts).unwrap();
        assert!((lambda - 1.0).abs() < 1e-6, "lambda = {lambda}");
        assert!(x[0].abs() < 1e-3, "x = {}", x[0]);
    }

    #[test]
    fn detects_infeasibility() {
        // F(x) = −I + x·0 can never be PSD.
        let prob = LmiProblem::from_dense(
            vec![1.0],
            Matrix::identity(2).scaled(-1.0),
            &[Matrix::zeros(2, 2)],
        )
        .unwrap();
        let sol = solve(&prob);
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn respects_newton_budget() {
        let opts = SolverOptions { max_newton: 3, ..SolverOptions::default() };
        let (_, _, sol) = min_max_eigenvalue(&Matrix::diag(&[1.0, 2.0]), &[], &opts).unwrap();
        assert_eq!(sol.status, SdpStatus::MaxIterations);
        assert!(sol.iterations <= 3);
    }

    #[test]
    fn objective_non_increasing_along_path() {
        let mut rng = SplitMix64::new(0xCAFE);
        let s = testkit::random_symmetric(&mut rng, 6);
        let opts = SolverOptions { trace: true, ..SolverOptions::default() };
        let (_, _, sol) = min_max_eigenvalue(&s, &[], &opts).unwrap();
        assert!(!sol.trace.is_empty());

        // Objective at the last iterate of each μ, phase 2 only (phase 2
        // restarts the μ schedule, so take the final non-increasing run).
        let mut centered: Vec<(f64, f64)> = Vec::new();
        for row in &sol.trace {
            match centered.last_mut() {
                Some((mu, obj)) if *mu == row.mu => *obj = row.objective,
                _ => centered.push((row.mu, row.objective)),
            }
        }
        let mut start = 0;
        for i in 1..centered.len() {
            if centered[i].0 > centered[i - 1].0 {
                start = i;
            }
        }
        let tol = 1e-7 * (1.0 + sol.objective.abs());
        let mut prev = f64::INFINITY;
        for &(_, obj) in &centered[start..] {
            assert!(obj <= prev + tol, "objective increased along the path");
            prev = obj;
        }
    }

    #[test]
    fn trace_csv_shape() {
        let opts = SolverOptions { trace: true, ..SolverOptions::default() };
        let (_, _, sol) = min_max_eigenvalue(&Matrix::diag(&[1.0, 5.0]), &[], &opts).unwrap();
        let csv = trace_to_csv(&sol.trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iteration,mu,objective,min_eig");
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 4);
    }

    #[test]
    fn structured_matches_dense_assembly() {
        // The same min-λmax problem with terms given as outer pairs and as
        // dense matrices must reach the same optimum.
        let mut rng = SplitMix64::new(77);
        let dim = 5;
        let mut terms_dense = Vec::new();
        let mut terms_pairs = Vec::new();
        for _ in 0..3 {
            let u: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
            let v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
            let pair = ConstraintMatrix::outer_pair(
                dim,
                SparseVec::from_dense_row(0, &u),
                SparseVec::from_dense_row(0, &v),
            );
            terms_dense.push(ConstraintMatrix::from_dense(&pair.to_dense()).unwrap());
            terms_pairs.push(pair);
        }
        let s0 = testkit::random_symmetric(&mut rng, dim);
        let opts = SolverOptions::default();
        let (_, la, sa) = min_max_eigenvalue(&s0, &terms_dense, &opts).unwrap();
        let (_, lb, sb) = min_max_eigenvalue(&s0, &terms_pairs, &opts).unwrap();
        assert_eq!(sa.status, SdpStatus::Optimal);
        assert_eq!(sb.status, SdpStatus::Optimal);
        assert!((la - lb).abs() < 1e-6, "{la} vs {lb}");
    }
}
