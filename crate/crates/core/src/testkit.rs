//! Deterministic generators for randomized checks.
//!
//! Shared by unit tests, the integration suites, and the `selftest`
//! subcommand, so the same instance distributions back all three.

use crate::linalg::Matrix;
use crate::model::{CostWeights, LtvSystem, NoiseModel};
use crate::rng::SplitMix64;

/// Matrix with i.i.d. standard normal entries.
pub fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.standard_normal()).collect();
    Matrix::from_vec(rows, cols, data).expect("finite draws")
}

/// Random symmetric matrix `(R + Rᵀ)/2`.
pub fn random_symmetric(rng: &mut SplitMix64, dim: usize) -> Matrix {
    let r = random_matrix(rng, dim, dim);
    r.add(&r.transpose()).scaled(0.5)
}

/// Random symmetric positive-definite matrix `RᵀR/dim + 0.2·I`.
pub fn random_spd(rng: &mut SplitMix64, dim: usize) -> Matrix {
    let r = random_matrix(rng, dim, dim);
    let mut s = r.transpose().matmul(&r).scaled(1.0 / dim as f64);
    for i in 0..dim {
        s[(i, i)] += 0.2;
    }
    s.symmetrized()
}

/// Random LTV system with state matrices scaled toward spectral radius ≲ 1.
pub fn random_system(rng: &mut SplitMix64, n: usize, m: usize, p: usize, horizon: usize) -> LtvSystem {
    let scale = 0.9 / (n as f64).sqrt();
    let a_seq = (0..=horizon).map(|_| random_matrix(rng, n, n).scaled(scale)).collect();
    let b_seq = (0..=horizon).map(|_| random_matrix(rng, n, p)).collect();
    let c_seq = (0..=horizon).map(|_| random_matrix(rng, m, n)).collect();
    LtvSystem::new(n, m, p, horizon, a_seq, b_seq, c_seq).expect("dimensions consistent")
}

/// Random dimensions within the ranges used by the randomized suites.
pub fn random_dims(rng: &mut SplitMix64, max_nm: usize, max_t: usize) -> (usize, usize, usize) {
    let n = 1 + (rng.next_u64() as usize) % max_nm;
    let m = 1 + (rng.next_u64() as usize) % max_nm;
    let t = 1 + (rng.next_u64() as usize) % max_t;
    (n, m, t)
}

/// Noise model with random SPD covariance and bound blocks.
pub fn random_noise_model(rng: &mut SplitMix64, sys: &LtvSystem) -> NoiseModel {
    let steps = sys.horizon() + 1;
    let hv = (0..steps).map(|_| random_spd(rng, sys.output_dim())).collect();
    let hw = (0..steps).map(|_| random_spd(rng, sys.state_dim())).collect();
    let sv = (0..steps).map(|_| random_spd(rng, sys.output_dim())).collect();
    let sw = (0..steps).map(|_| random_spd(rng, sys.state_dim())).collect();
    NoiseModel::new(hv, hw, sv, sw).expect("SPD blocks are invertible")
}

/// Cost weights with random SPD blocks.
pub fn random_weights(rng: &mut SplitMix64, sys: &LtvSystem) -> CostWeights {
    let q = (0..=sys.horizon()).map(|_| random_spd(rng, sys.state_dim())).collect();
    CostWeights::new(q).expect("SPD blocks")
}

/// Random causal error maps: a random lower block-triangular `Φ_v` completed
/// through the achievability identity.
pub fn random_causal_maps(rng: &mut SplitMix64, ops: &crate::model::StackedOperators) -> crate::sls::ErrorMaps {
    let dims = ops.dims;
    let mut phi_v = Matrix::zeros(dims.error, dims.noise_v);
    for i in 0..dims.error {
        let block_row = i / dims.n;
        for j in 0..((block_row + 1) * dims.m).min(dims.noise_v) {
            phi_v[(i, j)] = 0.5 * rng.standard_normal();
        }
    }
    crate::sls::ErrorMaps::from_phi_v(phi_v, ops, true).expect("triangular by construction")
}

/// Reference minimizer for `min_x λmax(S0 + Σ x_i S_i)`: projected
/// subgradient with a Polyak-style step against an adaptive target,
/// followed by gradient descent on the smoothed surrogate
/// `μ ln Σ exp(λ_j/μ)` (within `μ ln d` of the true objective) to polish
/// past the nonsmooth crawl of plain subgradient steps.
///
/// Independent of the interior-point path: only the eigensolver is shared.
pub fn subgradient_min_lambda_max(s0: &Matrix, terms: &[Matrix], tol: f64, max_iters: usize) -> f64 {
    let eval = |x: &[f64]| -> (f64, Vec<f64>) {
        let mut s = s0.clone();
        for (term, &xi) in terms.iter().zip(x) {
            s = s.add(&term.scaled(xi));
        }
        let eig = s.symmetrized().sym_eig().expect("symmetric by construction");
        let lambda = eig.lambda_max();
        let top = eig.vector(s.rows() - 1);
        // Subgradient: d λmax / d x_i = topᵀ S_i top.
        let grad = terms.iter().map(|term| {
            let tv = term.matvec(&top);
            crate::linalg::dot(&top, &tv)
        });
        (lambda, grad.collect())
    };

    let mut x = vec![0.0; terms.len()];
    let mut x_best = x.clone();
    let (mut best, _) = eval(&x);
    let scale0 = 1.0 + best.abs();

    // Polyak steps against the adaptive target `best − δ`, with the whole
    // δ schedule restarted from the incumbent until a round stops paying:
    // one schedule's travel budget is bounded by its δ sum, so far-away
    // optima need several rounds.
    let mut spent = 0usize;
    for _ in 0..60 {
        let round_start = best;
        let mut delta = 0.1 * scale0;
        let mut since_improvement = 0usize;
        x = x_best.clone();
        while spent < max_iters {
            spent += 1;
            let (value, grad) = eval(&x);
            if value < best {
                best = value;
                x_best = x.clone();
            }
            // Only an improvement commensurate with the current target gap
            // resets the counter; microscopic wiggles must not stall the
            // δ schedule.
            if value < round_start.min(best + 0.01 * delta) - 0.01 * delta {
                since_improvement = 0;
            } else {
                since_improvement += 1;
            }
            if since_improvement >= 100 {
                delta *= 0.5;
                since_improvement = 0;
                if delta < tol * scale0 {
                    break;
                }
            }
            let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
            if grad_sq < 1e-300 {
                break;
            }
            let step = (value - (best - delta)) / grad_sq;
            for (xi, g) in x.iter_mut().zip(&grad) {
                *xi -= step * g;
            }
        }
        if round_start - best <= 0.25 * tol * scale0 || spent >= max_iters {
            break;
        }
    }
    x = x_best.clone();

    // Prox polish with a minimax model over the near-top eigenvalue
    // branches (subgradient steps crawl once several top eigenvalues
    // coalesce, which is the generic situation at these optima).
    for _ in 0..3 {
        let (value, point) = spectral_prox_polish(s0, terms, &x, 6000);
        if value < best - 1e-12 * (1.0 + best.abs()) {
            best = value;
            x = point;
        } else {
            best = best.min(value);
            break;
        }
    }
    best
}

/// Prox-bundle polish for `min_x λmax(S(x))`.
///
/// At an iterate with (near-)degenerate top eigenvalue the subdifferential
/// is generated by the whole top eigenspace: with `V` an orthonormal basis
/// of the eigenvalues within a band of the maximum, the local model is
/// `λmax(Λ + Vᵀ(Σ d_i S_i)V)` and the proximal step
/// `min_d model(d) + ‖d‖²/(2σ)` has the dual
///
/// ```text
/// max ⟨Λ, P⟩ − (σ/2)‖A*(P)‖²  over  P ⪰ 0, tr P = 1,
/// ```
///
/// with `A*(P)_i = ⟨Vᵀ S_i V, P⟩`, solved by projected gradient ascent on
/// the spectraplex. This is the standard spectral-bundle construction in
/// miniature, and it keeps moving where plain subgradient steps stall.
fn spectral_prox_polish(
    s0: &Matrix,
    terms: &[Matrix],
    start: &[f64],
    max_iters: usize,
) -> (f64, Vec<f64>) {
    // Top eigenvalue, the in-band eigenspace Λ, and the compressed terms
    // M_i = Vᵀ S_i V.
    let local = |x: &[f64]| -> (f64, Vec<f64>, Vec<Matrix>) {
        let mut s = s0.clone();
        for (term, &xi) in terms.iter().zip(x) {
            s = s.add(&term.scaled(xi));
        }
        let eig = s.symmetrized().sym_eig().expect("symmetric by construction");
        let dim = s.rows();
        let top = eig.eigenvalues[dim - 1];
        let band = 1e-4 * (1.0 + top.abs());
        let mut r = 0;
        while r < dim.min(6) && top - eig.eigenvalues[dim - 1 - r] <= band {
            r += 1;
        }
        let mut basis = Matrix::zeros(dim, r);
        for j in 0..r {
            let column = eig.vector(dim - r + j);
            for (i, value) in column.iter().enumerate() {
                basis[(i, j)] = value * 1.0;
            }
        }
        let lambdas: Vec<f64> = (0..r).map(|j| eig.eigenvalues[dim - r + j]).collect();
        let compressed: Vec<Matrix> = terms
            .iter()
            .map(|term| basis.transpose().matmul(&term.matmul(&basis)).symmetrized())
            .collect();
        (top, lambdas, compressed)
    };

    let mut x = start.to_vec();
    let (mut fx, mut lambdas, mut compressed) = local(&x);
    let mut sigma = 1.0;
    for _ in 0..max_iters {
        let r = lambdas.len();
        // Projected gradient ascent on the spectraplex.
        let mut p = Matrix::identity(r).scaled(1.0 / r as f64);
        let lipschitz: f64 =
            sigma * compressed.iter().map(|m| m.frob_norm().powi(2)).sum::<f64>() + 1e-12;
        let adjoint = |p: &Matrix| -> Vec<f64> {
            compressed
                .iter()
                .map(|m| {
                    let mut acc = 0.0;
                    for a in 0..r {
                        for b in 0..r {
                            acc += m[(a, b)] * p[(a, b)];
                        }
                    }
                    acc
                })
                .collect()
        };
        for _ in 0..400 {
            let ap = adjoint(&p);
            let mut grad = Matrix::zeros(r, r);
            for a in 0..r {
                grad[(a, a)] += lambdas[a];
            }
            for (m, &coef) in compressed.iter().zip(&ap) {
                grad = grad.sub(&m.scaled(sigma * coef));
            }
            p = project_spectraplex(&p.add(&grad.scaled(1.0 / lipschitz)));
        }
        let ap = adjoint(&p);
        let step_sq: f64 = ap.iter().map(|a| a * a).sum();
        let model_decrease = 0.5 * sigma * step_sq;
        if std::env::var("SG_DEBUG").is_ok() {
            eprintln!("polish it: fx {fx:.8} r {r} sigma {sigma:.2e} pred {model_decrease:.3e}");
        }
        if model_decrease <= 1e-14 * (1.0 + fx.abs()) {
            break;
        }
        let trial: Vec<f64> = x.iter().zip(&ap).map(|(xi, a)| xi - sigma * a).collect();
        let (f_trial, l_trial, c_trial) = local(&trial);
        if f_trial <= fx - 0.05 * model_decrease {
            x = trial;
            fx = f_trial;
            lambdas = l_trial;
            compressed = c_trial;
            sigma = (sigma * 1.6).min(1e6);
        } else {
            sigma *= 0.35;
            if sigma < 1e-12 {
                break;
            }
        }
    }
    (fx, x)
}

/// Euclidean projection onto `{P ⪰ 0, tr P = 1}`: eigendecompose and
/// project the spectrum onto the probability simplex.
fn project_spectraplex(p: &Matrix) -> Matrix {
    let eig = p.symmetrized().sym_eig().expect("small symmetric matrix");
    let mut weights = eig.eigenvalues.clone();
    project_simplex(&mut weights);
    let r = weights.len();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..r {
        for i in 0..r {
            scaled[(i, j)] *= weights[j];
        }
    }
    scaled.matmul(&eig.eigenvectors.transpose()).symmetrized()
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(weights: &mut [f64]) {
    let r = weights.len();
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if value - candidate > 0.0 {
            theta = candidate;
        }
    }
    for w in weights.iter_mut() {
        *w = (*w - theta).max(0.0);
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    } else if r > 0 {
        let uniform = 1.0 / r as f64;
        weights.fill(uniform);
    }
}

/// The scalar two-step system a = 0.5, c = 1 used as a worked example
/// throughout the test suites.
pub fn toy_scalar_system() -> LtvSystem {
    LtvSystem::time_invariant(
        &Matrix::from_rows(&[&[0.5]]),
        &Matrix::from_rows(&[&[0.0]]),
        &Matrix::from_rows(&[&[1.0]]),
        1,
    )
}
