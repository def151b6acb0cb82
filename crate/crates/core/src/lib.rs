//! Finite-horizon observer synthesis for linear time-varying systems.
//!
//! The crate computes four state observers over a fixed prediction horizon —
//! quadratic-optimal (H2), worst-case-optimal (H∞), the non-causal
//! clairvoyant baseline, and the minimal-regret observer that closes the gap
//! between the two views — and benchmarks them under deterministic and
//! stochastic disturbance patterns.
//!
//! Layering, bottom up:
//!
//! * [`linalg`] — dense kernels (Cholesky, QR least squares, Jacobi
//!   eigendecomposition, matrix exponential).
//! * [`model`] — LTV systems, noise ellipsoids and covariances, cost
//!   weights, stacked operators, and the system file format.
//! * [`sls`] — error maps, achievability, gain recovery, trajectories.
//! * [`sdp`] — a dense barrier interior-point solver for
//!   eigenvalue-minimization LMIs.
//! * [`synthesis`] — the four observers and their cost/regret functionals.
//! * [`disturbance`] — the benchmark noise patterns and worst-case noise.
//! * [`bench`] — system catalog, discretization, the benchmark harness, and
//!   result export.

pub mod bench;
pub mod cli;
pub mod disturbance;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod sdp;
pub mod selftest;
pub mod sls;
pub mod synthesis;
pub mod testkit;
