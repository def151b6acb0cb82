//! Built-in oracle and invariant checks behind the `selftest` subcommand.
//!
//! A trimmed, fast version of what the test suites verify: hand-computed
//! kernel values, the scalar worked example, the achievability and
//! round-trip identities on random instances, solver oracles, and the
//! observer optimality orderings.

use crate::disturbance::{generate, PatternKind, PatternSpec};
use crate::linalg::Matrix;
use crate::model::{stack_disturbance, stack_measurement_noise, StackedOperators};
use crate::rng::SplitMix64;
use crate::sdp::{min_max_eigenvalue, SolverOptions};
use crate::sls;
use crate::synthesis::{self, SynthesisProblem};
use crate::testkit;

type Check = (&'static str, fn() -> Result<(), String>);

fn ensure(cond: bool, what: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    if (a - b).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {a} vs {b}"))
    }
}

fn check_linalg_hand_values() -> Result<(), String> {
    let l = Matrix::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]])
        .cholesky()
        .map_err(|e| e.to_string())?;
    ensure(
        l.sub(&Matrix::from_rows(&[&[2.0, 0.0], &[1.0, 2.0]])).max_abs() < 1e-12,
        "Cholesky of [[4,2],[2,5]]",
    )?;

    let eig = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]])
        .sym_eig()
        .map_err(|e| e.to_string())?;
    close(eig.eigenvalues[0], 1.0, 1e-10, "lambda_min of [[2,1],[1,2]]")?;
    close(eig.eigenvalues[1], 3.0, 1e-10, "lambda_max of [[2,1],[1,2]]")?;

    let exp = Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).expm();
    ensure(
        exp.sub(&Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]])).max_abs() < 1e-12,
        "exp of the nilpotent shift",
    )?;

    let golden = ((3.0 + 5.0f64.sqrt()) / 2.0).sqrt();
    close(
        Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).spectral_norm(),
        golden,
        1e-10,
        "spectral norm of the shear",
    )
}

fn check_toy_quadratic_oracle() -> Result<(), String> {
    let prob = SynthesisProblem::unit(&testkit::toy_scalar_system());
    let maps = synthesis::synth_h2(&prob).map_err(|e| e.to_string())?;
    close(maps.phi_v[(1, 1)], 0.25, 1e-9, "free entry f3")?;
    close(synthesis::h2_cost(&maps, &prob), 2.125, 1e-9, "toy objective")?;
    let gains = sls::recover_gains(&maps).map_err(|e| e.to_string())?;
    close(gains.matrix()[(1, 1)], 0.25, 1e-9, "recovered gain")?;
    close(gains.matrix()[(0, 0)], 0.0, 1e-9, "recovered gain zero block")
}

fn check_toy_clairvoyant_oracle() -> Result<(), String> {
    let prob = SynthesisProblem::unit(&testkit::toy_scalar_system());
    let nc = synthesis::synth_clairvoyant(&prob).map_err(|e| e.to_string())?;
    close(nc.phi_v[(0, 1)], 0.5, 1e-9, "anticausal entry")?;
    close(synthesis::h2_cost(&nc, &prob), 1.625, 1e-9, "clairvoyant objective")
}

fn check_achievability_randomized() -> Result<(), String> {
    let mut rng = SplitMix64::new(0x5e1f);
    let opts = SolverOptions::default();
    for trial in 0..4 {
        let (n, m, t) = testkit::random_dims(&mut rng, 2, 3);
        let sys = testkit::random_system(&mut rng, n, m, 1, t);
        let prob = SynthesisProblem::unit(&sys);
        let nc = synthesis::synth_clairvoyant(&prob).map_err(|e| e.to_string())?;
        let observers = [
            synthesis::synth_h2(&prob).map_err(|e| e.to_string())?,
            nc.clone(),
            synthesis::synth_hinf(&prob, &opts).map_err(|e| e.to_string())?,
            synthesis::synth_regret(&prob, &nc, &opts).map_err(|e| e.to_string())?.0,
        ];
        for (idx, maps) in observers.iter().enumerate() {
            let resid = sls::achievability_residual(maps, &prob.ops);
            if resid > 1e-8 {
                return Err(format!("trial {trial} observer {idx}: residual {resid:e}"));
            }
        }
    }
    Ok(())
}

fn check_roundtrip_randomized() -> Result<(), String> {
    let mut rng = SplitMix64::new(0x0707);
    for trial in 0..10 {
        let (n, m, t) = testkit::random_dims(&mut rng, 4, 5);
        let sys = testkit::random_system(&mut rng, n, m, 1, t);
        let ops = StackedOperators::build(&sys);
        let maps = testkit::random_causal_maps(&mut rng, &ops);
        let gains = sls::recover_gains(&maps).map_err(|e| e.to_string())?;
        let back = sls::error_maps_from_gain_matrix(gains.matrix(), &ops).map_err(|e| e.to_string())?;
        let scale = maps.phi_v.frob_norm().max(maps.phi_w.frob_norm()).max(1.0);
        let err = back
            .phi_v
            .sub(&maps.phi_v)
            .frob_norm()
            .max(back.phi_w.sub(&maps.phi_w).frob_norm());
        if err / scale > 1e-8 {
            return Err(format!("trial {trial}: roundtrip error {:e}", err / scale));
        }
    }
    Ok(())
}

fn check_simulation_equivalence() -> Result<(), String> {
    let mut rng = SplitMix64::new(0x51e7);
    for trial in 0..10 {
        let (n, m, t) = testkit::random_dims(&mut rng, 3, 5);
        let sys = testkit::random_system(&mut rng, n, m, 2, t);
        let ops = StackedOperators::build(&sys);
        let maps = testkit::random_causal_maps(&mut rng, &ops);
        let gains = sls::recover_gains(&maps).map_err(|e| e.to_string())?;

        let steps = t + 1;
        let mut draw = |len: usize| -> Vec<Vec<f64>> {
            (0..steps).map(|_| (0..len).map(|_| rng.standard_normal()).collect()).collect()
        };
        let u_seq = draw(2);
        let v_seq = draw(m);
        let w_seq = draw(n);
        let x0: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();

        let (_, e_sim) = sls::simulate_observer(&sys, &gains, &x0, &x0, &u_seq, &v_seq, &w_seq);
        let e_map = sls::error_trajectory(
            &maps,
            &stack_measurement_noise(&sys, &v_seq),
            &stack_disturbance(&sys, None, &w_seq),
        );
        let scale = e_map.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        for (a, b) in e_sim.iter().zip(&e_map) {
            if (a - b).abs() > 1e-9 * scale {
                return Err(format!("trial {trial}: {a} vs {b}"));
            }
        }
    }
    Ok(())
}

fn check_sdp_oracles() -> Result<(), String> {
    let mut rng = SplitMix64::new(0xdead);
    let opts = SolverOptions::default();
    for trial in 0..5 {
        let dim = 2 + (rng.next_u64() as usize) % 7;
        let s = testkit::random_symmetric(&mut rng, dim);
        let (_, lambda, _) = min_max_eigenvalue(&s, &[], &opts).map_err(|e| e.to_string())?;
        let expected = s.sym_eig().map_err(|e| e.to_string())?.lambda_max();
        close(lambda, expected, 1e-6, &format!("trial {trial} eigensolver oracle"))?;
    }
    for trial in 0..3 {
        let dim = 3 + (rng.next_u64() as usize) % 4;
        let k = 1 + (rng.next_u64() as usize) % 3;
        let s0 = testkit::random_symmetric(&mut rng, dim);
        let terms: Vec<Matrix> = (0..k).map(|_| testkit::random_symmetric(&mut rng, dim)).collect();
        let cms: Vec<_> = terms
            .iter()
            .map(|t| crate::sdp::ConstraintMatrix::from_dense(t).expect("symmetric"))
            .collect();
        let (_, lambda, _) = min_max_eigenvalue(&s0, &cms, &opts).map_err(|e| e.to_string())?;
        let reference = testkit::subgradient_min_lambda_max(&s0, &terms, 1e-4, 30_000);
        close(lambda, reference, 1e-3, &format!("trial {trial} subgradient oracle"))?;
    }
    Ok(())
}

fn check_observer_orderings() -> Result<(), String> {
    let mut rng = SplitMix64::new(0x0bde);
    let opts = SolverOptions::default();
    for trial in 0..2 {
        let sys = testkit::random_system(&mut rng, 2, 2, 1, 3);
        let prob = SynthesisProblem::unit(&sys);
        let h2 = synthesis::synth_h2(&prob).map_err(|e| e.to_string())?;
        let nc = synthesis::synth_clairvoyant(&prob).map_err(|e| e.to_string())?;
        let hinf = synthesis::synth_hinf(&prob, &opts).map_err(|e| e.to_string())?;
        let (reg, cert) = synthesis::synth_regret(&prob, &nc, &opts).map_err(|e| e.to_string())?;

        let slack = 1e-6;
        let h2_best = synthesis::h2_cost(&h2, &prob);
        for other in [&hinf, &reg] {
            if h2_best > synthesis::h2_cost(other, &prob) * (1.0 + slack) {
                return Err(format!("trial {trial}: quadratic cost not minimized by its observer"));
            }
        }
        let hinf_best = synthesis::hinf_cost(&hinf, &prob);
        for other in [&h2, &reg] {
            if hinf_best > synthesis::hinf_cost(other, &prob) * (1.0 + slack) {
                return Err(format!("trial {trial}: worst case not minimized by its observer"));
            }
        }
        for other in [&h2, &hinf] {
            let (r, _) = synthesis::regret_value(other, &nc, &prob);
            if cert.lambda_star > r * (1.0 + slack) + slack {
                return Err(format!("trial {trial}: regret not minimized by its observer"));
            }
        }
    }
    Ok(())
}

fn check_noise_determinism() -> Result<(), String> {
    let spec = PatternSpec::new(PatternKind::Gaussian, 0xF00D);
    let a = generate(&spec, 3, 2, 5, 11).map_err(|e| e.to_string())?;
    let b = generate(&spec, 3, 2, 5, 11).map_err(|e| e.to_string())?;
    ensure(a.v_stack == b.v_stack && a.w_stack == b.w_stack, "identical seeds and indices")?;
    let c = generate(&spec, 3, 2, 5, 12).map_err(|e| e.to_string())?;
    ensure(a.v_stack != c.v_stack, "distinct realization indices")
}

fn check_worst_case_attainment() -> Result<(), String> {
    let prob = SynthesisProblem::unit(&testkit::toy_scalar_system());
    let maps = synthesis::synth_h2(&prob).map_err(|e| e.to_string())?;
    let noise = crate::disturbance::worst_case_noise(&maps, &prob);
    let e = sls::error_trajectory(&maps, &noise.v_stack, &noise.w_stack);
    let attained: f64 = e.iter().map(|x| x * x).sum();
    close(attained, synthesis::hinf_cost(&maps, &prob), 1e-8, "worst-case cost")
}

/// All selftest checks in execution order.
pub fn checks() -> Vec<Check> {
    vec![
        ("linalg-hand-values", check_linalg_hand_values),
        ("toy-quadratic-oracle", check_toy_quadratic_oracle),
        ("toy-clairvoyant-oracle", check_toy_clairvoyant_oracle),
        ("achievability-randomized", check_achievability_randomized),
        ("parametrization-roundtrip", check_roundtrip_randomized),
        ("simulation-equivalence", check_simulation_equivalence),
        ("sdp-oracles", check_sdp_oracles),
        ("observer-orderings", check_observer_orderings),
        ("noise-determinism", check_noise_determinism),
        ("worst-case-attainment", check_worst_case_attainment),
    ]
}

/// Run every check, printing one line each; returns whether all passed.
pub fn run_selftest() -> bool {
    let mut all_ok = true;
    for (name, check) in checks() {
        match check() {
            Ok(()) => println!("ok   {name}"),
            Err(why) => {
                all_ok = false;
                println!("FAIL {name}: {why}");
            }
        }
    }
    all_ok
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        assert!(super::run_selftest());
    }
}
