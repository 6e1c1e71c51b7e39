mod common;

use common::oracles::*;
use dgcca_core::gcca::{finite_difference_objective, gcca_matrix, projection_matrix, reconstruction_error_direct};
use dgcca_core::{gcca_gradient, solve_gcca, GccaInput, Matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn input(seed: u64, widths: &[usize], n: usize, r: usize, eps: f64) -> GccaInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GccaInput::new(random_views(&mut rng, widths, n), r, eps).unwrap()
}

fn dense_views(input: &GccaInput) -> Vec<Dense> {
    input.views.iter().map(to_dense).collect()
}

#[test]
fn two_views_match_the_explicit_construction() {
    let inp = input(21, &[3, 3], 8, 2, 1e-8);
    let sol = solve_gcca(&inp).unwrap();
    let oracle = gcca_oracle(&dense_views(&inp), &[1.0, 1.0], 2, 1e-8);
    assert!((sol.reconstruction_error - oracle.fit_error).abs() <= 1e-6, "{} vs {}", sol.reconstruction_error, oracle.fit_error);
    for (a, b) in sol.eigenvalues.iter().zip(&oracle.eigenvalues) {
        assert!((a - b).abs() <= 1e-8);
    }
    assert!(max_principal_angle_sin(&to_dense(&sol.g), &oracle.g) <= 1e-6);
}

#[test]
fn zero_weight_view_drops_out() {
    let inp = input(22, &[3, 4, 3], 12, 2, 1e-6);
    let weighted = solve_gcca(&inp.clone().with_weights(vec![1.0, 0.0, 1.0]).unwrap()).unwrap();
    let pair = GccaInput::new(vec![inp.views[0].clone(), inp.views[2].clone()], 2, 1e-6).unwrap();
    let reduced = solve_gcca(&pair).unwrap();
    assert!(max_principal_angle_sin(&to_dense(&weighted.g), &to_dense(&reduced.g)) <= 1e-8);
    for (a, b) in weighted.eigenvalues.iter().zip(&reduced.eigenvalues) {
        assert!((a - b).abs() <= 1e-10);
    }
    assert!((weighted.reconstruction_error - reduced.reconstruction_error).abs() <= 1e-10);
    // U_j G is invariant to the basis chosen for G
    for (wj, rj) in [(0, 0), (2, 1)] {
        let a = weighted.u[wj].matmul(&weighted.g);
        let b = reduced.u[rj].matmul(&reduced.g);
        assert!(a.max_abs_diff(&b) <= 1e-8);
    }
    let grads = gcca_gradient(&inp.clone().with_weights(vec![1.0, 0.0, 1.0]).unwrap(), &weighted).unwrap();
    assert!(grads.per_view[1].max_abs() == 0.0);
}

#[test]
fn gradient_matches_finite_differences() {
    let inp = input(23, &[4, 4, 4], 10, 2, 1e-6);
    let sol = solve_gcca(&inp).unwrap();
    assert!(!sol.is_degenerate());
    let grads = gcca_gradient(&inp, &sol).unwrap();
    let mut checked = 0;
    for (j, g) in grads.per_view.iter().enumerate() {
        for row in 0..4 {
            for col in 0..10 {
                let analytic = g[(row, col)];
                if analytic.abs() <= 1e-6 {
                    continue;
                }
                let numeric = finite_difference_objective(&inp, j, row, col, 1e-5).unwrap();
                assert!(relative_error(analytic, numeric) <= 1e-4, "view {j} ({row},{col}): {analytic} vs {numeric}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 100);
}

#[test]
fn step_size_sweep_is_consistent() {
    let inp = input(24, &[4, 5, 3], 12, 2, 1e-6);
    let estimates: Vec<f64> = [1e-4, 1e-5, 1e-6].iter().map(|&h| finite_difference_objective(&inp, 1, 2, 3, h).unwrap()).collect();
    let sol = solve_gcca(&inp).unwrap();
    let analytic = gcca_gradient(&inp, &sol).unwrap().per_view[1][(2, 3)];
    for a in &estimates {
        for b in &estimates {
            assert!(relative_error(*a, *b) <= 1e-3, "{estimates:?}");
        }
    }
    assert!(relative_error(analytic, estimates[1]) <= 1e-4);
}

#[test]
fn gradient_is_invariant_to_joint_sign_flip() {
    let inp = input(25, &[3, 4, 5], 15, 2, 1e-4);
    let sol = solve_gcca(&inp).unwrap();
    let mut flipped = sol.clone();
    flipped.g = flipped.g.scale(-1.0);
    flipped.u = flipped.u.iter().map(|u| u.scale(-1.0)).collect();
    let a = gcca_gradient(&inp, &sol).unwrap();
    let b = gcca_gradient(&inp, &flipped).unwrap();
    for (x, y) in a.per_view.iter().zip(&b.per_view) {
        assert_eq!(x, y);
    }
}

#[test]
fn direct_error_equals_trace_identity() {
    for (seed, eps) in [(26, 1e-4), (27, 1e-8), (28, 0.0)] {
        let inp = input(seed, &[3, 5, 4], 14, 3, eps);
        let sol = solve_gcca(&inp).unwrap();
        let m = gcca_matrix(&inp).unwrap();
        let trace = sol.g.matmul(&m).matmul_nt(&sol.g).trace();
        let direct = reconstruction_error_direct(&sol, &inp).unwrap();
        assert!((direct - (3.0 * 3.0 - trace)).abs() <= 1e-8, "eps {eps}: {direct} vs {}", 9.0 - trace);
        assert!((direct - sol.reconstruction_error).abs() <= 1e-8);
    }
}

#[test]
fn full_rank_square_case_uses_whole_spectrum() {
    // o_j = N = r: every P_j is the identity, so M = J·I
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let views: Vec<Matrix> = (0..3).map(|_| random_matrix(&mut rng, 3, 3)).collect();
    let inp = GccaInput::new(views, 3, 0.0).unwrap();
    let sol = solve_gcca(&inp).unwrap();
    let (all, _) = jacobi_eigen(&oracle_m(&dense_views(&inp), &[1.0; 3], 0.0));
    let expected = 3.0 * 3.0 - all.iter().sum::<f64>();
    assert!((reconstruction_error_direct(&sol, &inp).unwrap() - expected).abs() <= 1e-8);
    assert!(sol.reconstruction_error.abs() <= 1e-8);
}

#[test]
fn identical_views_have_zero_error_and_flat_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let y = random_views(&mut rng, &[3], 10).remove(0);
    let inp = GccaInput::new(vec![y.clone(), y.clone(), y], 3, 0.0).unwrap();
    let sol = solve_gcca(&inp).unwrap();
    assert!(sol.reconstruction_error.abs() <= 1e-8);
    assert!((sol.objective - 9.0).abs() <= 1e-8);
    for g in gcca_gradient(&inp, &sol).unwrap().per_view {
        assert!(g.max_abs() <= 1e-8);
    }
    for (j, row, col) in [(0, 0, 0), (1, 2, 7), (2, 1, 4)] {
        assert!(finite_difference_objective(&inp, j, row, col, 1e-5).unwrap().abs() <= 1e-6);
    }
}

#[test]
fn scaling_a_view_keeps_the_subspace() {
    let inp = input(31, &[3, 4, 3], 12, 2, 0.0);
    let base = solve_gcca(&inp).unwrap();
    for c in [-3.0, 0.01, 250.0] {
        let mut scaled = inp.clone();
        scaled.views[1] = scaled.views[1].scale(c);
        let sol = solve_gcca(&scaled).unwrap();
        assert!(max_principal_angle_sin(&to_dense(&base.g), &to_dense(&sol.g)) <= 1e-6, "c = {c}");
    }
}

#[test]
fn projections_are_idempotent_at_small_ridge() {
    let inp = input(32, &[3, 5, 4], 12, 2, 1e-9);
    for y in &inp.views {
        let p = projection_matrix(y, 1e-9).unwrap();
        assert!(p.asymmetry() <= 1e-12);
        assert!(p.matmul(&p).sub(&p).frobenius_norm() <= 1e-6);
    }
}

fn instance_strategy() -> impl Strategy<Value = GccaInput> {
    (any::<u64>(), 2usize..=5, 8usize..=30, 1usize..=3, prop::sample::select(vec![0.0, 1e-8, 1e-4, 1e-2])).prop_map(
        |(seed, j, n, r, eps)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let widths: Vec<usize> = (0..j).map(|_| rng.random_range(3..=6)).collect();
            let weights: Vec<f64> = (0..j).map(|_| rng.random_range(0.1..2.0)).collect();
            GccaInput::new(random_views(&mut rng, &widths, n), r, eps).unwrap().with_weights(weights).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solution_invariants(inp in instance_strategy()) {
        let sol = solve_gcca(&inp).unwrap();
        let r = inp.r;
        prop_assert!(sol.g.matmul_nt(&sol.g).max_abs_diff(&Matrix::identity(r)) <= 1e-8);
        let direct = reconstruction_error_direct(&sol, &inp).unwrap();
        prop_assert!((direct - (r as f64 * inp.total_weight() - sol.objective)).abs() <= 1e-8);
        for &l in &sol.eigenvalues {
            prop_assert!(l >= -1e-10 && l <= inp.total_weight() + 1e-10);
        }
        let (oracle, _) = jacobi_eigen(&oracle_m(&dense_views(&inp), inp.weights.as_ref().unwrap(), inp.eps));
        for (a, b) in sol.eigenvalues.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }
}
