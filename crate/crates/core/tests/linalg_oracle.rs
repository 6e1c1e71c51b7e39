mod common;

use common::oracles::*;
use dgcca_core::linalg::{mean_center_columns, regularized_inverse_psd, sym_eig_topk};
use dgcca_core::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_against_jacobi(m: &Matrix, k: usize) {
    let ours = sym_eig_topk(m, k).unwrap();
    let (values, vectors) = jacobi_eigen(&to_dense(m));
    for (a, b) in ours.eigenvalues.iter().zip(&values) {
        assert!((a - b).abs() <= 1e-8, "eigenvalue {a} vs oracle {b}");
    }
    // compare whole eigenspaces: extend k past any cluster that straddles the cut
    let mut kk = k;
    while kk < values.len() && (values[kk - 1] - values[kk]).abs() < 1e-6 {
        kk += 1;
    }
    let full = sym_eig_topk(m, kk).unwrap();
    let sin = max_principal_angle_sin(&to_dense(&full.eigenvectors), &vectors[..kk].to_vec());
    assert!(sin <= 1e-6, "subspace angle sin = {sin:e}");
}

#[test]
fn random_6x6_top3_matches_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = random_symmetric(&mut rng, 6);
    check_against_jacobi(&m, 3);
}

#[test]
fn hundred_random_matrices_match_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let k = rng.random_range(1..=n);
        let m = random_symmetric(&mut rng, n);
        check_against_jacobi(&m, k);
    }
}

#[test]
fn repeated_eigenvalues_compare_as_subspaces() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let q = random_orthogonal(&mut rng, 5);
    let d = vec![vec![3.0, 0.0, 0.0, 0.0, 0.0], vec![0.0, 3.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0, 0.0], vec![0.0; 5], vec![0.0; 5]];
    let m = from_dense(&mul(&transpose(&q), &mul(&d, &q)));
    let m = m.add(&m.transpose()).scale(0.5);
    let res = sym_eig_topk(&m, 2).unwrap();
    assert!((res.eigenvalues[0] - 3.0).abs() < 1e-12 && (res.eigenvalues[1] - 3.0).abs() < 1e-12);
    let sin = max_principal_angle_sin(&to_dense(&res.eigenvectors), &q[..2].to_vec());
    assert!(sin < 1e-8);
}

#[test]
fn inverse_of_random_gram_multiplies_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y = random_matrix(&mut rng, 5, 5);
    let c = y.matmul_nt(&y);
    let inv = regularized_inverse_psd(&c, 1e-4).unwrap();
    let mut shifted = c.clone();
    shifted.add_diagonal(1e-4);
    let eye = Matrix::identity(5);
    assert!(shifted.matmul(&inv).max_abs_diff(&eye) <= 1e-8);
    assert!(inv.matmul(&shifted).max_abs_diff(&eye) <= 1e-8);
    let oracle = from_dense(&inverse(&to_dense(&shifted)));
    assert!(inv.max_abs_diff(&oracle) <= 1e-8 * oracle.max_abs());
}

#[test]
fn random_centering_has_zero_row_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let y = random_matrix(&mut rng, 4, 10).scale(100.0);
    let c = mean_center_columns(&y);
    for i in 0..4 {
        let mean: f64 = c.row(i).iter().sum::<f64>() / 10.0;
        assert!(mean.abs() < 1e-12);
        let direct: f64 = y.row(i).iter().sum::<f64>() / 10.0;
        for j in 0..10 {
            assert!((c[(i, j)] - (y[(i, j)] - direct)).abs() < 1e-12);
        }
    }
}

fn symmetric_strategy() -> impl Strategy<Value = Matrix> {
    (1usize..=8, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_symmetric(&mut rng, n).scale(10.0)
    })
}

fn psd_strategy() -> impl Strategy<Value = Matrix> {
    (1usize..=7, 1usize..=9, any::<u64>()).prop_map(|(d, n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_matrix(&mut rng, d, n);
        y.matmul_nt(&y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_spectrum_reconstructs_input(m in symmetric_strategy()) {
        let n = m.rows();
        let res = sym_eig_topk(&m, n).unwrap();
        let v = &res.eigenvectors;
        let mut rebuilt = Matrix::zeros(n, n);
        for (i, &lam) in res.eigenvalues.iter().enumerate() {
            let vi = Matrix::from_vec(1, n, v.row(i).to_vec()).unwrap();
            rebuilt.axpy(lam, &vi.matmul_tn(&vi));
        }
        prop_assert!(rebuilt.max_abs_diff(&m) <= 1e-8 * m.max_abs().max(1.0));
        prop_assert!(v.matmul_nt(v).max_abs_diff(&Matrix::identity(n)) <= 1e-10);
        prop_assert!(res.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        for (i, &lam) in res.eigenvalues.iter().enumerate() {
            let vi = Matrix::from_vec(n, 1, v.row(i).to_vec()).unwrap();
            let resid = m.matmul(&vi).sub(&vi.scale(lam)).frobenius_norm();
            prop_assert!(resid <= 1e-8 * lam.abs().max(1.0));
        }
    }

    #[test]
    fn psd_spectrum_is_nonnegative(c in psd_strategy()) {
        let res = sym_eig_topk(&c, c.rows()).unwrap();
        prop_assert!(res.eigenvalues.iter().all(|&l| l >= -1e-10));
    }

    #[test]
    fn inverse_commutes_with_shifted_matrix(c in psd_strategy(), eps_exp in -6i32..=0) {
        let eps = 10f64.powi(eps_exp);
        let inv = regularized_inverse_psd(&c, eps).unwrap();
        let mut shifted = c.clone();
        shifted.add_diagonal(eps);
        let eye = Matrix::identity(c.rows());
        let tol = 1e-8 * (1.0 + c.max_abs() / eps).max(1.0).min(1e4);
        prop_assert!(shifted.matmul(&inv).max_abs_diff(&eye) <= tol);
        prop_assert!(inv.matmul(&shifted).max_abs_diff(&eye) <= tol);
        prop_assert!(inv.asymmetry() == 0.0);
    }

    #[test]
    fn centering_is_idempotent(seed in any::<u64>(), d in 1usize..5, n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_matrix(&mut rng, d, n).scale(1e3);
        let once = mean_center_columns(&y);
        let twice = mean_center_columns(&once);
        prop_assert!(once.max_abs_diff(&twice) <= 1e-12 * 1e3);
    }
}
