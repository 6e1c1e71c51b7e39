//! Fixtures shared by the benchmarks.

use dgcca_core::linalg::mean_center_columns;
use dgcca_core::{init_network, Activation, Matrix, MlpNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `j` centered views of width `d` over `n` samples, uniform on [-1, 1).
pub fn random_views(j: usize, d: usize, n: usize, seed: u64) -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..j).map(|_| mean_center_columns(&Matrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0)))).collect()
}

/// One sigmoid network per view with the given widths.
pub fn networks(j: usize, widths: &[usize], seed: u64) -> Vec<MlpNetwork> {
    (0..j).map(|v| init_network(widths, Activation::Sigmoid, seed + v as u64).unwrap()).collect()
}
