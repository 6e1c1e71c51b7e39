//! Three-view, two-component mixture whose components are not linearly
//! separable in any single view.
//!
//! Every view places the two components on different noise-free curves:
//!
//! * view 0, concentric circles: component 0 on radius 1, component 1 on radius 2;
//! * view 1, interleaved half-moons: component 0 on the classic moon pair
//!   (upper arc and its point reflection), component 1 on its mirror image;
//! * view 2, spiral: component 0 on a two-arm spiral, component 1 on the
//!   same spiral rotated by 90°, giving four interleaved arms.
//!
//! Each component's curve set is symmetric under `p ↦ −p`, so every linear
//! projection has the same (symmetric) distribution mean for both
//! components. Positions along the curves are drawn independently per view,
//! which leaves component identity as the only signal shared across views.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::MultiviewDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MIN_PER_COMPONENT: usize = 50;
const SPIRAL_TURNS: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n_per_component: usize,
    /// Only 2 is supported.
    pub n_components: usize,
    /// Standard deviation of isotropic Gaussian noise added to every point.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { n_per_component: 200, n_components: 2, noise: 0.08, seed: 0 }
    }
}

/// Noise-free point of component `c` in view 0; `u` uniform on [0, 1).
pub fn circle_point(c: usize, u: f64) -> [f64; 2] {
    let radius = if c == 0 { 1.0 } else { 2.0 };
    let theta = 2.0 * PI * u;
    [radius * theta.cos(), radius * theta.sin()]
}

/// View 1; `flip` selects the arc or its point reflection.
pub fn moon_point(c: usize, u: f64, flip: bool) -> [f64; 2] {
    let t = PI * u;
    let s = if flip { -1.0 } else { 1.0 };
    let mirror = if c == 0 { 1.0 } else { -1.0 };
    [mirror * s * (t.cos() - 0.5), s * (t.sin() - 0.25)]
}

/// View 2; `flip` selects which of the component's two arms.
pub fn spiral_point(c: usize, u: f64, flip: bool) -> [f64; 2] {
    let angle = 2.0 * PI * SPIRAL_TURNS * u + if flip { PI } else { 0.0 } + c as f64 * PI / 2.0;
    let rho = 0.3 + 1.5 * u;
    [rho * angle.cos(), rho * angle.sin()]
}

/// Generate `2 · n_per_component` samples with exactly balanced labels, in
/// a seeded random order.
pub fn generate_synthetic_mixture(cfg: &SyntheticConfig) -> Result<MultiviewDataset> {
    if cfg.n_components != 2 {
        return Err(Error::InvalidArgument(format!("only 2 mixture components are supported, got {}", cfg.n_components)));
    }
    if cfg.n_per_component < MIN_PER_COMPONENT {
        return Err(Error::InvalidArgument(format!(
            "n_per_component must be >= {MIN_PER_COMPONENT}, got {}",
            cfg.n_per_component
        )));
    }
    if !(cfg.noise >= 0.0) || !cfg.noise.is_finite() {
        return Err(Error::InvalidArgument(format!("noise must be finite and >= 0, got {}", cfg.noise)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = 2 * cfg.n_per_component;
    let mut labels: Vec<usize> = (0..n).map(|i| i / cfg.n_per_component).collect();
    labels.shuffle(&mut rng);

    let mut views = [Matrix::zeros(2, n), Matrix::zeros(2, n), Matrix::zeros(2, n)];
    for (i, &c) in labels.iter().enumerate() {
        let points = [
            circle_point(c, rng.random()),
            moon_point(c, rng.random(), rng.random()),
            spiral_point(c, rng.random(), rng.random()),
        ];
        for (view, p) in views.iter_mut().zip(points) {
            for (d, coord) in p.into_iter().enumerate() {
                let eps: f64 = rng.sample(StandardNormal);
                view[(d, i)] = coord + cfg.noise * eps;
            }
        }
    }
    MultiviewDataset::with_names(
        views.into(),
        Some(labels),
        vec!["circles".into(), "moons".into(), "spiral".into()],
        format!(
            "synthetic mixture: n_per_component={}, noise={}, seed={}",
            cfg.n_per_component, cfg.noise, cfg.seed
        ),
    )
}
