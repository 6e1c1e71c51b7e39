//! Linear generalized CCA and the gradient of its optimal objective.
//!
//! Given mean-centered views `Y_j` (`o_j × N`), the solver finds an `r × N`
//! matrix `G` with orthonormal rows and projections `U_j` (`o_j × r`)
//! minimizing `Σ_j w_j (‖G − U_jᵀ Y_j‖_F² + eps·‖U_j‖_F²)`.
//!
//! With `C_j = Y_j Y_jᵀ + eps·I` and `P_j = Y_jᵀ C_j⁻¹ Y_j`, the rows of `G`
//! are the top `r` eigenvectors of `M = Σ_j w_j P_j`, `U_j = C_j⁻¹ Y_j Gᵀ`,
//! and the optimal value equals `r·Σw − L` with `L = Σ_{i≤r} λ_i(M)`.
//!
//! `M` is `N × N` but has rank at most `Σ o_j`. The solver never forms it:
//! stacking the whitened views `Z_j = √w_j · C_j^{-1/2} Y_j` gives
//! `M = ZᵀZ`, so the eigenpairs come from the small `Z Zᵀ` and the cost is
//! linear in `N`.

use crate::error::{Error, Result};
use crate::linalg::{regularized_inverse_psd, regularized_inverse_sqrt_psd, sym_eig_topk, Matrix};

/// Smallest `λ_r − λ_(r+1)` for which the objective is treated as differentiable.
pub const EIGENGAP_TOL: f64 = 1e-6;

/// Below this fraction of `λ_1`, the small-space route loses accuracy on the
/// corresponding rows of `G` and the dense `N × N` problem is solved instead.
const SMALL_SPACE_RTOL: f64 = 1e-6;

/// Views plus solver settings.
#[derive(Debug, Clone)]
pub struct GccaInput {
    pub views: Vec<Matrix>,
    /// Per-view weights; `None` means all ones.
    pub weights: Option<Vec<f64>>,
    /// Ridge added to every `Y_j Y_jᵀ`.
    pub eps: f64,
    /// Shared dimensionality.
    pub r: usize,
}

impl GccaInput {
    pub fn new(views: Vec<Matrix>, r: usize, eps: f64) -> Result<Self> {
        let input = Self { views, weights: None, eps, r };
        input.validate()?;
        Ok(input)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.weights = Some(weights);
        self.validate()?;
        Ok(self)
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.views.first().map_or(0, Matrix::cols)
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[j])
    }

    pub fn total_weight(&self) -> f64 {
        (0..self.num_views()).map(|j| self.weight(j)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.views.len();
        if j < 2 {
            return Err(Error::InvalidArgument(format!("GCCA needs at least 2 views, got {j}")));
        }
        let n = self.num_samples();
        if let Some((idx, v)) = self.views.iter().enumerate().find(|(_, v)| v.cols() != n) {
            return Err(Error::Shape(format!("view {idx} has {} samples, view 0 has {n}", v.cols())));
        }
        let min_dim = self.views.iter().map(Matrix::rows).min().unwrap_or(0);
        if self.r == 0 || self.r > n.min(min_dim) {
            return Err(Error::InvalidArgument(format!(
                "r = {} must lie in 1..={} (N = {n}, smallest view dimension {min_dim})",
                self.r,
                n.min(min_dim)
            )));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidArgument(format!("eps must be finite and >= 0, got {}", self.eps)));
        }
        if let Some(w) = &self.weights {
            if w.len() != j {
                return Err(Error::Shape(format!("{} weights for {j} views", w.len())));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidArgument("view weights must be finite and >= 0".into()));
            }
            if !w.iter().any(|x| *x > 0.0) {
                return Err(Error::InvalidArgument("at least one view weight must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GccaSolution {
    /// `r × N`, orthonormal rows.
    pub g: Matrix,
    /// One `o_j × r` projection per view.
    pub u: Vec<Matrix>,
    /// Top `r` eigenvalues of `M`, descending.
    pub eigenvalues: Vec<f64>,
    /// `L = Σ λ_i`.
    pub objective: f64,
    /// `r·Σw − L`, the optimal value of the (ridge-penalized) reconstruction objective.
    pub reconstruction_error: f64,
    /// `λ_r − λ_(r+1)`; infinite when `M` has no `(r+1)`-th eigenvalue.
    pub eigengap: f64,
}

impl GccaSolution {
    /// True when the top-`r` eigenspace is not well separated and `G` is an
    /// arbitrary basis of a larger eigenspace.
    pub fn is_degenerate(&self) -> bool {
        self.eigengap < EIGENGAP_TOL
    }
}

/// Per-view `∂L/∂Y_j`.
#[derive(Debug, Clone)]
pub struct GccaGradients {
    pub per_view: Vec<Matrix>,
}

/// Solve the (weighted, ridge-regularized) GCCA problem.
///
/// Views are expected to be mean-centered already.
pub fn solve_gcca(input: &GccaInput) -> Result<GccaSolution> {
    input.validate()?;
    let n = input.num_samples();
    let r = input.r;

    let mut cov_inv = Vec::with_capacity(input.num_views());
    let mut whitened = Vec::with_capacity(input.num_views());
    for (j, y) in input.views.iter().enumerate() {
        let c = y.matmul_nt(y);
        cov_inv.push(regularized_inverse_psd(&c, input.eps)?);
        let w = input.weight(j);
        if w > 0.0 {
            let s = regularized_inverse_sqrt_psd(&c, input.eps)?;
            whitened.push(s.matmul(y).scale(w.sqrt()));
        }
    }
    let z = Matrix::vcat(&whitened.iter().collect::<Vec<_>>())?;
    let stacked = z.rows();
    let gram = z.matmul_nt(&z);
    let eig = sym_eig_topk(&gram, stacked)?;

    if r > stacked {
        return Err(Error::InvalidArgument(format!(
            "r = {r} exceeds the {stacked} eigenpairs available from weighted views"
        )));
    }
    let values = &eig.eigenvalues;
    let top = values[0].max(0.0);
    let eigengap = if r < stacked {
        values[r - 1] - values[r].max(0.0)
    } else if n > r {
        values[r - 1]
    } else {
        f64::INFINITY
    };

    let (g, eigenvalues) = if values[r - 1] > SMALL_SPACE_RTOL * top.max(1.0) {
        // Lift eigenvectors of Z Zᵀ to eigenvectors of ZᵀZ.
        let mut g = eig.eigenvectors.matmul(&z);
        let mut g_trunc = Matrix::zeros(r, n);
        for i in 0..r {
            let norm = values[i].sqrt();
            let src = g.row_mut(i);
            src.iter_mut().for_each(|v| *v /= norm);
            g_trunc.row_mut(i).copy_from_slice(src);
        }
        (g_trunc, values[..r].to_vec())
    } else {
        let m = z.matmul_tn(&z);
        let dense = sym_eig_topk(&m, r)?;
        (dense.eigenvectors, dense.eigenvalues)
    };

    let u: Vec<Matrix> = input
        .views
        .iter()
        .zip(&cov_inv)
        .map(|(y, ci)| ci.matmul(&y.matmul_nt(&g)))
        .collect();
    let objective: f64 = eigenvalues.iter().sum();
    let reconstruction_error = r as f64 * input.total_weight() - objective;
    Ok(GccaSolution { g, u, eigenvalues, objective, reconstruction_error, eigengap })
}

fn check_solution_shapes(input: &GccaInput, sol: &GccaSolution) -> Result<()> {
    if sol.u.len() != input.num_views() {
        return Err(Error::Shape(format!("{} projections for {} views", sol.u.len(), input.num_views())));
    }
    if sol.g.shape() != (input.r, input.num_samples()) {
        return Err(Error::Shape(format!(
            "G is {:?}, expected {:?}",
            sol.g.shape(),
            (input.r, input.num_samples())
        )));
    }
    for (j, (u, y)) in sol.u.iter().zip(&input.views).enumerate() {
        if u.shape() != (y.rows(), input.r) {
            return Err(Error::Shape(format!("U_{j} is {:?}, expected {:?}", u.shape(), (y.rows(), input.r))));
        }
    }
    Ok(())
}

/// `∂L/∂Y_j = w_j (2 U_j G − 2 U_j U_jᵀ Y_j)` for every view.
pub fn gcca_gradient(input: &GccaInput, sol: &GccaSolution) -> Result<GccaGradients> {
    check_solution_shapes(input, sol)?;
    let per_view = input
        .views
        .iter()
        .zip(&sol.u)
        .enumerate()
        .map(|(j, (y, u))| {
            let residual = sol.g.sub(&u.matmul_tn(y));
            u.matmul(&residual).scale(2.0 * input.weight(j))
        })
        .collect::<Vec<_>>();
    if let Some(j) = per_view.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient of view {j}")));
    }
    Ok(GccaGradients { per_view })
}

/// Central difference of `L` along one entry of one view, re-solving GCCA at
/// both perturbed points.
pub fn finite_difference_objective(
    input: &GccaInput,
    view: usize,
    row: usize,
    col: usize,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let target = input
        .views
        .get(view)
        .ok_or_else(|| Error::InvalidArgument(format!("view index {view} out of range")))?;
    if row >= target.rows() || col >= target.cols() {
        return Err(Error::InvalidArgument(format!(
            "entry ({row}, {col}) outside a {:?} view",
            target.shape()
        )));
    }
    let base = solve_gcca(input)?;
    if base.is_degenerate() {
        return Err(Error::DegenerateEigengap { gap: base.eigengap });
    }
    let objective_at = |delta: f64| -> Result<f64> {
        let mut shifted = input.clone();
        shifted.views[view][(row, col)] += delta;
        Ok(solve_gcca(&shifted)?.objective)
    };
    Ok((objective_at(h)? - objective_at(-h)?) / (2.0 * h))
}

/// `Σ_j w_j (‖G − U_jᵀ Y_j‖_F² + eps·‖U_j‖_F²)` evaluated term by term.
///
/// The ridge term makes this the exact objective the solver minimizes; it
/// vanishes when `eps = 0`.
pub fn reconstruction_error_direct(sol: &GccaSolution, input: &GccaInput) -> Result<f64> {
    check_solution_shapes(input, sol)?;
    Ok(input
        .views
        .iter()
        .zip(&sol.u)
        .enumerate()
        .map(|(j, (y, u))| {
            let fit = sol.g.sub(&u.matmul_tn(y)).frobenius_norm_sq();
            input.weight(j) * (fit + input.eps * u.frobenius_norm_sq())
        })
        .sum())
}

/// Dense `P_j = Y_jᵀ (Y_j Y_jᵀ + eps·I)⁻¹ Y_j`, `N × N`. Diagnostic use only.
pub fn projection_matrix(y: &Matrix, eps: f64) -> Result<Matrix> {
    let ci = regularized_inverse_psd(&y.matmul_nt(y), eps)?;
    Ok(y.matmul_tn(&ci.matmul(y)))
}

/// Dense `M = Σ_j w_j P_j`, `N × N`. Diagnostic use only.
pub fn gcca_matrix(input: &GccaInput) -> Result<Matrix> {
    input.validate()?;
    let n = input.num_samples();
    let mut m = Matrix::zeros(n, n);
    for (j, y) in input.views.iter().enumerate() {
        m.axpy(input.weight(j), &projection_matrix(y, input.eps)?);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mean_center_columns;

    fn full_rank_view() -> Matrix {
        Matrix::from_rows(&[
            vec![1.0, -2.0, 0.5, 3.0, -1.0, 0.7],
            vec![0.3, 1.1, -1.4, 0.2, 2.0, -0.9],
            vec![-0.6, 0.4, 2.2, -1.3, 0.1, 1.5],
        ])
        .unwrap()
    }

    #[test]
    fn identical_views_are_reconstructed_exactly() {
        let y = mean_center_columns(&full_rank_view());
        let input = GccaInput::new(vec![y.clone(), y.clone(), y], 2, 0.0).unwrap();
        let sol = solve_gcca(&input).unwrap();
        assert!(sol.reconstruction_error.abs() < 1e-8);
        assert!((sol.objective - 6.0).abs() < 1e-8);
        let grads = gcca_gradient(&input, &sol).unwrap();
        for g in &grads.per_view {
            assert!(g.max_abs() < 1e-8);
        }
        assert!(sol.g.matmul_nt(&sol.g).max_abs_diff(&Matrix::identity(2)) < 1e-10);
    }

    #[test]
    fn input_validation() {
        let y = full_rank_view();
        assert!(GccaInput::new(vec![y.clone()], 1, 0.0).is_err());
        assert!(GccaInput::new(vec![y.clone(), y.clone()], 0, 0.0).is_err());
        assert!(GccaInput::new(vec![y.clone(), y.clone()], 4, 0.0).is_err());
        assert!(GccaInput::new(vec![y.clone(), y.clone()], 1, -1.0).is_err());
        let short = y.select_columns(&[0, 1, 2]);
        assert!(matches!(GccaInput::new(vec![y.clone(), short], 1, 0.0), Err(Error::Shape(_))));
        let base = GccaInput::new(vec![y.clone(), y.clone()], 1, 0.0).unwrap();
        assert!(base.clone().with_weights(vec![0.0, 0.0]).is_err());
        assert!(base.clone().with_weights(vec![1.0]).is_err());
        assert!(base.clone().with_weights(vec![1.0, -1.0]).is_err());
        assert!(base.with_weights(vec![0.0, 2.0]).is_ok());
    }

    #[test]
    fn rank_deficient_covariance_without_ridge_fails() {
        let y = full_rank_view();
        let dup = Matrix::vcat(&[&y, &y.select_columns(&[0, 1, 2, 3, 4, 5])]).unwrap();
        let input = GccaInput::new(vec![dup.clone(), dup.clone()], 1, 0.0).unwrap();
        assert!(matches!(solve_gcca(&input), Err(Error::Singular { .. })));
        let ridged = GccaInput::new(vec![dup.clone(), dup], 1, 1e-6).unwrap();
        assert!(solve_gcca(&ridged).is_ok());
    }

    #[test]
    fn gradient_rejects_mismatched_solution() {
        let y = mean_center_columns(&full_rank_view());
        let a = GccaInput::new(vec![y.clone(), y.clone()], 2, 0.0).unwrap();
        let b = GccaInput::new(vec![y.clone(), y], 1, 0.0).unwrap();
        let sol = solve_gcca(&b).unwrap();
        assert!(matches!(gcca_gradient(&a, &sol), Err(Error::Shape(_))));
        assert!(matches!(reconstruction_error_direct(&sol, &a), Err(Error::Shape(_))));
    }

    #[test]
    fn finite_difference_argument_checks() {
        let y = mean_center_columns(&full_rank_view());
        let input = GccaInput::new(vec![y.clone(), y], 1, 0.0).unwrap();
        assert!(finite_difference_objective(&input, 2, 0, 0, 1e-5).is_err());
        assert!(finite_difference_objective(&input, 0, 3, 0, 1e-5).is_err());
        assert!(finite_difference_objective(&input, 0, 0, 0, 0.0).is_err());
        // identical views: λ_1 = λ_2 = λ_3 = 2, so the guard trips
        assert!(matches!(
            finite_difference_objective(&input, 0, 0, 0, 1e-5),
            Err(Error::DegenerateEigengap { .. })
        ));
    }
}
