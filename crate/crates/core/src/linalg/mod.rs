//! Dense linear algebra used by the GCCA solver.

mod eigen;
mod matrix;

pub use eigen::{sym_eig_topk, SymEigResult, SYMMETRY_TOL};
pub use matrix::Matrix;

use crate::error::{Error, Result};

/// Negative eigenvalues down to `-PSD_TOL · ‖c‖` are treated as roundoff.
pub const PSD_TOL: f64 = 1e-8;

/// Shifted eigenvalues at or below this fraction of the largest one count as zero.
const SINGULAR_RTOL: f64 = 1e-13;

/// Eigenvalues of `c + eps·I` together with the eigenvectors of `c` (as rows).
fn shifted_spectrum(c: &Matrix, eps: f64) -> Result<(Vec<f64>, Matrix)> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("regularization must be finite and >= 0, got {eps}")));
    }
    let n = c.rows();
    let eig = sym_eig_topk(c, n)?;
    let norm = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let min = eig.eigenvalues[n - 1];
    if min < -PSD_TOL * norm {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let shifted: Vec<f64> = eig.eigenvalues.iter().map(|l| l + eps).collect();
    let floor = SINGULAR_RTOL * shifted[0].abs().max(f64::MIN_POSITIVE);
    if shifted[n - 1] <= floor {
        return Err(Error::Singular { min_eigenvalue: shifted[n - 1] });
    }
    Ok((shifted, eig.eigenvectors))
}

/// `Vᵀ · diag(f(λ)) · V` for eigenvectors stored as rows of `v`.
fn spectral_function(v: &Matrix, values: &[f64], f: impl Fn(f64) -> f64) -> Matrix {
    let n = v.cols();
    let mut scaled = v.clone();
    for (i, &l) in values.iter().enumerate() {
        let s = f(l);
        scaled.row_mut(i).iter_mut().for_each(|x| *x *= s);
    }
    let mut out = v.matmul_tn(&scaled);
    // exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    out
}

/// `(c + eps·I)⁻¹` for a symmetric positive semi-definite `c`, computed
/// through its eigendecomposition.
pub fn regularized_inverse_psd(c: &Matrix, eps: f64) -> Result<Matrix> {
    let (values, vectors) = shifted_spectrum(c, eps)?;
    Ok(spectral_function(&vectors, &values, |l| 1.0 / l))
}

/// `(c + eps·I)^{-1/2}`, the whitening transform for covariance `c`.
pub fn regularized_inverse_sqrt_psd(c: &Matrix, eps: f64) -> Result<Matrix> {
    let (values, vectors) = shifted_spectrum(c, eps)?;
    Ok(spectral_function(&vectors, &values, |l| 1.0 / l.sqrt()))
}

/// Subtract each row's mean, so every feature has zero mean across the
/// columns (samples).
pub fn mean_center_columns(y: &Matrix) -> Matrix {
    y.sub_row_offsets(&y.row_means())
}
