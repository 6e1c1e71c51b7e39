//! Brute-force reference implementations used only by tests. Nothing here
//! calls into the library's numerical code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use dgcca_core::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(m: &Matrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn from_dense(d: &Dense) -> Matrix {
    Matrix::from_rows(d).unwrap()
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), k);
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            out[i][j] = (0..k).map(|t| a[i][t] * b[t][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
/// Returns eigenvalues descending and eigenvectors as rows.
pub fn jacobi_eigen(m: &Dense) -> (Vec<f64>, Dense) {
    let n = m.len();
    let mut a = m.clone();
    let mut v: Dense = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let total: f64 = a.iter().flatten().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

/// Sine of the largest principal angle between the row spaces of two
/// matrices with orthonormal rows: the largest singular value of the part
/// of `a` orthogonal to `b`.
pub fn max_principal_angle_sin(a: &Dense, b: &Dense) -> f64 {
    let along = mul(&mul(a, &transpose(b)), b);
    let resid: Dense = a.iter().zip(&along).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect();
    let (values, _) = jacobi_eigen(&mul(&resid, &transpose(&resid)));
    values[0].max(0.0).sqrt()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(m: &Dense) -> Dense {
    let n = m.len();
    let mut a: Dense = m
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().copied().chain((0..n).map(|j| f64::from(u8::from(i == j)))).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-300, "singular matrix in oracle");
        a[col].iter_mut().for_each(|x| *x /= p);
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                let pivot_row = a[col].clone();
                a[i].iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

pub struct GccaOracle {
    pub eigenvalues: Vec<f64>,
    pub g: Dense,
    pub u: Vec<Dense>,
    /// `Σ_j ‖G − U_jᵀY_j‖²` without any ridge term.
    pub fit_error: f64,
}

/// Weighted GCCA built the slow way: explicit `P_j`, dense `M`, full Jacobi
/// spectrum, then direct evaluation of the fit.
pub fn gcca_oracle(views: &[Dense], weights: &[f64], r: usize, eps: f64) -> GccaOracle {
    let n = views[0][0].len();
    let mut m = vec![vec![0.0; n]; n];
    let mut cinv = Vec::new();
    for (y, &w) in views.iter().zip(weights) {
        let mut c = mul(y, &transpose(y));
        for (i, row) in c.iter_mut().enumerate() {
            row[i] += eps;
        }
        let ci = inverse(&c);
        let p = mul(&transpose(y), &mul(&ci, y));
        for i in 0..n {
            for j in 0..n {
                m[i][j] += w * p[i][j];
            }
        }
        cinv.push(ci);
    }
    let (values, vectors) = jacobi_eigen(&m);
    let g: Dense = vectors[..r].to_vec();
    let u: Vec<Dense> = views.iter().zip(&cinv).map(|(y, ci)| mul(ci, &mul(y, &transpose(&g)))).collect();
    let fit_error = views
        .iter()
        .zip(&u)
        .zip(weights)
        .map(|((y, uj), &w)| {
            let proj = mul(&transpose(uj), y);
            w * g.iter().flatten().zip(proj.iter().flatten()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .sum();
    GccaOracle { eigenvalues: values[..r].to_vec(), g, u, fit_error }
}

/// Exhaustive k-NN: full sort of every training point by (squared
/// distance, index), then majority vote with ties to the lowest label.
pub fn brute_knn(train: &Dense, labels: &[usize], query: &Dense, k: usize) -> Vec<usize> {
    let (d, n, m) = (train.len(), train[0].len(), query[0].len());
    (0..m)
        .map(|q| {
            let mut all: Vec<(f64, usize)> = (0..n)
                .map(|i| ((0..d).map(|t| (train[t][i] - query[t][q]).powi(2)).sum(), i))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
            for &(_, i) in &all[..k] {
                *votes.entry(labels[i]).or_default() += 1;
            }
            let top = *votes.values().max().unwrap();
            *votes.iter().find(|(_, &c)| c == top).unwrap().0
        })
        .collect()
}

pub fn central_difference(mut f: impl FnMut(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = random_matrix(rng, n, n);
    a.add(&a.transpose()).scale(0.5)
}

/// Uniformly random rotation (or reflection) of dimension `d` by
/// Gram-Schmidt on a random matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Dense {
    let mut q: Dense = Vec::new();
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for prev in &q {
            let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    q
}

/// Mean-centered random views with the given output widths.
pub fn random_views(rng: &mut ChaCha8Rng, widths: &[usize], n: usize) -> Vec<Matrix> {
    widths.iter().map(|&o| dgcca_core::linalg::mean_center_columns(&random_matrix(rng, o, n))).collect()
}

/// Dense `M = Σ w_j Y_jᵀ (Y_j Y_jᵀ + eps·I)⁻¹ Y_j` from the slow oracle path.
pub fn oracle_m(views: &[Dense], weights: &[f64], eps: f64) -> Dense {
    let n = views[0][0].len();
    let mut m = vec![vec![0.0; n]; n];
    for (y, &w) in views.iter().zip(weights) {
        let mut c = mul(y, &transpose(y));
        for (i, row) in c.iter_mut().enumerate() {
            row[i] += eps;
        }
        let p = mul(&transpose(y), &mul(&inverse(&c), y));
        for i in 0..n {
            for j in 0..n {
                m[i][j] += w * p[i][j];
            }
        }
    }
    m
}
