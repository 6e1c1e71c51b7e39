//! Downstream evaluation of embeddings: k-nearest-neighbor classification,
//! a closed-form ridge linear probe, confusion counts.
//!
//! Points are stored column-wise (`r × N`), like every other matrix here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{regularized_inverse_psd, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `"knn"` or `"probe"`.
    pub metric: String,
    pub accuracy: f64,
    /// `confusion[t][p]` counts samples of true class `t` predicted as `p`.
    pub confusion: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    pub n_eval: usize,
}

impl EvalReport {
    pub fn from_predictions(
        metric: &str,
        truth: &[usize],
        predicted: &[usize],
        num_classes: usize,
        k: Option<usize>,
        ridge: Option<f64>,
    ) -> Result<Self> {
        let confusion = confusion_matrix(truth, predicted, num_classes)?;
        let correct: usize = (0..num_classes).map(|c| confusion[c][c]).sum();
        let report = Self {
            metric: metric.to_string(),
            accuracy: correct as f64 / truth.len() as f64,
            confusion,
            k,
            ridge,
            n_eval: truth.len(),
        };
        debug_assert!(report.is_consistent());
        Ok(report)
    }

    /// Confusion counts sum to `n_eval` and accuracy is their trace over `n_eval`.
    pub fn is_consistent(&self) -> bool {
        let total: usize = self.confusion.iter().flatten().sum();
        let trace: usize = (0..self.confusion.len()).map(|c| self.confusion[c][c]).sum();
        total == self.n_eval && self.accuracy == trace as f64 / self.n_eval as f64
    }
}

/// `counts[t][p] = #{i : truth[i] = t, predicted[i] = p}`.
pub fn confusion_matrix(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(format!("{} labels vs {} predictions", truth.len(), predicted.len())));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    let mut counts = vec![vec![0usize; num_classes]; num_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::InvalidArgument(format!("label {} out of range for {num_classes} classes", t.max(p))));
        }
        counts[t][p] += 1;
    }
    Ok(counts)
}

fn num_classes(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}

/// Euclidean k-NN majority vote.
///
/// Neighbors are ordered by squared distance, ties going to the lower
/// training index; vote ties go to the lowest label.
pub fn knn_classify(train: &Matrix, train_labels: &[usize], query: &Matrix, k: usize) -> Result<Vec<usize>> {
    let n = train.cols();
    if train_labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} training points", train_labels.len())));
    }
    if train.rows() != query.rows() {
        return Err(Error::Shape(format!(
            "training points have dimension {}, queries {}",
            train.rows(),
            query.rows()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={n}")));
    }
    let classes = num_classes(train_labels);
    let train_t = train.transpose();
    let query_t = query.transpose();
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut votes = vec![0usize; classes];
    let mut out = Vec::with_capacity(query.cols());
    for q in 0..query.cols() {
        let qp = query_t.row(q);
        dist.clear();
        dist.extend((0..n).map(|i| {
            let d: f64 = train_t.row(i).iter().zip(qp).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, i)
        }));
        if k < n {
            dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        votes.iter_mut().for_each(|v| *v = 0);
        for &(_, i) in &dist[..k] {
            votes[train_labels[i]] += 1;
        }
        let best = votes.iter().enumerate().fold(0, |best, (c, &v)| if v > votes[best] { c } else { best });
        out.push(best);
    }
    Ok(out)
}

/// One-vs-rest ridge regression onto ±1 targets over standardized features,
/// with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub ridge: f64,
    feature_mean: Vec<f64>,
    feature_scale: Vec<f64>,
    /// `classes × d`
    weights: Matrix,
    intercepts: Vec<f64>,
}

pub fn linear_probe(train: &Matrix, labels: &[usize], ridge: f64) -> Result<LinearProbe> {
    let (d, n) = train.shape();
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} points", labels.len())));
    }
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(Error::InvalidArgument(format!("ridge must be positive, got {ridge}")));
    }
    let classes = num_classes(labels);
    let mut present = vec![false; classes];
    labels.iter().for_each(|&l| present[l] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::InvalidArgument("linear probe needs at least two classes in the training data".into()));
    }

    let feature_mean = train.row_means();
    let feature_scale: Vec<f64> = (0..d)
        .map(|i| {
            let var = train.row(i).iter().map(|v| (v - feature_mean[i]).powi(2)).sum::<f64>() / n as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let x = standardize(train, &feature_mean, &feature_scale);

    // Centered features make the intercept the target mean.
    let targets = Matrix::from_fn(n, classes, |i, c| if labels[i] == c { 1.0 } else { -1.0 });
    let intercepts: Vec<f64> = (0..classes).map(|c| targets.column(c).iter().sum::<f64>() / n as f64).collect();
    let centered = Matrix::from_fn(n, classes, |i, c| targets[(i, c)] - intercepts[c]);
    let gram_inv = regularized_inverse_psd(&x.matmul_nt(&x), ridge)?;
    let weights = gram_inv.matmul(&x.matmul(&centered)).transpose();
    Ok(LinearProbe { ridge, feature_mean, feature_scale, weights, intercepts })
}

fn standardize(points: &Matrix, mean: &[f64], scale: &[f64]) -> Matrix {
    Matrix::from_fn(points.rows(), points.cols(), |i, j| (points[(i, j)] - mean[i]) / scale[i])
}

impl LinearProbe {
    pub fn num_classes(&self) -> usize {
        self.intercepts.len()
    }

    /// Argmax of the per-class scores; ties go to the lower class.
    pub fn predict(&self, points: &Matrix) -> Result<Vec<usize>> {
        if points.rows() != self.feature_mean.len() {
            return Err(Error::Shape(format!(
                "probe expects dimension {}, got {}",
                self.feature_mean.len(),
                points.rows()
            )));
        }
        let scores = self.weights.matmul(&standardize(points, &self.feature_mean, &self.feature_scale));
        Ok((0..points.cols())
            .map(|j| {
                (0..self.num_classes())
                    .map(|c| scores[(c, j)] + self.intercepts[c])
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, s)| if s > best.1 { (c, s) } else { best })
                    .0
            })
            .collect())
    }

    pub fn score(&self, points: &Matrix, labels: &[usize]) -> Result<EvalReport> {
        let predicted = self.predict(points)?;
        let classes = self.num_classes().max(num_classes(labels));
        EvalReport::from_predictions("probe", labels, &predicted, classes, None, Some(self.ridge))
    }
}

/// KNN predictions scored into a report.
pub fn knn_report(
    train: &Matrix,
    train_labels: &[usize],
    query: &Matrix,
    query_labels: &[usize],
    k: usize,
) -> Result<EvalReport> {
    let predicted = knn_classify(train, train_labels, query, k)?;
    let classes = num_classes(train_labels).max(num_classes(query_labels));
    EvalReport::from_predictions("knn", query_labels, &predicted, classes, Some(k), None)
}
