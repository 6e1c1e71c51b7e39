//! Multiview datasets: container type, on-disk format, splits and the
//! synthetic mixture generator.

mod split;
mod store;
mod synthetic;

pub use split::{split_dataset, DatasetSplit, SplitSpec};
pub use store::{load_dataset, save_dataset, DatasetManifest, DATASET_VERSION};
pub use synthetic::{generate_synthetic_mixture, SyntheticConfig};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// J views of the same N samples. View `j` is `d_j × N`; column `i` is
/// sample `i` in every view.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiviewDataset {
    views: Vec<Matrix>,
    labels: Option<Vec<usize>>,
    view_names: Vec<String>,
    provenance: String,
}

impl MultiviewDataset {
    pub fn new(views: Vec<Matrix>, labels: Option<Vec<usize>>) -> Result<Self> {
        let names = (0..views.len()).map(|j| format!("view{j}")).collect();
        Self::with_names(views, labels, names, String::new())
    }

    pub fn with_names(
        views: Vec<Matrix>,
        labels: Option<Vec<usize>>,
        view_names: Vec<String>,
        provenance: String,
    ) -> Result<Self> {
        let n = views.first().ok_or_else(|| Error::InvalidArgument("dataset has no views".into()))?.cols();
        if let Some((j, v)) = views.iter().enumerate().find(|(_, v)| v.cols() != n) {
            return Err(Error::Shape(format!("view {j} has {} samples, view 0 has {n}", v.cols())));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Shape(format!("{} labels for {n} samples", l.len())));
            }
        }
        if view_names.len() != views.len() {
            return Err(Error::Shape(format!("{} names for {} views", view_names.len(), views.len())));
        }
        Ok(Self { views, labels, view_names, provenance })
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn into_views(self) -> Vec<Matrix> {
        self.views
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn view_names(&self) -> &[String] {
        &self.view_names
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.views[0].cols()
    }

    /// `max(label) + 1`, or 0 without labels.
    pub fn num_classes(&self) -> usize {
        self.labels.as_ref().and_then(|l| l.iter().max()).map_or(0, |m| m + 1)
    }

    /// Samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let n = self.num_samples();
        if indices.is_empty() {
            return Err(Error::InvalidArgument("empty sample selection".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidArgument(format!("sample index {bad} out of range for N = {n}")));
        }
        Ok(Self {
            views: self.views.iter().map(|v| v.select_columns(indices)).collect(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            view_names: self.view_names.clone(),
            provenance: self.provenance.clone(),
        })
    }
}
