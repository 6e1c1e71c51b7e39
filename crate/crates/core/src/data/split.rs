use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MultiviewDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub tune: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train, self.tune, self.test];
        if f.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("split fractions must be positive, got {f:?}")));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("split fractions must sum to 1, got {f:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: MultiviewDataset,
    pub tune: MultiviewDataset,
    pub test: MultiviewDataset,
    /// Original sample indices of each part, ascending.
    pub train_indices: Vec<usize>,
    pub tune_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Disjoint, exhaustive train/tune/test split.
///
/// Sizes are `round(train·N)`, `round(tune·N)` and the remainder. With
/// labels, every class is shuffled on its own and its members are spread
/// evenly over a common ordering, so each part receives each class in
/// proportion (±1 sample). Every part keeps the original sample order.
pub fn split_dataset(ds: &MultiviewDataset, spec: &SplitSpec) -> Result<DatasetSplit> {
    spec.validate()?;
    let n = ds.num_samples();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 samples to split, got {n}")));
    }
    let n_train = (spec.train * n as f64).round() as usize;
    let n_tune = (spec.tune * n as f64).round() as usize;
    if n_train == 0 || n_tune == 0 || n_train + n_tune >= n {
        return Err(Error::InvalidArgument(format!(
            "fractions {:?} leave an empty part for N = {n}",
            (spec.train, spec.tune, spec.test)
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let order: Vec<usize> = match ds.labels() {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
        Some(labels) => {
            let classes = ds.num_classes();
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
            for (i, &l) in labels.iter().enumerate() {
                members[l].push(i);
            }
            // (position key, class, index): member k of a class of size m gets key (k + ½)/m
            let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
            for (c, m) in members.iter_mut().enumerate() {
                m.shuffle(&mut rng);
                let size = m.len() as f64;
                keyed.extend(m.iter().enumerate().map(|(k, &i)| ((k as f64 + 0.5) / size, c, i)));
            }
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            keyed.into_iter().map(|(_, _, i)| i).collect()
        }
    };

    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    let train_indices = sorted(&order[..n_train]);
    let tune_indices = sorted(&order[n_train..n_train + n_tune]);
    let test_indices = sorted(&order[n_train + n_tune..]);
    Ok(DatasetSplit {
        train: ds.select(&train_indices)?,
        tune: ds.select(&tune_indices)?,
        test: ds.select(&test_indices)?,
        train_indices,
        tune_indices,
        test_indices,
    })
}
