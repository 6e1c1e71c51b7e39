//! Deep GCCA training.
//!
//! Every epoch shuffles the training samples and walks them in minibatches.
//! Per batch: forward every view, mean-center the outputs, solve GCCA on
//! them, form `∂F/∂O_j = w_j (U_j U_jᵀ O_j − U_j G)` (the descent direction
//! on reconstruction error, i.e. `−½ ∂L/∂O_j`), backpropagate and update.
//! After the last epoch one full pass over the training data fixes the
//! final `G`, `U_j` and the per-view output means used to center new data.

use std::io::{Read, Write};
use std::time::Instant;

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::gcca::{solve_gcca, GccaInput, GccaSolution};
use crate::io::{read_magic, read_matrix, read_string, read_u32, read_u64, write_matrix, write_string};
use crate::linalg::{mean_center_columns, Matrix};
use crate::network::{init_network, Activation, MlpNetwork, Regularization};
use crate::optimizer::{OptimizerConfig, OptimizerState};

pub const MODEL_MAGIC: &[u8; 4] = b"MVDG";
pub const MODEL_VERSION: u32 = 1;

/// Smallest trailing batch kept at the end of an epoch is `max(r + 1, MIN_TAIL_BATCH)`.
pub const MIN_TAIL_BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewConfig {
    /// `[d_j, c_1, …, o_j]`
    pub widths: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub views: Vec<ViewConfig>,
    pub r: usize,
    pub eps: f64,
    pub view_weights: Option<Vec<f64>>,
    pub optimizer: OptimizerConfig,
    pub l1: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Fraction of samples held out for tuning error, in [0, 0.5].
    pub tune_fraction: f64,
    pub shuffle: bool,
    /// When > 0, every k-th epoch reports the exact full-pass training
    /// error instead of the mean of batch errors.
    pub full_pass_every: usize,
}

impl TrainConfig {
    pub fn regularization(&self) -> Regularization {
        Regularization { l1: self.l1, l2: self.l2 }
    }

    /// Check internal consistency and, when given, agreement with the
    /// input dimensions of the data.
    pub fn validate(&self, input_dims: Option<&[usize]>) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.views.len() < 2 {
            return bad(format!("need at least 2 views, config has {}", self.views.len()));
        }
        if self.r == 0 {
            return bad("r must be >= 1".into());
        }
        for (j, v) in self.views.iter().enumerate() {
            if v.widths.len() < 2 || v.widths.contains(&0) {
                return bad(format!("view {j}: widths {:?} need an input and output width, all >= 1", v.widths));
            }
            let out = *v.widths.last().unwrap();
            if out < self.r {
                return bad(format!("view {j}: output width {out} is smaller than r = {}", self.r));
            }
        }
        if let Some(dims) = input_dims {
            if dims.len() != self.views.len() {
                return bad(format!("config has {} views, data has {}", self.views.len(), dims.len()));
            }
            for (j, (v, &d)) in self.views.iter().zip(dims).enumerate() {
                if v.widths[0] != d {
                    return bad(format!("view {j}: network input width {} but data has {d} features", v.widths[0]));
                }
            }
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return bad(format!("eps must be finite and >= 0, got {}", self.eps));
        }
        if let Some(w) = &self.view_weights {
            if w.len() != self.views.len() || w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || !w.iter().any(|x| *x > 0.0) {
                return bad(format!("view_weights {w:?} must be one non-negative weight per view, not all zero"));
            }
        }
        if !(self.l1 >= 0.0 && self.l2 >= 0.0) || !self.l1.is_finite() || !self.l2.is_finite() {
            return bad("l1 and l2 must be finite and >= 0".into());
        }
        if self.batch_size < self.r || self.batch_size < 2 {
            return bad(format!("batch_size {} must be >= max(r, 2)", self.batch_size));
        }
        if !(0.0..=0.5).contains(&self.tune_fraction) {
            return bad(format!("tune_fraction {} must lie in [0, 0.5]", self.tune_fraction));
        }
        self.optimizer.validate()
    }

    fn gcca_input(&self, views: Vec<Matrix>) -> Result<GccaInput> {
        let input = GccaInput::new(views, self.r, self.eps)?;
        match &self.view_weights {
            Some(w) => input.with_weights(w.clone()),
            None => Ok(input),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_error: f64,
    pub tune_error: Option<f64>,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training setup: {0}")]
    Setup(#[source] Error),

    #[error("epoch {epoch}, batch {batch}: {source}")]
    Batch {
        epoch: usize,
        batch: usize,
        #[source]
        source: Error,
    },

    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String, history: Vec<EpochRecord> },

    #[error("final full-data pass failed: {0}")]
    Final(#[source] Error),
}

/// Trained networks plus the GCCA head from the final full-data pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DgccaModel {
    pub config: TrainConfig,
    pub networks: Vec<MlpNetwork>,
    /// `o_j × r`
    pub u: Vec<Matrix>,
    /// `r × N_train`, columns ordered like `train_indices`.
    pub g: Matrix,
    /// Per-view output means over the training data.
    pub means: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub reconstruction_error: f64,
    pub history: Vec<EpochRecord>,
    pub train_indices: Vec<usize>,
    pub tune_indices: Vec<usize>,
}

/// Per-epoch callback: the record and the wall time spent on that epoch.
pub type EpochObserver<'a> = dyn FnMut(&EpochRecord, f64) + 'a;

fn check_views(views: &[Matrix]) -> Result<usize> {
    let n = views.first().ok_or_else(|| Error::InvalidArgument("no views".into()))?.cols();
    if views.iter().any(|v| v.cols() != n) {
        return Err(Error::Shape("views are not column-aligned".into()));
    }
    Ok(n)
}

/// Seeds for the networks, the tuning split and batch shuffling, all
/// derived from the config seed.
struct SeedPlan {
    networks: Vec<u64>,
    split: u64,
    shuffle: u64,
}

impl SeedPlan {
    fn new(seed: u64, views: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { networks: (0..views).map(|_| rng.random()).collect(), split: rng.random(), shuffle: rng.random() }
    }
}

/// Train DGCCA from freshly initialized networks.
pub fn train_dgcca(views: &[Matrix], config: &TrainConfig) -> Result<DgccaModel, TrainError> {
    train_dgcca_observed(views, config, &mut |_, _| {})
}

pub fn train_dgcca_observed(
    views: &[Matrix],
    config: &TrainConfig,
    observer: &mut EpochObserver<'_>,
) -> Result<DgccaModel, TrainError> {
    config.validate(None).map_err(TrainError::Setup)?;
    let seeds = SeedPlan::new(config.seed, config.views.len());
    let networks = config
        .views
        .iter()
        .zip(&seeds.networks)
        .map(|(v, &s)| init_network(&v.widths, v.activation, s))
        .collect::<Result<Vec<_>>>()
        .map_err(TrainError::Setup)?;
    train_dgcca_from(networks, views, config, observer)
}

/// Train starting from the given networks (their shapes must match the
/// config).
pub fn train_dgcca_from(
    mut networks: Vec<MlpNetwork>,
    views: &[Matrix],
    config: &TrainConfig,
    observer: &mut EpochObserver<'_>,
) -> Result<DgccaModel, TrainError> {
    let setup = TrainError::Setup;
    let n = check_views(views).map_err(setup)?;
    let dims: Vec<usize> = views.iter().map(Matrix::rows).collect();
    config.validate(Some(&dims)).map_err(setup)?;
    if networks.len() != views.len() || networks.iter().zip(&config.views).any(|(net, v)| net.widths() != v.widths) {
        return Err(setup(Error::Shape("initial networks do not match the configured widths".into())));
    }

    let seeds = SeedPlan::new(config.seed, config.views.len());
    let (train_indices, tune_indices) = holdout(n, config.tune_fraction, seeds.split);
    let min_tail = (config.r + 1).max(MIN_TAIL_BATCH);
    if train_indices.len() < config.r + 1 {
        return Err(setup(Error::InvalidArgument(format!(
            "{} training samples cannot support r = {}",
            train_indices.len(),
            config.r
        ))));
    }
    if !tune_indices.is_empty() && tune_indices.len() < config.r {
        return Err(setup(Error::InvalidArgument(format!(
            "tuning set of {} samples is smaller than r = {}",
            tune_indices.len(),
            config.r
        ))));
    }
    let train_views: Vec<Matrix> = views.iter().map(|v| v.select_columns(&train_indices)).collect();
    let tune_views: Vec<Matrix> = if tune_indices.is_empty() {
        Vec::new()
    } else {
        views.iter().map(|v| v.select_columns(&tune_indices)).collect()
    };

    let mut optimizer = OptimizerState::new(config.optimizer).map_err(setup)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seeds.shuffle);
    let reg = config.regularization();
    let n_train = train_indices.len();
    let mut history = Vec::with_capacity(config.epochs);
    let diverged = |epoch: usize, reason: String, history: &[EpochRecord]| TrainError::Diverged {
        epoch,
        reason,
        history: history.to_vec(),
    };

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..n_train).collect();
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut batches: Vec<&[usize]> = order.chunks(config.batch_size).collect();
        if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < min_tail) {
            batches.pop();
        }

        let mut batch_errors = Vec::with_capacity(batches.len());
        for (b, batch) in batches.iter().enumerate() {
            let batch_views: Vec<Matrix> = train_views.iter().map(|v| v.select_columns(batch)).collect();
            let step = batch_step(&networks, &batch_views, config, reg).map_err(|source| match source {
                Error::NonFinite(reason) => diverged(epoch, reason, &history),
                source => TrainError::Batch { epoch, batch: b, source },
            })?;
            if step.degenerate {
                warn!("epoch {epoch}, batch {b}: near-degenerate eigengap {:.3e}", step.eigengap);
            }
            if !step.error.is_finite() {
                return Err(diverged(epoch, format!("non-finite batch error {}", step.error), &history));
            }
            batch_errors.push(step.error);

            let grads: Vec<&[f64]> = step.grads.iter().flat_map(|g| g.slices()).collect();
            let mut params: Vec<&mut [f64]> = networks.iter_mut().flat_map(|net| net.params_mut()).collect();
            optimizer
                .apply_update(&mut params, &grads)
                .map_err(|e| diverged(epoch, e.to_string(), &history))?;
        }
        if networks.iter().any(|n| !n.is_finite()) {
            return Err(diverged(epoch, "non-finite network parameters".into(), &history));
        }

        let exact = config.full_pass_every > 0 && epoch % config.full_pass_every == 0;
        let need_means = exact || !tune_views.is_empty();
        let full = if need_means {
            Some(full_pass(&networks, &train_views, config).map_err(|source| TrainError::Batch {
                epoch,
                batch: batches.len(),
                source,
            })?)
        } else {
            None
        };
        let train_error = match (&full, exact) {
            (Some(f), true) => f.solution.reconstruction_error,
            _ => batch_errors.iter().sum::<f64>() / batch_errors.len() as f64,
        };
        let tune_error = match &full {
            Some(f) if !tune_views.is_empty() => Some(
                heldout_error(&networks, &f.means, &tune_views, config)
                    .map_err(|source| TrainError::Batch { epoch, batch: batches.len(), source })?,
            ),
            _ => None,
        };
        let record = EpochRecord { epoch, train_error, tune_error };
        if !train_error.is_finite() || tune_error.is_some_and(|t| !t.is_finite()) {
            history.push(record);
            return Err(diverged(epoch, "non-finite reconstruction error".into(), &history));
        }
        debug!("epoch {epoch}: train {train_error:.6} tune {tune_error:?}");
        observer(&record, started.elapsed().as_secs_f64());
        history.push(record);
    }

    let final_pass = full_pass(&networks, &train_views, config).map_err(TrainError::Final)?;
    let FullPass { solution, means } = final_pass;
    Ok(DgccaModel {
        config: config.clone(),
        networks,
        u: solution.u,
        g: solution.g,
        means,
        eigenvalues: solution.eigenvalues,
        reconstruction_error: solution.reconstruction_error,
        history,
        train_indices,
        tune_indices,
    })
}

/// Seeded holdout of `round(fraction · n)` samples; both parts ascending.
fn holdout(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_tune = (fraction * n as f64).round() as usize;
    if n_tune == 0 {
        return ((0..n).collect(), Vec::new());
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut tune = idx[..n_tune].to_vec();
    let mut train = idx[n_tune..].to_vec();
    tune.sort_unstable();
    train.sort_unstable();
    (train, tune)
}

struct BatchStep {
    error: f64,
    eigengap: f64,
    degenerate: bool,
    grads: Vec<crate::network::ParamGradients>,
}

fn batch_step(networks: &[MlpNetwork], views: &[Matrix], config: &TrainConfig, reg: Regularization) -> Result<BatchStep> {
    let traces = networks.iter().zip(views).map(|(net, x)| net.forward(x)).collect::<Result<Vec<_>>>()?;
    let centered: Vec<Matrix> = traces.iter().map(|t| mean_center_columns(t.output())).collect();
    let input = config.gcca_input(centered)?;
    let sol = solve_gcca(&input)?;
    let grads = networks
        .iter()
        .zip(&traces)
        .enumerate()
        .map(|(j, (net, trace))| {
            let out_grad = descent_direction(&input, &sol, j);
            net.backward(trace, &out_grad, reg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchStep { error: sol.reconstruction_error, eigengap: sol.eigengap, degenerate: sol.is_degenerate(), grads })
}

/// `w_j (U_j U_jᵀ O_j − U_j G)`, pulled back through the mean-centering
/// (row means removed).
fn descent_direction(input: &GccaInput, sol: &GccaSolution, j: usize) -> Matrix {
    let u = &sol.u[j];
    let y = &input.views[j];
    let d = u.matmul(&u.matmul_tn(y).sub(&sol.g)).scale(input.weight(j));
    mean_center_columns(&d)
}

struct FullPass {
    solution: GccaSolution,
    means: Vec<Vec<f64>>,
}

fn full_pass(networks: &[MlpNetwork], views: &[Matrix], config: &TrainConfig) -> Result<FullPass> {
    let outputs = networks.iter().zip(views).map(|(net, x)| net.predict(x)).collect::<Result<Vec<_>>>()?;
    let means: Vec<Vec<f64>> = outputs.iter().map(Matrix::row_means).collect();
    let centered = outputs.iter().map(mean_center_columns).collect();
    let solution = solve_gcca(&config.gcca_input(centered)?)?;
    Ok(FullPass { solution, means })
}

fn centered_outputs(networks: &[MlpNetwork], means: &[Vec<f64>], views: &[Matrix]) -> Result<Vec<Matrix>> {
    if views.len() != networks.len() {
        return Err(Error::Shape(format!("model has {} views, got {}", networks.len(), views.len())));
    }
    check_views(views)?;
    networks
        .iter()
        .zip(means)
        .zip(views)
        .map(|((net, mean), x)| Ok(net.predict(x)?.sub_row_offsets(mean)))
        .collect()
}

fn heldout_error(networks: &[MlpNetwork], means: &[Vec<f64>], views: &[Matrix], config: &TrainConfig) -> Result<f64> {
    let n = check_views(views)?;
    if n < config.r {
        return Err(Error::InvalidArgument(format!("tuning set of {n} samples is smaller than r = {}", config.r)));
    }
    let outputs = centered_outputs(networks, means, views)?;
    Ok(solve_gcca(&config.gcca_input(outputs)?)?.reconstruction_error)
}

impl DgccaModel {
    pub fn num_views(&self) -> usize {
        self.networks.len()
    }

    /// Network outputs centered with the stored training means.
    pub fn centered_outputs(&self, views: &[Matrix]) -> Result<Vec<Matrix>> {
        centered_outputs(&self.networks, &self.means, views)
    }

    /// Per-view embeddings `U_jᵀ (f_j(X_j) − mean_j)`, each `r × N`.
    pub fn transform(&self, views: &[Matrix]) -> Result<Vec<Matrix>> {
        Ok(self.centered_outputs(views)?.iter().zip(&self.u).map(|(y, u)| u.matmul_tn(y)).collect())
    }

    /// Reconstruction error of GCCA re-solved on the frozen networks'
    /// outputs for held-out data (centered with the training means).
    pub fn tuning_reconstruction_error(&self, views: &[Matrix]) -> Result<f64> {
        heldout_error(&self.networks, &self.means, views, &self.config)
    }

    /// Serialize as an MVDG container:
    ///
    /// ```text
    /// b"MVDG" | u32 version | u64 J
    /// u64+bytes  config JSON
    /// u64+bytes  metadata JSON (eigenvalues, error, history, indices)
    /// J × [MVNN network | MVMX U_j (o_j × r) | MVMX mean_j (o_j × 1)]
    /// MVMX G (r × N_train)
    /// ```
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        w.write_all(&(self.networks.len() as u64).to_le_bytes())?;
        write_string(w, &serde_json::to_string(&self.config)?)?;
        let meta = ModelMeta {
            eigenvalues: self.eigenvalues.clone(),
            reconstruction_error: self.reconstruction_error,
            history: self.history.clone(),
            train_indices: self.train_indices.clone(),
            tune_indices: self.tune_indices.clone(),
        };
        write_string(w, &serde_json::to_string(&meta)?)?;
        for ((net, u), mean) in self.networks.iter().zip(&self.u).zip(&self.means) {
            net.write_to(w)?;
            write_matrix(w, u)?;
            write_matrix(w, &Matrix::from_vec(mean.len(), 1, mean.clone())?)?;
        }
        write_matrix(w, &self.g)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        read_magic(r, MODEL_MAGIC)?;
        let version = read_u32(r, "model header")?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model format version {version}")));
        }
        let j = read_u64(r, "model header")? as usize;
        let config: TrainConfig = serde_json::from_str(&read_string(r, "model config")?)?;
        let meta: ModelMeta = serde_json::from_str(&read_string(r, "model metadata")?)?;
        if j != config.views.len() {
            return Err(Error::Format(format!("model declares {j} views, config has {}", config.views.len())));
        }
        let mut networks = Vec::with_capacity(j);
        let mut u = Vec::with_capacity(j);
        let mut means = Vec::with_capacity(j);
        for _ in 0..j {
            let net = MlpNetwork::read_from(r)?;
            let uj = read_matrix(r)?;
            let mean = read_matrix(r)?;
            if uj.shape() != (net.output_width(), config.r) || mean.shape() != (net.output_width(), 1) {
                return Err(Error::Format("projection or mean shape disagrees with network output".into()));
            }
            networks.push(net);
            u.push(uj);
            means.push(mean.into_vec());
        }
        let g = read_matrix(r)?;
        if g.rows() != config.r {
            return Err(Error::Format(format!("G has {} rows, expected r = {}", g.rows(), config.r)));
        }
        Ok(Self {
            config,
            networks,
            u,
            g,
            means,
            eigenvalues: meta.eigenvalues,
            reconstruction_error: meta.reconstruction_error,
            history: meta.history,
            train_indices: meta.train_indices,
            tune_indices: meta.tune_indices,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    eigenvalues: Vec<f64>,
    reconstruction_error: f64,
    history: Vec<EpochRecord>,
    train_indices: Vec<usize>,
    tune_indices: Vec<usize>,
}
