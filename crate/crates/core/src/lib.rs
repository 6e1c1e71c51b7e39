//! Generalized canonical correlation analysis (GCCA) over any number of
//! views, and its deep variant: per-view feed-forward networks trained by
//! backpropagating the GCCA reconstruction error.
//!
//! ```
//! use dgcca_core::{solve_gcca, GccaInput, Matrix};
//!
//! let a = Matrix::from_fn(2, 6, |i, j| ((i + 1) * j) as f64 - 2.5 * (i + 1) as f64);
//! let b = a.scale(3.0);
//! let sol = solve_gcca(&GccaInput::new(vec![a, b], 1, 1e-9).unwrap()).unwrap();
//! assert!(sol.reconstruction_error < 1e-6);
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod gcca;
pub mod io;
pub mod linalg;
pub mod network;
pub mod optimizer;
pub mod trainer;

pub use data::{
    generate_synthetic_mixture, load_dataset, save_dataset, split_dataset, DatasetSplit, MultiviewDataset, SplitSpec,
    SyntheticConfig,
};
pub use error::{Error, Result};
pub use eval::{knn_classify, knn_report, linear_probe, EvalReport, LinearProbe};
pub use gcca::{gcca_gradient, solve_gcca, GccaGradients, GccaInput, GccaSolution, EIGENGAP_TOL};
pub use linalg::Matrix;
pub use network::{init_network, Activation, MlpNetwork, Regularization};
pub use optimizer::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use trainer::{
    train_dgcca, train_dgcca_from, train_dgcca_observed, DgccaModel, EpochRecord, TrainConfig, TrainError,
    ViewConfig,
};
