use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use dgcca_core::io::load_matrix;
use dgcca_core::{knn_report, linear_probe, DgccaModel, EvalReport, Matrix};

use super::{compute_error, load_dataset, read_labels};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Knn,
    Probe,
}

impl FromStr for Metric {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "knn" => Ok(Self::Knn),
            "probe" => Ok(Self::Probe),
            other => Err(CliError::Config(format!("unknown metric `{other}` (expected `knn` or `probe`)"))),
        }
    }
}

/// Features come either from an embedding file (plus `--labels`) or from a
/// dataset. A dataset is used raw, or through `--model`; `--view` picks one
/// view, otherwise raw views are stacked and model embeddings averaged.
#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `knn` or `probe`
    #[arg(long, default_value = "knn")]
    pub metric: String,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Ridge penalty of the linear probe
    #[arg(long, default_value_t = 1e-3)]
    pub ridge: f64,
    /// Training points as an MVMX matrix, one column per sample
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    pub embeddings: Option<PathBuf>,
    /// Labels for --embeddings (or overriding the dataset's)
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Training dataset directory
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model used to embed --data and --query-data
    #[arg(long, requires = "data")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub view: Option<usize>,
    /// Query points; defaults to the training points
    #[arg(long, conflicts_with = "query_data")]
    pub query_embeddings: Option<PathBuf>,
    #[arg(long, requires = "query_embeddings")]
    pub query_labels: Option<PathBuf>,
    #[arg(long)]
    pub query_data: Option<PathBuf>,
    /// Also write the report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn from_embeddings(path: &Path, labels: Option<&Path>) -> CliResult<(Matrix, Vec<usize>)> {
    let m = load_matrix(path).map_err(|e| CliError::data(path.display(), e))?;
    let labels_path =
        labels.ok_or_else(|| CliError::Config(format!("labels are required with embeddings {}", path.display())))?;
    let labels = read_labels(labels_path)?;
    if labels.len() != m.cols() {
        return Err(CliError::Data(format!("{} labels for {} points", labels.len(), m.cols())));
    }
    Ok((m, labels))
}

fn from_dataset(
    path: &Path,
    labels: Option<&Path>,
    model: Option<&DgccaModel>,
    view: Option<usize>,
) -> CliResult<(Matrix, Vec<usize>)> {
    let ds = load_dataset(path)?;
    let labels = match labels {
        Some(p) => read_labels(p)?,
        None => ds
            .labels()
            .ok_or_else(|| CliError::Data(format!("dataset {} has no labels", path.display())))?
            .to_vec(),
    };
    if labels.len() != ds.num_samples() {
        return Err(CliError::Data(format!("{} labels for {} samples", labels.len(), ds.num_samples())));
    }
    let blocks: Vec<Matrix> = match model {
        Some(m) => m.transform(ds.views()).map_err(|e| CliError::data("transform", e))?,
        None => ds.views().to_vec(),
    };
    let features = match view {
        Some(j) => blocks
            .get(j)
            .cloned()
            .ok_or_else(|| CliError::Config(format!("view {j} out of range ({} views)", blocks.len())))?,
        None if model.is_some() => {
            let mut mean = blocks[0].clone();
            for b in &blocks[1..] {
                mean.axpy(1.0, b);
            }
            mean.scale(1.0 / blocks.len() as f64)
        }
        None => Matrix::vcat(&blocks.iter().collect::<Vec<_>>()).map_err(|e| CliError::data("stacking views", e))?,
    };
    Ok((features, labels))
}

pub fn evaluate(args: &EvalArgs) -> CliResult<EvalReport> {
    let metric: Metric = args.metric.parse()?;
    let model = match &args.model {
        Some(p) => Some(DgccaModel::load(p).map_err(|e| CliError::data(p.display(), e))?),
        None => None,
    };
    let (train, labels) = match (&args.embeddings, &args.data) {
        (Some(e), _) => from_embeddings(e, args.labels.as_deref())?,
        (None, Some(d)) => from_dataset(d, args.labels.as_deref(), model.as_ref(), args.view)?,
        (None, None) => return Err(CliError::Config("one of --embeddings or --data is required".into())),
    };
    let (query, query_labels) = match (&args.query_embeddings, &args.query_data) {
        (Some(e), _) => from_embeddings(e, args.query_labels.as_deref())?,
        (None, Some(d)) => from_dataset(d, None, model.as_ref(), args.view)?,
        (None, None) => (train.clone(), labels.clone()),
    };
    if query.rows() != train.rows() {
        return Err(CliError::Data(format!(
            "query points have dimension {}, training points {}",
            query.rows(),
            train.rows()
        )));
    }
    let report = match metric {
        Metric::Knn => knn_report(&train, &labels, &query, &query_labels, args.k),
        Metric::Probe => linear_probe(&train, &labels, args.ridge).and_then(|p| p.score(&query, &query_labels)),
    };
    report.map_err(|e| compute_error(&args.metric, e))
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let report = evaluate(args)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::data("report", e))? + "\n";
    if let Some(out) = &args.out {
        std::fs::write(out, &text).map_err(|e| CliError::data(out.display(), e))?;
    }
    print!("{text}");
    Ok(())
}
