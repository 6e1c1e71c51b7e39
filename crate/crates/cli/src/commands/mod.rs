pub mod convert;
pub mod eval;
pub mod gcca;
pub mod gradcheck;
pub mod synth;
pub mod train;
pub mod transform;

use std::path::Path;

use dgcca_core::io::save_matrix;
use dgcca_core::{Error, Matrix, MultiviewDataset};

use crate::error::{CliError, CliResult};
use crate::manifest::{Artifact, OutputDir, RunManifest};

pub(crate) fn load_dataset(path: &Path) -> CliResult<MultiviewDataset> {
    dgcca_core::load_dataset(path).map_err(|e| CliError::data(path.display(), e))
}

/// One non-negative integer per line; blank lines are ignored.
pub(crate) fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse().map_err(|_| CliError::Data(format!("{} line {}: `{l}` is not a label", path.display(), i + 1)))
        })
        .collect()
}

pub(crate) fn write_labels(out: &OutputDir, name: &str, labels: &[usize]) -> CliResult<()> {
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    std::fs::write(out.join(name), text).map_err(|e| CliError::data(out.join(name).display(), e))
}

pub(crate) fn write_matrix_artifact(out: &OutputDir, manifest: &mut RunManifest, name: &str, file: &str, m: &Matrix) -> CliResult<()> {
    save_matrix(out.join(file), m).map_err(|e| CliError::data(out.join(file).display(), e))?;
    manifest.artifacts.push(Artifact { name: name.to_string(), path: file.to_string(), shape: Some([m.rows(), m.cols()]) });
    Ok(())
}

/// Classify a library error raised while computing (not loading).
pub(crate) fn compute_error(context: &str, err: Error) -> CliError {
    match err {
        Error::InvalidArgument(_) => CliError::Config(format!("{context}: {err}")),
        Error::Io(_) | Error::Json(_) | Error::Format(_) | Error::Shape(_) => CliError::data(context, err),
        _ => CliError::Diverged(format!("{context}: {err}")),
    }
}
