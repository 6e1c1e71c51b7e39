use std::path::PathBuf;

use clap::Args;
use dgcca_core::DgccaModel;

use super::{load_dataset, write_labels, write_matrix_artifact};
use crate::error::{CliError, CliResult};
use crate::manifest::{Artifact, OutputDir, RunManifest};

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset directory whose views match the model
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: &TransformArgs) -> CliResult<()> {
    let model = DgccaModel::load(&args.model).map_err(|e| CliError::data(args.model.display(), e))?;
    let dataset = load_dataset(&args.data)?;
    let embeddings = model.transform(dataset.views()).map_err(|e| CliError::data("transform", e))?;

    let out = OutputDir::claim(&args.out, args.force)?;
    let mut manifest = RunManifest::new("transform");
    manifest.add_input("model", &args.model)?;
    manifest.add_input("data", &args.data)?;
    for (j, e) in embeddings.iter().enumerate() {
        write_matrix_artifact(&out, &mut manifest, &format!("embedding_{j}"), &format!("view_{j}.mvmx"), e)?;
    }
    if let Some(labels) = dataset.labels() {
        write_labels(&out, "labels.txt", labels)?;
        manifest.artifacts.push(Artifact { name: "labels".into(), path: "labels.txt".into(), shape: None });
    }
    manifest.finish("completed", out.path())?;
    println!("wrote {} embeddings of shape {:?}", embeddings.len(), embeddings[0].shape());
    Ok(())
}
