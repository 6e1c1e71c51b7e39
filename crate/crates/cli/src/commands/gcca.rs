use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use dgcca_core::linalg::mean_center_columns;
use dgcca_core::{solve_gcca, GccaInput};

use super::{compute_error, load_dataset, write_labels, write_matrix_artifact};
use crate::error::{CliError, CliResult};
use crate::manifest::{Artifact, OutputDir, RunManifest};

pub const SUMMARY_FILE: &str = "gcca.json";

/// Linear GCCA on the mean-centered views of a dataset.
#[derive(Debug, Args)]
pub struct GccaArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Comma-separated per-view weights
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Serialize)]
struct Summary {
    eigenvalues: Vec<f64>,
    objective: f64,
    reconstruction_error: f64,
    eigengap: f64,
    degenerate: bool,
}

pub fn run(args: &GccaArgs) -> CliResult<()> {
    let ds = load_dataset(&args.data)?;
    let centered: Vec<_> = ds.views().iter().map(mean_center_columns).collect();
    let mut input = GccaInput::new(centered, args.r, args.eps).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(w) = &args.weights {
        input = input.with_weights(w.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let sol = solve_gcca(&input).map_err(|e| compute_error("gcca", e))?;

    let out = OutputDir::claim(&args.out, args.force)?;
    let mut manifest = RunManifest::new("gcca");
    manifest.add_input("data", &args.data)?;
    write_matrix_artifact(&out, &mut manifest, "g", "g.mvmx", &sol.g)?;
    for (j, (u, y)) in sol.u.iter().zip(&input.views).enumerate() {
        write_matrix_artifact(&out, &mut manifest, &format!("u_{j}"), &format!("u_{j}.mvmx"), u)?;
        let embedding = u.matmul_tn(y);
        write_matrix_artifact(&out, &mut manifest, &format!("embedding_{j}"), &format!("view_{j}.mvmx"), &embedding)?;
    }
    if let Some(labels) = ds.labels() {
        write_labels(&out, "labels.txt", labels)?;
        manifest.artifacts.push(Artifact { name: "labels".into(), path: "labels.txt".into(), shape: None });
    }
    let summary = Summary {
        eigenvalues: sol.eigenvalues.clone(),
        objective: sol.objective,
        reconstruction_error: sol.reconstruction_error,
        eigengap: sol.eigengap,
        degenerate: sol.is_degenerate(),
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::data("summary", e))? + "\n";
    std::fs::write(out.join(SUMMARY_FILE), &text).map_err(|e| CliError::data(SUMMARY_FILE, e))?;
    manifest.artifacts.push(Artifact { name: "summary".into(), path: SUMMARY_FILE.into(), shape: None });
    manifest.finish("completed", out.path())?;
    print!("{text}");
    Ok(())
}
