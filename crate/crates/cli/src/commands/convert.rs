use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use dgcca_core::io::{load_matrix, read_csv_matrix, save_matrix, write_csv_matrix};
use dgcca_core::{save_dataset, Matrix, MultiviewDataset};

use super::read_labels;
use crate::error::{CliError, CliResult};
use crate::manifest::OutputDir;

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read_any(path: &Path) -> CliResult<Matrix> {
    if is_csv(path) {
        let f = File::open(path).map_err(|e| CliError::data(path.display(), e))?;
        Ok(read_csv_matrix(BufReader::new(f)).map_err(|e| CliError::data(path.display(), e))?.matrix)
    } else {
        load_matrix(path).map_err(|e| CliError::data(path.display(), e))
    }
}

/// Convert a single matrix between CSV and MVMX, chosen by file extension.
/// CSV records are matrix rows.
#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub input: PathBuf,
    pub output: PathBuf,
}

pub fn run_convert(args: &ConvertArgs) -> CliResult<()> {
    let m = read_any(&args.input)?;
    if is_csv(&args.output) {
        let f = File::create(&args.output).map_err(|e| CliError::data(args.output.display(), e))?;
        write_csv_matrix(f, &m, None).map_err(|e| CliError::data(args.output.display(), e))
    } else {
        save_matrix(&args.output, &m).map_err(|e| CliError::data(args.output.display(), e))
    }
}

/// Assemble a dataset directory from per-view matrix files (CSV or MVMX).
#[derive(Debug, Args)]
pub struct ImportArgs {
    /// View file, optionally named as NAME=PATH; repeat once per view
    #[arg(long = "view", required = true)]
    pub views: Vec<String>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Input files hold one sample per row (transposed on import)
    #[arg(long)]
    pub samples_as_rows: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run_import(args: &ImportArgs) -> CliResult<()> {
    let mut names = Vec::new();
    let mut views = Vec::new();
    for (j, spec) in args.views.iter().enumerate() {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => (format!("view{j}"), PathBuf::from(spec)),
        };
        let m = read_any(&path)?;
        views.push(if args.samples_as_rows { m.transpose() } else { m });
        names.push(name);
    }
    let labels = args.labels.as_deref().map(read_labels).transpose()?;
    let ds = MultiviewDataset::with_names(views, labels, names, "imported".into())
        .map_err(|e| CliError::data("import", e))?;
    let out = OutputDir::claim(&args.out, args.force)?;
    save_dataset(&ds, out.path()).map_err(|e| CliError::data(out.path().display(), e))?;
    println!("imported {} samples x {} views", ds.num_samples(), ds.num_views());
    Ok(())
}
