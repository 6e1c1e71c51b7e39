//! Dataset directory layout:
//!
//! ```text
//! <dir>/manifest.json    DatasetManifest
//! <dir>/view_<j>.mvmx    one MVMX matrix per view, d_j × N
//! <dir>/labels.txt       optional, one non-negative integer per line
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MultiviewDataset;
use crate::error::{Error, Result};
use crate::io::{load_matrix, save_matrix};

pub const DATASET_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const LABELS: &str = "labels.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub n_samples: usize,
    pub views: Vec<ViewEntry>,
    pub labels: Option<String>,
    #[serde(default)]
    pub provenance: String,
}

pub fn save_dataset(ds: &MultiviewDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut views = Vec::with_capacity(ds.num_views());
    for (j, (v, name)) in ds.views().iter().zip(ds.view_names()).enumerate() {
        let file = format!("view_{j}.mvmx");
        save_matrix(dir.join(&file), v)?;
        views.push(ViewEntry { name: name.clone(), file, rows: v.rows() });
    }
    let labels = match ds.labels() {
        Some(l) => {
            let text: String = l.iter().map(|x| format!("{x}\n")).collect();
            fs::write(dir.join(LABELS), text)?;
            Some(LABELS.to_string())
        }
        None => None,
    };
    let manifest = DatasetManifest {
        format_version: DATASET_VERSION,
        n_samples: ds.num_samples(),
        views,
        labels,
        provenance: ds.provenance().to_string(),
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn relative_file(dir: &Path, name: &str) -> Result<std::path::PathBuf> {
    let p = Path::new(name);
    if p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
        return Err(Error::Format(format!("manifest file entry `{name}` must be a plain relative path")));
    }
    Ok(dir.join(p))
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<MultiviewDataset> {
    let dir = dir.as_ref();
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
    if manifest.format_version != DATASET_VERSION {
        return Err(Error::Format(format!(
            "dataset format version {} is not supported (expected {DATASET_VERSION})",
            manifest.format_version
        )));
    }
    let mut views = Vec::with_capacity(manifest.views.len());
    for entry in &manifest.views {
        let m = load_matrix(relative_file(dir, &entry.file)?)?;
        if m.shape() != (entry.rows, manifest.n_samples) {
            return Err(Error::Format(format!(
                "view `{}`: file holds {:?}, manifest declares {:?}",
                entry.name,
                m.shape(),
                (entry.rows, manifest.n_samples)
            )));
        }
        views.push(m);
    }
    let labels = match &manifest.labels {
        Some(file) => {
            let text = fs::read_to_string(relative_file(dir, file)?)?;
            let parsed = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, l)| {
                    l.trim().parse::<usize>().map_err(|_| Error::Format(format!("labels line {}: `{l}`", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            if parsed.len() != manifest.n_samples {
                return Err(Error::Format(format!(
                    "label/view length mismatch: {} labels, {} samples",
                    parsed.len(),
                    manifest.n_samples
                )));
            }
            Some(parsed)
        }
        None => None,
    };
    let names = manifest.views.iter().map(|v| v.name.clone()).collect();
    MultiviewDataset::with_names(views, labels, names, manifest.provenance)
}
