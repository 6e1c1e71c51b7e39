use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use log::info;
use serde::Serialize;

use dgcca_core::trainer::{train_dgcca_observed, EpochRecord, TrainError};

use super::load_dataset;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{Artifact, OutputDir, RunManifest};

pub const MODEL_FILE: &str = "model.dgcca";
pub const EPOCH_LOG: &str = "epochs.jsonl";
pub const TIMING_LOG: &str = "timing.jsonl";

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training config (TOML)
    #[arg(long, required_unless_present = "from_manifest", conflicts_with = "from_manifest")]
    pub config: Option<PathBuf>,
    /// Dataset directory
    #[arg(long, required_unless_present = "from_manifest", conflicts_with = "from_manifest")]
    pub data: Option<PathBuf>,
    /// Repeat the run recorded in an earlier run manifest
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Serialize)]
struct EpochLine {
    epoch: usize,
    train_err: f64,
    tune_err: Option<f64>,
}

#[derive(Serialize)]
struct TimingLine {
    epoch: usize,
    seconds: f64,
}

struct Logs {
    epochs: BufWriter<File>,
    timing: BufWriter<File>,
    failed: Option<std::io::Error>,
}

impl Logs {
    fn record(&mut self, rec: &EpochRecord, seconds: f64) {
        if self.failed.is_some() {
            return;
        }
        let epoch = EpochLine { epoch: rec.epoch, train_err: rec.train_error, tune_err: rec.tune_error };
        let timing = TimingLine { epoch: rec.epoch, seconds };
        let result = (|| {
            serde_json::to_writer(&mut self.epochs, &epoch)?;
            self.epochs.write_all(b"\n")?;
            serde_json::to_writer(&mut self.timing, &timing)?;
            self.timing.write_all(b"\n")
        })();
        if let Err(e) = result {
            self.failed = Some(e);
        }
    }

    fn close(mut self) -> std::io::Result<()> {
        if let Some(e) = self.failed.take() {
            return Err(e);
        }
        self.epochs.flush()?;
        self.timing.flush()
    }
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let (run_config, data_path, config_path) = match &args.from_manifest {
        Some(path) => {
            let previous = RunManifest::load(path)?;
            let cfg = previous
                .config
                .clone()
                .ok_or_else(|| CliError::Config(format!("{} records no training config", path.display())))?;
            (cfg, previous.input("data")?.to_path_buf(), None)
        }
        None => {
            let config = args.config.as_ref().expect("clap enforces --config");
            let data = args.data.as_ref().expect("clap enforces --data");
            (RunConfig::load(config)?, data.clone(), Some(config.clone()))
        }
    };
    let dataset = load_dataset(&data_path)?;
    let dims: Vec<usize> = dataset.views().iter().map(|v| v.rows()).collect();
    let train_config = run_config.resolve(&dims)?;

    let out = OutputDir::claim(&args.out, args.force)?;
    let mut manifest = RunManifest::new("train");
    manifest.seed = Some(run_config.seed);
    manifest.config = Some(run_config);
    manifest.add_input("data", &data_path)?;
    if let Some(c) = &config_path {
        manifest.add_input("config", c)?;
    }

    let mut logs = Logs {
        epochs: BufWriter::new(out.create(EPOCH_LOG)?),
        timing: BufWriter::new(out.create(TIMING_LOG)?),
        failed: None,
    };
    let result = train_dgcca_observed(dataset.views(), &train_config, &mut |rec, secs| {
        info!("epoch {}: train {:.6} tune {:?} ({secs:.3}s)", rec.epoch, rec.train_error, rec.tune_error);
        logs.record(rec, secs);
    });
    logs.close().map_err(|e| CliError::data("writing epoch logs", e))?;
    for (name, path) in [("epoch_log", EPOCH_LOG), ("timing_log", TIMING_LOG)] {
        manifest.artifacts.push(Artifact { name: name.into(), path: path.into(), shape: None });
    }

    let model = match result {
        Ok(model) => model,
        Err(err) => {
            let status = if matches!(err, TrainError::Setup(_)) { "failed" } else { "diverged" };
            manifest.finish(status, out.path())?;
            return Err(err.into());
        }
    };
    model.save(out.join(MODEL_FILE)).map_err(|e| CliError::data(out.join(MODEL_FILE).display(), e))?;
    manifest.artifacts.push(Artifact { name: "model".into(), path: MODEL_FILE.into(), shape: None });
    manifest.finish("completed", out.path())?;

    let last_tune = model.history.last().and_then(|h| h.tune_error);
    println!(
        "trained {} epochs; final reconstruction error {:.6}{}",
        model.history.len(),
        model.reconstruction_error,
        last_tune.map_or(String::new(), |t| format!(", last tuning error {t:.6}"))
    );
    Ok(())
}
