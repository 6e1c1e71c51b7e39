use std::path::PathBuf;

use clap::Args;
use dgcca_core::{generate_synthetic_mixture, save_dataset, SyntheticConfig};

use crate::error::{CliError, CliResult};
use crate::manifest::OutputDir;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Samples per mixture component (total N is twice this)
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of the Gaussian noise added to every point
    #[arg(long, default_value_t = 0.08)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let cfg = SyntheticConfig { n_per_component: args.n, n_components: 2, noise: args.noise, seed: args.seed };
    let ds = generate_synthetic_mixture(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let out = OutputDir::claim(&args.out, args.force)?;
    save_dataset(&ds, out.path()).map_err(|e| CliError::data(out.path().display(), e))?;
    println!("wrote {} samples x {} views to {}", ds.num_samples(), ds.num_views(), out.path().display());
    Ok(())
}
