//! Re-evaluation of a saved checkpoint or embedding without retraining.
//!
//! When the checkpoint or embedding sits in a seed directory, unset split
//! settings are read from the `config.json` next to it.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use warga::evaluation::evaluate_embedding;
use warga::linalg::Rng;
use warga::training::{training_input, Checkpoint, ModelParams, KMEANS_STREAM};

use crate::experiment::{labels_of, split_for, DataArgs, DataSource, RunConfig, RunMetrics};
use crate::output::{read_embedding, write_json};

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// checkpoint.json from a training run
    #[arg(long, conflicts_with = "embedding", required_unless_present = "embedding")]
    pub checkpoint: Option<PathBuf>,
    /// Saved embedding (text or binary)
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Dataset directory [from the run's config.json]
    #[arg(long, conflicts_with = "sbm")]
    pub data: Option<PathBuf>,
    /// JSON SBM spec [from the run's config.json]
    #[arg(long)]
    pub sbm: Option<PathBuf>,
    /// Edge-split seed [from the run's config.json]
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// k-means seed [the run's training seed, else the split seed]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub val_frac: Option<f64>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// Scale each feature row to sum to one [from the run's config.json]
    #[arg(long)]
    pub row_normalize: bool,
    /// Write the metrics JSON here as well as to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn sibling_config(artifact: &Path) -> Result<Option<RunConfig>> {
    let path = artifact.parent().unwrap_or(Path::new(".")).join("config.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?))
}

pub fn run_eval(args: &EvalArgs) -> Result<RunMetrics> {
    let artifact = args
        .checkpoint
        .as_ref()
        .or(args.embedding.as_ref())
        .context("give --checkpoint or --embedding")?;
    if !artifact.exists() {
        bail!("{} does not exist", artifact.display());
    }
    let run = sibling_config(artifact)?;

    let data = match (&args.data, &args.sbm, &run) {
        (None, None, Some(r)) => r.data.clone(),
        (None, None, None) => bail!("no --data or --sbm given and no config.json next to {}", artifact.display()),
        _ => DataSource::from_args(&DataArgs {
            data: args.data.clone(),
            sbm: args.sbm.clone(),
        })?,
    };
    let split_seed = args
        .split_seed
        .or(run.as_ref().map(|r| r.split_seed))
        .context("no --split-seed given and no config.json to read it from")?;
    let seed = args.seed.or(run.as_ref().map(|r| r.seed)).unwrap_or(split_seed);
    let val_frac = args.val_frac.or(run.as_ref().map(|r| r.val_frac)).unwrap_or(0.05);
    let test_frac = args.test_frac.or(run.as_ref().map(|r| r.test_frac)).unwrap_or(0.10);
    let row_normalize = args.row_normalize || run.as_ref().is_some_and(|r| r.row_normalize);

    let g = data.load(row_normalize)?;
    let split = split_for(&g, split_seed, val_frac, test_frac)?;
    let (model, z) = match &args.checkpoint {
        Some(path) => {
            let params = ModelParams::from_checkpoint(&Checkpoint::load(path)?)
                .with_context(|| format!("loading {}", path.display()))?;
            (params.kind(), params.embed(&training_input(&g, &split)?)?)
        }
        None => {
            let z = read_embedding(artifact)?;
            let model = run.as_ref().map(|r| r.train.model).unwrap_or_default();
            (model, z)
        }
    };
    if z.rows() != g.n_nodes() {
        bail!("embedding has {} rows but the graph has {} nodes", z.rows(), g.n_nodes());
    }
    let mut rng = Rng::with_stream(seed, KMEANS_STREAM);
    let metrics = evaluate_embedding(&z, &split, labels_of(&g), &mut rng)?;
    let result = RunMetrics { model, seed, split_seed, metrics };
    if let Some(out) = &args.out {
        write_json(out, &result)?;
    }
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(result)
}
