//! Multi-seed training runs and width sweeps.
//!
//! Settings are layered: built-in defaults, then the dataset profile (for
//! `cora`, `citeseer` and `pubmed`), then the `--config` file, then flags.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use warga::evaluation::{aggregate, evaluate_embedding, MetricsReport};
use warga::graph::{generate_sbm, load_graph, split_edges, EdgeSplit, Graph, SbmSpec};
use warga::linalg::Rng;
use warga::models::FinalActivation;
use warga::training::{train, ModelKind, TrainConfig, KMEANS_STREAM, SPLIT_STREAM};

use crate::output::{embedding_binary, embedding_text, loss_log, write_json, VERSION};
use crate::prepare::{Manifest, EDGES, FEATURES, LABELS};

/// Model hyper-parameters. Unset flags keep the value from the config
/// file, the dataset profile, or the built-in default (shown in brackets).
#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// warga, gae, vgae, arga or arvga [warga]
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Generator updates T [200; pubmed 1500]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Critic updates per epoch K [5]
    #[arg(long)]
    pub critic_iters: Option<usize>,
    /// Rows per critic or discriminator batch m [all nodes]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// First GCN layer width [32]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Embedding width [16]
    #[arg(long)]
    pub embed: Option<usize>,
    /// Critic first hidden width [16]
    #[arg(long)]
    pub critic_hidden1: Option<usize>,
    /// Critic second hidden width [64]
    #[arg(long)]
    pub critic_hidden2: Option<usize>,
    /// Encoder learning rate [0.001; pubmed 0.005]
    #[arg(long)]
    pub lr_encoder: Option<f64>,
    /// Critic and discriminator learning rate [0.001; pubmed 0.005]
    #[arg(long)]
    pub lr_critic: Option<f64>,
    /// Critic parameter clip bound [0.01]
    #[arg(long)]
    pub clip: Option<f64>,
    /// Regularizer weight [1.0]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// relu or linear [relu]
    #[arg(long, value_parser = parse_activation)]
    pub final_activation: Option<FinalActivation>,
    /// Class-balanced reconstruction loss [true]
    #[arg(long)]
    pub pos_weighting: Option<bool>,
    /// Score the diagonal pairs in the reconstruction loss [true]
    #[arg(long)]
    pub include_diagonal: Option<bool>,
    /// Validation metrics every this many epochs, 0 disables [10]
    #[arg(long)]
    pub eval_every: Option<usize>,
}

fn parse_activation(s: &str) -> Result<FinalActivation, String> {
    match s.to_ascii_lowercase().as_str() {
        "relu" => Ok(FinalActivation::Relu),
        "linear" => Ok(FinalActivation::Linear),
        _ => Err(format!("expected relu or linear, got `{s}`")),
    }
}

impl TrainArgs {
    fn apply(&self, c: &mut TrainConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(
            model,
            epochs,
            critic_iters,
            hidden,
            embed,
            critic_hidden1,
            critic_hidden2,
            lr_encoder,
            lr_critic,
            clip,
            lambda,
            final_activation,
            pos_weighting,
            include_diagonal,
            eval_every
        );
        if self.batch_size.is_some() {
            c.batch_size = self.batch_size;
        }
    }
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct DataArgs {
    /// Directory with edges.txt, features.txt and optionally labels.txt
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// JSON SBM spec; the graph is generated in memory
    #[arg(long)]
    pub sbm: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Flat JSON of settings; keys are the long flag names with underscores
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training seeds: `0..9` (inclusive), `3`, or `0,4,7` [0]
    #[arg(long)]
    pub seeds: Option<String>,
    /// Edge-split seed shared by every run [each run's training seed]
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Fraction of edges held out for validation [0.05]
    #[arg(long)]
    pub val_frac: Option<f64>,
    /// Fraction of edges held out for testing [0.10]
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// Scale each feature row to sum to one
    #[arg(long)]
    pub row_normalize: bool,
    /// Seeds trained concurrently [1]
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Also write embedding.bin
    #[arg(long)]
    pub binary_embedding: bool,
    /// Run directory
    #[arg(long)]
    pub out: PathBuf,
}

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Dir { path: PathBuf, name: String },
    Sbm(SbmSpec),
}

impl DataSource {
    pub fn from_args(args: &DataArgs) -> Result<Self> {
        match (&args.data, &args.sbm) {
            (Some(dir), None) => {
                let dir = &dir.canonicalize().with_context(|| format!("dataset directory {}", dir.display()))?;
                let name = match Manifest::load(dir) {
                    Ok(m) => m.name,
                    Err(_) => dir
                        .file_name()
                        .map(|s| s.to_string_lossy().to_lowercase())
                        .unwrap_or_default(),
                };
                Ok(Self::Dir { path: dir.clone(), name })
            }
            (None, Some(spec)) => {
                let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
                let spec: SbmSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", spec.display()))?;
                spec.validate()?;
                Ok(Self::Sbm(spec))
            }
            _ => bail!("give exactly one of --data or --sbm"),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Dir { name, .. } => name,
            Self::Sbm(_) => "sbm",
        }
    }

    pub fn load(&self, row_normalize: bool) -> Result<Graph> {
        let g = match self {
            Self::Dir { path, .. } => {
                let labels = path.join(LABELS);
                load_graph(path.join(EDGES), path.join(FEATURES), labels.exists().then_some(labels.as_path()))
                    .with_context(|| format!("loading dataset {}", path.display()))?
            }
            Self::Sbm(spec) => generate_sbm(spec)?,
        };
        Ok(if row_normalize { g.with_row_normalized_features() } else { g })
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Dataset profile applied before the config file and flags.
    pub profile: Option<String>,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub split_seed: Option<u64>,
    pub val_frac: f64,
    pub test_frac: f64,
    pub row_normalize: bool,
}

impl ExperimentConfig {
    pub fn split_seed_for(&self, seed: u64) -> u64 {
        self.split_seed.unwrap_or(seed)
    }
}

/// Parses `a..b` (inclusive), a single seed, or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().with_context(|| format!("bad seed range `{s}`"))?;
        let b: u64 = b.trim().parse().with_context(|| format!("bad seed range `{s}`"))?;
        ensure!(a <= b, "empty seed range `{s}`");
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().with_context(|| format!("bad seed `{t}` in `{s}`")))
            .collect::<Result<_>>()?
    };
    check_seeds(&seeds)?;
    Ok(seeds)
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    ensure!(!seeds.is_empty(), "seed list is empty");
    let mut seen = BTreeSet::new();
    for s in seeds {
        ensure!(seen.insert(s), "seed {s} is listed twice");
    }
    Ok(())
}

fn seeds_from_json(v: &Value) -> Result<Vec<u64>> {
    match v {
        Value::String(s) => parse_seeds(s),
        Value::Number(n) => Ok(vec![n.as_u64().context("seeds must be nonnegative integers")?]),
        Value::Array(items) => {
            let seeds = items
                .iter()
                .map(|x| x.as_u64().context("seeds must be nonnegative integers"))
                .collect::<Result<Vec<_>>>()?;
            check_seeds(&seeds)?;
            Ok(seeds)
        }
        _ => bail!("`seeds` must be a string, an integer or an array"),
    }
}

/// Settings read from a `--config` file.
#[derive(Debug, Default)]
struct FileSettings {
    train: Map<String, Value>,
    seeds: Option<Vec<u64>>,
    split_seed: Option<u64>,
    val_frac: Option<f64>,
    test_frac: Option<f64>,
    row_normalize: Option<bool>,
}

fn read_config_file(path: &Path) -> Result<FileSettings> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Value::Object(mut map) = value else { bail!("{}: expected a JSON object", path.display()) };
    let float = |v: Value, key: &str| v.as_f64().with_context(|| format!("`{key}` must be a number"));
    let mut out = FileSettings::default();
    if let Some(v) = map.remove("seeds") {
        out.seeds = Some(seeds_from_json(&v)?);
    }
    if let Some(v) = map.remove("split_seed") {
        out.split_seed = Some(v.as_u64().context("`split_seed` must be a nonnegative integer")?);
    }
    if let Some(v) = map.remove("val_frac") {
        out.val_frac = Some(float(v, "val_frac")?);
    }
    if let Some(v) = map.remove("test_frac") {
        out.test_frac = Some(float(v, "test_frac")?);
    }
    if let Some(v) = map.remove("row_normalize") {
        out.row_normalize = Some(v.as_bool().context("`row_normalize` must be true or false")?);
    }
    out.train = map;
    Ok(out)
}

/// Layers defaults, profile, config file and flags into one configuration.
pub fn resolve(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let data = DataSource::from_args(&args.data)?;
    let profile = TrainConfig::dataset_profile(data.name());
    let mut train = match &profile {
        Some(p) => {
            log::info!(
                "dataset profile `{}`: epochs {}, lr_encoder {}, lr_critic {}",
                data.name(),
                p.epochs,
                p.lr_encoder,
                p.lr_critic
            );
            p.clone()
        }
        None => TrainConfig::default(),
    };
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => FileSettings::default(),
    };
    if !file.train.is_empty() {
        let Value::Object(mut merged) = serde_json::to_value(&train)? else { unreachable!() };
        merged.extend(file.train.clone());
        train = serde_json::from_value(Value::Object(merged)).context("invalid training settings in config file")?;
    }
    args.train.apply(&mut train);

    let seeds = match &args.seeds {
        Some(s) => parse_seeds(s)?,
        None => file.seeds.clone().unwrap_or_else(|| vec![train.seed]),
    };
    let cfg = ExperimentConfig {
        profile: profile.map(|_| data.name().to_string()),
        data,
        seeds,
        split_seed: args.split_seed.or(file.split_seed),
        val_frac: args.val_frac.or(file.val_frac).unwrap_or(0.05),
        test_frac: args.test_frac.or(file.test_frac).unwrap_or(0.10),
        row_normalize: args.row_normalize || file.row_normalize.unwrap_or(false),
        train,
    };
    cfg.train.validate()?;
    Ok(cfg)
}

/// Snapshot written to each seed directory; enough to rerun or re-evaluate
/// that seed alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: String,
    pub seed: u64,
    pub split_seed: u64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub row_normalize: bool,
    pub data: DataSource,
    pub train: TrainConfig,
}

/// Test-set metrics of one run. Holds no timing, so reruns match byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub model: ModelKind,
    pub seed: u64,
    pub split_seed: u64,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct Timing {
    wall_seconds: f64,
    train_seconds: f64,
}

pub fn split_for(g: &Graph, split_seed: u64, val_frac: f64, test_frac: f64) -> Result<EdgeSplit> {
    let mut rng = Rng::with_stream(split_seed, SPLIT_STREAM);
    Ok(split_edges(g, val_frac, test_frac, &mut rng)?)
}

pub fn labels_of(g: &Graph) -> Option<(&[usize], usize)> {
    g.labels().zip(g.n_classes())
}

fn run_seed(cfg: &ExperimentConfig, g: &Graph, seed: u64, dir: &Path, binary: bool) -> Result<RunMetrics> {
    let started = Instant::now();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let split_seed = cfg.split_seed_for(seed);
    let train_cfg = TrainConfig { seed, ..cfg.train.clone() };
    write_json(
        &dir.join("config.json"),
        &RunConfig {
            version: VERSION.to_string(),
            seed,
            split_seed,
            val_frac: cfg.val_frac,
            test_frac: cfg.test_frac,
            row_normalize: cfg.row_normalize,
            data: cfg.data.clone(),
            train: train_cfg.clone(),
        },
    )?;

    let split = split_for(g, split_seed, cfg.val_frac, cfg.test_frac)?;
    let report = train(g, &split, &train_cfg).with_context(|| format!("seed {seed}"))?;
    let mut kmeans_rng = Rng::with_stream(seed, KMEANS_STREAM);
    let metrics = evaluate_embedding(&report.embedding, &split, labels_of(g), &mut kmeans_rng)?;

    report.params.to_checkpoint().save(&dir.join("checkpoint.json"))?;
    fs::write(dir.join("embedding.txt"), embedding_text(&report.embedding))?;
    if binary {
        fs::write(dir.join("embedding.bin"), embedding_binary(&report.embedding))?;
    }
    fs::write(dir.join("loss_log.tsv"), loss_log(&report.epochs))?;
    let run = RunMetrics {
        model: train_cfg.model,
        seed,
        split_seed,
        metrics,
    };
    write_json(&dir.join("metrics.json"), &run)?;
    write_json(
        &dir.join("timing.json"),
        &Timing {
            wall_seconds: started.elapsed().as_secs_f64(),
            train_seconds: report.wall_seconds,
        },
    )?;
    log::info!(
        "{} seed {seed}: {}",
        train_cfg.model,
        run.metrics.iter().map(|(k, v)| format!("{k} {v:.4}")).collect::<Vec<_>>().join(", ")
    );
    Ok(run)
}

const TABLE_METRICS: [&str; 5] = ["auc", "ap", "acc", "nmi", "ari"];

#[derive(Serialize)]
struct ReportFile<'a> {
    model: ModelKind,
    dataset: &'a str,
    seeds: &'a [u64],
    #[serde(flatten)]
    report: &'a MetricsReport,
}

/// Trains every seed into `out/seed-N/` and writes the aggregate report.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, jobs: usize, binary: bool) -> Result<MetricsReport> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join("experiment.json"), &serde_json::json!({ "version": VERSION, "experiment": cfg }))?;
    let g = cfg.data.load(cfg.row_normalize)?;
    log::info!(
        "{}: {} nodes, {} edges, {} features; {} seed(s)",
        cfg.data.name(),
        g.n_nodes(),
        g.n_edges(),
        g.n_features(),
        cfg.seeds.len()
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    let runs: Vec<RunMetrics> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| run_seed(cfg, &g, seed, &out.join(format!("seed-{seed}")), binary))
            .collect::<Result<_>>()
    })?;

    let report = aggregate(&runs.iter().map(|r| r.metrics.clone()).collect::<Vec<_>>());
    write_json(
        &out.join("report.json"),
        &ReportFile {
            model: cfg.train.model,
            dataset: cfg.data.name(),
            seeds: &cfg.seeds,
            report: &report,
        },
    )?;
    let present: Vec<&str> = TABLE_METRICS.into_iter().filter(|m| report.summary.contains_key(*m)).collect();
    let table = report.to_table(&cfg.train.model.as_str().to_uppercase(), &present);
    fs::write(out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// First-layer widths of the grid rows
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    pub hidden_widths: Vec<usize>,
    /// Embedding widths of the grid columns
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    pub embed_widths: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct GridCell {
    pub hidden: usize,
    pub embed: usize,
    pub summary: BTreeMap<String, warga::evaluation::MetricSummary>,
}

fn grid_matrix(cells: &[GridCell], hiddens: &[usize], embeds: &[usize], metric: &str) -> String {
    let mut out = format!("{metric} (rows: hidden, columns: embed)\n{:>8}", "");
    for e in embeds {
        let _ = write!(out, "  {:>14}", e);
    }
    out.push('\n');
    for h in hiddens {
        let _ = write!(out, "{h:>8}");
        for e in embeds {
            let cell = cells
                .iter()
                .find(|c| c.hidden == *h && c.embed == *e)
                .and_then(|c| c.summary.get(metric))
                .map_or_else(|| "-".to_string(), |s| s.table_cell());
            let _ = write!(out, "  {cell:>14}");
        }
        out.push('\n');
    }
    out
}

/// Runs the width grid, one experiment per cell in `out/h{hidden}-e{embed}/`.
pub fn run_sweep(args: &SweepArgs) -> Result<Vec<GridCell>> {
    ensure!(
        !args.hidden_widths.is_empty() && !args.embed_widths.is_empty(),
        "sweep needs at least one hidden and one embed width"
    );
    ensure!(
        args.hidden_widths.iter().chain(&args.embed_widths).all(|&w| w >= 1),
        "sweep widths must be at least 1"
    );
    if args.experiment.train.hidden.is_some() || args.experiment.train.embed.is_some() {
        log::warn!("--hidden/--embed are replaced by the sweep grid");
    }
    let base = resolve(&args.experiment)?;
    let out = &args.experiment.out;
    let mut cells = Vec::new();
    for &hidden in &args.hidden_widths {
        for &embed in &args.embed_widths {
            let cfg = ExperimentConfig {
                train: TrainConfig { hidden, embed, ..base.train.clone() },
                ..base.clone()
            };
            log::info!("grid cell hidden {hidden}, embed {embed}");
            let report = run_experiment(&cfg, &out.join(format!("h{hidden}-e{embed}")), args.experiment.jobs, args.experiment.binary_embedding)?;
            cells.push(GridCell { hidden, embed, summary: report.summary });
        }
    }

    write_json(&out.join("grid.json"), &cells)?;
    let metrics: Vec<&str> = TABLE_METRICS
        .into_iter()
        .filter(|m| cells.iter().all(|c| c.summary.contains_key(*m)))
        .collect();
    let mut csv = String::from("hidden,embed");
    for m in &metrics {
        let _ = write!(csv, ",{m}_mean,{m}_std");
    }
    csv.push('\n');
    for c in &cells {
        let _ = write!(csv, "{},{}", c.hidden, c.embed);
        for m in &metrics {
            let s = &c.summary[*m];
            let _ = write!(csv, ",{},{}", s.mean, s.std);
        }
        csv.push('\n');
    }
    fs::write(out.join("grid.csv"), csv)?;
    let text: Vec<String> = metrics
        .iter()
        .map(|m| grid_matrix(&cells, &args.hidden_widths, &args.embed_widths, m))
        .collect();
    let text = text.join("\n");
    fs::write(out.join("grid.txt"), &text)?;
    print!("{text}");
    Ok(cells)
}
