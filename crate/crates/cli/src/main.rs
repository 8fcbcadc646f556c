//! `warga`: prepare datasets, train and sweep graph autoencoders, and
//! re-evaluate saved runs.

mod eval;
mod experiment;
mod output;
mod prepare;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use warga::graph::{generate_sbm, FeatureMode, SbmSpec};

use crate::output::{write_json, VERSION};
use crate::prepare::Converted;

#[derive(Parser)]
#[command(name = "warga", version = VERSION, about = "Wasserstein-regularized graph autoencoders and baselines")]
struct Cli {
    /// Only print warnings and errors
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw .content/.cites or Pubmed-Diabetes dump into edges/features/labels files
    Prepare {
        /// Directory holding the raw files
        #[arg(long)]
        input: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Dataset name recorded in the manifest [file stem, or pubmed]
        #[arg(long)]
        name: Option<String>,
    },
    /// Train one model over one or more seeds
    Train(experiment::ExperimentArgs),
    /// Train over a grid of first-layer and embedding widths
    Sweep(experiment::SweepArgs),
    /// Recompute test metrics from a checkpoint or embedding
    Eval(eval::EvalArgs),
    /// Generate a stochastic block model graph in the prepared format
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Block sizes
    #[arg(long, value_delimiter = ',', default_value = "50,50")]
    blocks: Vec<usize>,
    /// Within-block edge probability
    #[arg(long, default_value_t = 0.2)]
    p_in: f64,
    /// Between-block edge probability
    #[arg(long, default_value_t = 0.02)]
    p_out: f64,
    /// one-hot-block or identity
    #[arg(long, default_value = "one-hot-block", value_parser = parse_feature_mode)]
    features: FeatureMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

fn parse_feature_mode(s: &str) -> Result<FeatureMode, String> {
    match s {
        "one-hot-block" => Ok(FeatureMode::OneHotBlock),
        "identity" => Ok(FeatureMode::Identity),
        _ => Err(format!("expected one-hot-block or identity, got `{s}`")),
    }
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SbmSpec {
        block_sizes: args.blocks.clone(),
        p_in: args.p_in,
        p_out: args.p_out,
        features: args.features,
        seed: args.seed,
    };
    let g = generate_sbm(&spec)?;
    let data = Converted {
        node_ids: (0..g.n_nodes()).map(|i| i.to_string()).collect(),
        edges: g.edges(),
        features: g.features().clone(),
        labels: g.labels().map(<[usize]>::to_vec).unwrap_or_default(),
        class_names: (0..spec.block_sizes.len()).map(|b| format!("block{b}")).collect(),
        dropped_edges: 0,
    };
    let m = prepare::write_dataset(&args.out, "sbm", "sbm", &data)?;
    write_json(&args.out.join("sbm.json"), &spec)?;
    log::info!("sbm: {} nodes, {} edges, {} blocks", m.nodes, m.edges, m.classes);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare { input, out, name } => prepare::prepare(&input, &out, name.as_deref()).map(drop),
        Command::Train(args) => {
            let cfg = experiment::resolve(&args)?;
            experiment::run_experiment(&cfg, &args.out, args.jobs, args.binary_embedding).map(drop)
        }
        Command::Sweep(args) => experiment::run_sweep(&args).map(drop),
        Command::Eval(args) => eval::run_eval(&args).map(drop),
        Command::Synth(args) => synth(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
