use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use echograph_cli::{config::RunConfig, pipeline, Pipeline, Stage};
use echograph_core::synth::SynthConfig;

#[derive(Parser)]
#[command(name = "echograph", version, about = "Cascade, k-core, and echo-chamber analytics over social platform dumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for this run's artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
}

impl StageArgs {
    fn pipeline(&self) -> anyhow::Result<Pipeline> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(Pipeline::new(config, self.out.clone()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Runs the whole pipeline (or one stage with --stage).
    Run {
        #[command(flatten)]
        args: StageArgs,
        /// Runs only this stage instead of the full pipeline.
        #[arg(long)]
        stage: Option<Stage>,
    },
    /// Validates the corpus and writes the dataset summary.
    IngestCheck(StageArgs),
    /// Buckets posts and users through the scorer ensemble.
    Score(StageArgs),
    /// Extracts cascades and writes metric and density exports.
    Cascades(StageArgs),
    /// Builds the interaction graph and its k-core profile.
    Cores(StageArgs),
    /// Detects echo chambers from content embeddings.
    Echo(StageArgs),
    /// Builds the chamber network, homogeneity scores, and backbone.
    Network(StageArgs),
    /// Computes the KS / Spearman / NMI report set.
    Stats {
        #[command(flatten)]
        args: StageArgs,
        /// Emits only the named KS report (e.g. volumes-by-user-bucket).
        #[arg(long)]
        ks: Option<String>,
    },
    /// Aggregates prior-stage artifacts into one report.
    Report(StageArgs),
    /// Generates a synthetic corpus bundle with planted ground truth.
    Synth {
        /// Output directory for the bundle.
        #[arg(long)]
        out: PathBuf,
        /// Generator config (JSON); defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the generator seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { args, stage } => {
            let pipeline = args.pipeline()?;
            match stage {
                Some(stage) => pipeline.run(stage),
                None => pipeline.run_all(),
            }
        }
        Command::IngestCheck(args) => args.pipeline()?.run(Stage::IngestCheck),
        Command::Score(args) => args.pipeline()?.run(Stage::Score),
        Command::Cascades(args) => args.pipeline()?.run(Stage::Cascades),
        Command::Cores(args) => args.pipeline()?.run(Stage::Cores),
        Command::Echo(args) => args.pipeline()?.run(Stage::Echo),
        Command::Network(args) => args.pipeline()?.run(Stage::Network),
        Command::Stats { args, ks } => {
            let mut pipeline = args.pipeline()?;
            pipeline.ks_filter = ks;
            pipeline.run(Stage::Stats)
        }
        Command::Report(args) => args.pipeline()?.run(Stage::Report),
        Command::Synth { out, config, seed } => {
            let mut synth_config = match config {
                Some(path) => {
                    let raw = std::fs::read_to_string(&path)?;
                    serde_json::from_str::<SynthConfig>(&raw)?
                }
                None => SynthConfig::default(),
            };
            if let Some(seed) = seed {
                synth_config.seed = seed;
            }
            pipeline::write_synth_bundle(&synth_config, &out)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
