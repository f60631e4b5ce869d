//! Command-line surface: subcommands and their flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{FormatArg, IndexKindArg, SimilarityArg};

/// Navigable-small-world maximum inner product search: build graph indexes,
/// compute exact answers, sweep recall/latency curves, and measure norm bias.
#[derive(Debug, Parser)]
#[command(
    name = "ipnsw",
    version,
    about,
    after_help = "Relative output paths are joined under $IPNSW_OUT_DIR when it is set."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic Gaussian dataset with a chosen norm profile.
    Synth(SynthArgs),
    /// Build a graph index over a dataset and serialize it.
    Build(BuildArgs),
    /// Compute (or reuse cached) exact top-k ids by linear scan.
    Groundtruth(GroundtruthArgs),
    /// Sweep query-time pool widths and emit a recall/evaluations/latency CSV.
    Bench(BenchArgs),
    /// Norm-bias and probability diagnostics.
    Analyze {
        #[command(subcommand)]
        command: AnalyzeCommand,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of vectors.
    #[arg(long)]
    pub n: usize,
    /// Vector dimension.
    #[arg(long)]
    pub dim: usize,
    /// Norm model: `iid`, `lognormal:<sigma>`, or `scaled-top:<fraction>:<factor>`.
    #[arg(long, default_value = "iid")]
    pub model: String,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file format.
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub format: FormatArg,
    /// Output dataset path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Dataset file path.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Dataset file format.
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub format: FormatArg,
    /// Index kind to build (`brute` has no index and is rejected).
    #[arg(long, value_enum)]
    pub kind: IndexKindArg,
    /// Out-degree bound of the inner-product graph (M).
    #[arg(long, default_value_t = 16)]
    pub max_degree: u32,
    /// Construction pool width (l_build).
    #[arg(long, default_value_t = 100)]
    pub build_pool: usize,
    /// Angular graph out-degree bound (two-graph index only).
    #[arg(long, default_value_t = 10)]
    pub angular_degree: u32,
    /// Angular stage pool width (two-graph index only).
    #[arg(long, default_value_t = 10)]
    pub angular_pool: usize,
    /// Number of angular anchors seeding the refinement stage.
    #[arg(long, default_value_t = 10)]
    pub seed_count: usize,
    /// Output index path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GroundtruthArgs {
    /// Dataset file path.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Dataset file format.
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub format: FormatArg,
    /// Query file path.
    #[arg(long)]
    pub queries: PathBuf,
    /// Query file format.
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub query_format: FormatArg,
    /// Number of exact answers per query.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Similarity measure to rank by.
    #[arg(long, value_enum, default_value_t = SimilarityArg::InnerProduct)]
    pub kind: SimilarityArg,
    /// Output ground-truth path (a `.meta.json` sidecar is written next to it).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON config file describing the run; individual flags override fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset file path.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Dataset file format.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Query file path (exclusive with --synth-queries).
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Query file format.
    #[arg(long, value_enum)]
    pub query_format: Option<FormatArg>,
    /// Synthetic query norm model (exclusive with --queries; needs --num-queries).
    #[arg(long)]
    pub synth_queries: Option<String>,
    /// Engine kind: ipnsw, ipnswplus, or brute.
    #[arg(long, value_enum)]
    pub kind: Option<IndexKindArg>,
    /// Prebuilt index file; omitted means build in-process.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Out-degree bound of the inner-product graph (M).
    #[arg(long)]
    pub max_degree: Option<u32>,
    /// Construction pool width (l_build).
    #[arg(long)]
    pub build_pool: Option<usize>,
    /// Angular graph out-degree bound.
    #[arg(long)]
    pub angular_degree: Option<u32>,
    /// Angular stage pool width at query time.
    #[arg(long)]
    pub angular_pool: Option<usize>,
    /// Number of angular anchors seeding the refinement stage.
    #[arg(long)]
    pub seed_count: Option<usize>,
    /// Comma-separated query-time pool widths, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,
    /// Result size per query.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of queries (truncates a file, sizes a synthetic set).
    #[arg(long)]
    pub num_queries: Option<usize>,
    /// Seed for synthetic queries.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Precomputed ground-truth file with its meta sidecar.
    #[arg(long)]
    pub groundtruth: Option<PathBuf>,
    /// Answer queries on a thread pool (latency columns only; recall and
    /// evaluation columns are identical to the single-threaded run).
    #[arg(long)]
    pub parallel: bool,
    /// Also seed the refinement pool with the anchors themselves.
    #[arg(long)]
    pub include_anchors: bool,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Share of pooled exact top-k results per norm group.
    Occupancy(OccupancyArgs),
    /// Mean in-degree per norm group of a built index's inner-product graph.
    Indegree(IndegreeArgs),
    /// Share of score evaluations per norm group over instrumented queries.
    Computation(ComputationArgs),
    /// Top-group occupancy as the dataset is subsampled at several rates.
    Cardinality(CardinalityArgs),
    /// Win probability of a larger-variance competitor, per variance ratio.
    Theorem1(Theorem1Args),
    /// Conditional-score closed form vs regression simulation.
    Theorem2(Theorem2Args),
}

#[derive(Debug, Args)]
pub struct OccupancyArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub format: FormatArg,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub query_format: FormatArg,
    /// Result size per query.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Norm group width in rank percent.
    #[arg(long, default_value_t = 5)]
    pub group_width: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IndegreeArgs {
    /// Built index file.
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub format: FormatArg,
    /// Norm group width in rank percent.
    #[arg(long, default_value_t = 5)]
    pub group_width: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ComputationArgs {
    /// Built index file.
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub format: FormatArg,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub query_format: FormatArg,
    /// Query-time pool width.
    #[arg(long, default_value_t = 50)]
    pub pool: usize,
    /// Result size per query.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Number of queries to run (default: all in the file).
    #[arg(long)]
    pub num_queries: Option<usize>,
    /// Norm group width in rank percent.
    #[arg(long, default_value_t = 5)]
    pub group_width: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CardinalityArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub format: FormatArg,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Fvecs)]
    pub query_format: FormatArg,
    /// Comma-separated sampling rates in (0, 1].
    #[arg(long, value_delimiter = ',')]
    pub rates: Vec<f64>,
    /// Result size per query.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Norm group width in rank percent.
    #[arg(long, default_value_t = 5)]
    pub group_width: u32,
    /// Seed of the shared sampling permutation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Theorem1Args {
    /// Comma-separated variance ratios, each at least 1.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Theorem2Args {
    /// Norm of the competitor vector x.
    #[arg(long, default_value_t = 2.0)]
    pub x_norm: f64,
    /// Norm of the conditioned vector y.
    #[arg(long, default_value_t = 1.0)]
    pub y_norm: f64,
    /// Angular similarity between x and y, in [-1, 1].
    #[arg(long, default_value_t = 0.8)]
    pub beta: f64,
    /// Conditioning value for the score of y.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Ambient dimension of the simulation.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Number of random vectors in the regression.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
