use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "blowchoc",
    version,
    about = "Build, query and evaluate Bloom filters with block choices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a filter from a key stream and write it to a file.
    Build(BuildArgs),
    /// Look up every key of a stream; prints `key<TAB>0|1`.
    Query(QueryArgs),
    /// Estimate the false positive rate of a filter file.
    Fpr(FprArgs),
    /// Histogram of set bits per block of a filter file.
    Hist(HistArgs),
    /// Build and measure fresh filters over a grid of relative sizes.
    Sweep(SweepArgs),
    /// Analytic tables: maximum block load, overload FPR, bit collisions, sizes.
    Bounds(BoundsArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindArg {
    Standard,
    Blocked,
    Blowchoc,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostArg {
    Exp,
    Mix,
    La,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyArg {
    Random,
    Distinct,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    U64le,
    Text,
    Fasta,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long, value_enum, default_value = "blowchoc")]
    pub kind: KindArg,
    /// Bits set per key.
    #[arg(long)]
    pub k: u32,
    /// Candidate blocks per key (blowchoc only; default 2).
    #[arg(long)]
    pub choices: Option<u32>,
    /// Size relative to a standard Bloom filter with the same n and k.
    #[arg(long, default_value_t = 1.0)]
    pub relative_size: f64,
    #[arg(long, value_enum, default_value = "exp")]
    pub cost: CostArg,
    /// beta for exp (default: golden ratio), sigma for mix (default 1), mu for la (default 3.5).
    #[arg(long)]
    pub cost_param: Option<f64>,
    #[arg(long, value_enum, default_value = "random")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 512)]
    pub block_bits: u32,
    /// Number of shards (default: max(threads, 1)).
    #[arg(long)]
    pub shards: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 runs in the calling thread.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Args, Debug)]
pub struct KeyArgs {
    /// Key file, or `-` for standard input.
    #[arg(long)]
    pub keys: PathBuf,
    #[arg(long, value_enum, default_value = "u64le")]
    pub format: FormatArg,
    /// q-gram length for FASTA input.
    #[arg(long)]
    pub q: Option<u32>,
    /// Use forward-strand q-gram codes instead of canonical ones.
    #[arg(long)]
    pub no_canonical: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("size").required(true).args(["n", "size_bits"])))]
pub struct BuildArgs {
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Expected number of keys.
    #[arg(long)]
    pub n: Option<u64>,
    /// Total filter size in bits, rounded up to whole blocks.
    #[arg(long)]
    pub size_bits: Option<u64>,
    #[command(flatten)]
    pub keys: KeyArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    #[arg(long)]
    pub filter: PathBuf,
    #[command(flatten)]
    pub keys: KeyArgs,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Args, Debug)]
pub struct FprArgs {
    #[arg(long)]
    pub filter: PathBuf,
    /// Number of generated negative queries.
    #[arg(long, default_value_t = 10_000_000, conflicts_with = "negatives")]
    pub queries: u64,
    /// Seed of the generated negative keys (odd integers).
    #[arg(long, default_value_t = 1, conflicts_with = "negatives")]
    pub negative_seed: u64,
    /// Read negative keys from a file instead; they must not have been inserted.
    #[arg(long)]
    pub negatives: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "u64le")]
    pub format: FormatArg,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub no_canonical: bool,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Args, Debug)]
pub struct HistArgs {
    #[arg(long)]
    pub filter: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Keys inserted per filter.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    /// Negative queries per filter.
    #[arg(long, default_value_t = 10_000_000)]
    pub queries: u64,
    /// Comma-separated relative sizes (default 0.80, 0.85, ..., 1.50).
    #[arg(long, value_delimiter = ',')]
    pub rel_sizes: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
#[command(group(
    ArgGroup::new("table")
        .required(true)
        .args(["max_load", "overload", "collision", "size"])
))]
pub struct BoundsArgs {
    /// Largest block load keeping the local FPR at 2^-k / c.
    #[arg(long)]
    pub max_load: bool,
    /// FPR of a standard Bloom filter holding gamma times its capacity.
    #[arg(long)]
    pub overload: bool,
    /// Probability that k random bit addresses in a block collide.
    #[arg(long)]
    pub collision: bool,
    /// Filter dimensions for n keys.
    #[arg(long)]
    pub size: bool,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub choices: Option<u32>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub relative_size: f64,
    #[arg(long, default_value_t = 512)]
    pub block_bits: u32,
    #[arg(long, default_value_t = 1)]
    pub shards: u32,
}
