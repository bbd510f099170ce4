//! Command-line surface. Codes load from `.alist` files or circulant shift
//! grids; patterns are 1-based comma-separated indices.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "faid", version, about = "Finite-alphabet iterative decoders for LDPC codes: run them, search their failures, train better ones")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Decode one error pattern with one lookup table
    Decode(DecodeArgs),
    /// Measure frame and bit error rates on the binary symmetric channel
    Simulate(SimulateArgs),
    /// Search for low-weight patterns a decoder sequence fails to correct
    Enumerate(EnumerateArgs),
    /// Train channel weights on a set of failure patterns
    Train(TrainArgs),
    /// Grow a decoder schedule round by round from a first decoder
    Design(DesignArgs),
    /// Lower-bound the error floor from a census of uncorrectable patterns
    Bound(BoundArgs),
    /// Expand a coefficient file into its lookup table
    DeriveLut(DeriveLutArgs),
    /// Recover channel weights from a lookup table
    LutToCoeffs(LutToCoeffsArgs),
    /// Expand a circulant shift grid into an alist parity-check file
    BuildQc(BuildQcArgs),
    /// Summarize a code: sizes, degrees, rank, girth, short cycles
    Info(InfoArgs),
}

#[derive(Args)]
pub struct DecodeArgs {
    /// Code file (.alist or shift grid)
    #[arg(long)]
    pub code: PathBuf,
    /// Lookup table file
    #[arg(long)]
    pub lut: PathBuf,
    /// Flipped positions, 1-based and comma-separated; `-` for none
    #[arg(long)]
    pub pattern: String,
    /// Iteration budget
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Print a JSON object instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Code file (.alist or shift grid)
    #[arg(long)]
    pub code: PathBuf,
    /// Schedule manifest of decoders to try in order
    #[arg(long, conflicts_with = "lut")]
    pub schedule: Option<PathBuf>,
    /// Single lookup table (shortcut for a one-decoder schedule)
    #[arg(long)]
    pub lut: Option<PathBuf>,
    /// Iteration budget for --lut
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Crossover probabilities, comma-separated; several values make a curve
    #[arg(long, default_value = "0.01")]
    pub alpha: String,
    #[arg(long, default_value_t = 100_000)]
    pub max_frames: u64,
    /// Stop a point early after this many frame errors
    #[arg(long, default_value_t = u64::MAX)]
    pub max_frame_errors: u64,
    /// Base seed; frame i uses stream i, so results are thread-count independent
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replay a pattern file as the channel instead of sampling noise
    #[arg(long, conflicts_with = "alpha")]
    pub inject: Option<PathBuf>,
    /// Also write the measured curve as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print JSON lines instead of a table
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct EnumerateArgs {
    /// Code file (.alist or shift grid)
    #[arg(long)]
    pub code: PathBuf,
    /// Lookup table; repeat for a sequence tried in order
    #[arg(long, required = true)]
    pub lut: Vec<PathBuf>,
    /// Iteration budget, once per --lut
    #[arg(long, required = true)]
    pub max_iters: Vec<usize>,
    /// Pattern weight to search
    #[arg(long)]
    pub weight: usize,
    /// Neighborhood radius grown around each short cycle
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    /// Search the whole code instead of expanded short-cycle regions
    #[arg(long)]
    pub exhaustive: bool,
    /// Stop after this many failures
    #[arg(long)]
    pub max_patterns: Option<usize>,
    /// Rewrite this file with the partial set after each finished region
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Decoder id recorded in pattern file headers (default: first table stem)
    #[arg(long)]
    pub id: Option<String>,
    /// Write the failures as a pattern file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Code file (.alist or shift grid)
    #[arg(long)]
    pub code: PathBuf,
    /// Starting channel weights
    #[arg(long)]
    pub init: PathBuf,
    /// Failure patterns to train on
    #[arg(long)]
    pub patterns: PathBuf,
    /// Trainer settings (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Where to write the trained weights
    #[arg(long)]
    pub out_coeffs: PathBuf,
    /// Where to write the lookup table of the trained weights
    #[arg(long)]
    pub out_lut: PathBuf,
    /// Optional per-weight learning-rate multipliers (same file format)
    #[arg(long)]
    pub rates: Option<PathBuf>,
    /// Write the epoch history as CSV
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Args)]
pub struct DesignArgs {
    /// Code file (.alist or shift grid)
    #[arg(long)]
    pub code: PathBuf,
    /// Lookup table of the first decoder
    #[arg(long)]
    pub d1: PathBuf,
    /// Iteration budget of the first decoder
    #[arg(long, default_value_t = 100)]
    pub d1_iters: usize,
    /// Patterns the first decoder fails to correct
    #[arg(long)]
    pub failures: PathBuf,
    /// Training rounds to attempt
    #[arg(long)]
    pub rounds: usize,
    /// Trainer settings (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Starting weights, once per round; omit to resample from the last decoder
    #[arg(long)]
    pub init: Vec<PathBuf>,
    /// Seed for resampled starting weights (round r draws with seed + r)
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Directory for tables, manifest, report, histories and residual
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BoundArgs {
    /// Census file: block length and per-weight failure counts
    #[arg(long)]
    pub counts: PathBuf,
    /// Crossover probabilities, comma-separated
    #[arg(long)]
    pub alpha: Option<String>,
    /// Log-spaced grid `lo:hi:points`
    #[arg(long)]
    pub grid: Option<String>,
    /// Also write the curve as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print JSON lines instead of a table
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct DeriveLutArgs {
    /// Channel-weight file
    #[arg(long)]
    pub coeffs: PathBuf,
    /// Where to write the lookup table
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct LutToCoeffsArgs {
    /// Lookup table file
    #[arg(long)]
    pub lut: PathBuf,
    /// Where to write the channel weights
    #[arg(long)]
    pub out: PathBuf,
    /// How to pick a weight inside each feasible interval
    #[arg(long, value_enum, default_value_t = PickerArg::Midpoint)]
    pub picker: PickerArg,
    /// Seed for the uniform picker
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PickerArg {
    /// Center of each feasible interval
    Midpoint,
    /// Seeded uniform draw inside each feasible interval
    Uniform,
}

#[derive(Args)]
pub struct BuildQcArgs {
    /// Shift grid file: `rows cols p` header, then shifts (`-` for a zero block)
    #[arg(long)]
    pub shifts: PathBuf,
    /// Where to write the alist file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct InfoArgs {
    /// Code file (.alist or shift grid)
    #[arg(long)]
    pub code: PathBuf,
    /// Also count the two shortest cycle lengths (can be slow on large codes)
    #[arg(long)]
    pub cycles: bool,
    /// Print a JSON object instead of text
    #[arg(long)]
    pub json: bool,
}
