use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "randkol",
    version,
    about = "Generate and analyse sequences directed by arbitrary directing sequences",
    after_help = "Source descriptors:\n  periodic:<digits>                               e.g. periodic:122\n  classic:<a>,<b>                                 e.g. classic:1,2\n  iid:p=<float>,a=<int>,b=<int>\n  markov:p=<float>,a=<int>,b=<int>[,start=<int>]\n  selfref\n\nExit codes: 0 success, 1 usage error, 2 domain error or failed check, 3 resource limit or I/O error."
)]
pub struct Cli {
    /// Worker threads for Monte Carlo and enumeration (results do not depend on it)
    #[arg(long, global = true, env = "RANDKOL_THREADS", hide_env_values = true)]
    pub threads: Option<usize>,

    /// Print a JSON summary instead of plain text
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a prefix of the directed sequence
    Generate(GenerateArgs),
    /// Letter-density trace of one realization, or Monte Carlo over many
    Density(DensityArgs),
    /// Exact P(X_n = lo): closed form and enumeration oracle
    Exact(ExactArgs),
    /// Sizes of the classes S_{n,k} of directing tuples
    Snk(SnkArgs),
    /// Correlation E(X~_m X~_n) of centred letters under the i.i.d. law
    Correlate(CorrelateArgs),
    /// Self-referential construction: densities and trace
    Selfref(SelfrefArgs),
    /// Run the built-in invariant checks
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Source descriptor
    #[arg(long)]
    pub spec: String,
    /// Number of letters to emit
    #[arg(long)]
    pub length: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print (letter,length) runs
    #[arg(long, conflicts_with = "letters")]
    pub runs: bool,
    /// Print the letters (default)
    #[arg(long)]
    pub letters: bool,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub spec: String,
    /// Letters per realization
    #[arg(long)]
    pub length: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path
    #[arg(long)]
    pub csv: PathBuf,
    /// Comma-separated 1-indexed checkpoints (default: 2^10, 2^11, ..., length)
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Iid,
    Markov,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub p: f64,
    /// Two letters lo,hi
    #[arg(long, default_value = "1,2")]
    pub alphabet: String,
    /// 1-indexed position
    #[arg(long)]
    pub n: u64,
    /// Require the enumeration oracle (fails above n = 24)
    #[arg(long)]
    pub oracle: bool,
    /// Start letter of the Markov chain (default: lo)
    #[arg(long)]
    pub start: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SnkArgs {
    #[arg(long)]
    pub n: usize,
    /// List every tuple with its class
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub n: u64,
    /// Require the enumeration oracle (fails above n = 24)
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct SelfrefArgs {
    /// Number of construction steps n
    #[arg(long)]
    pub length: u64,
    /// Output CSV path (density of 1 in x_1..x_n)
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Smaller problem sizes
    #[arg(long)]
    pub fast: bool,
}
