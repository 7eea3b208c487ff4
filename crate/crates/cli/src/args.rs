use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use remoteop_core::Protocol;

#[derive(Parser, Debug)]
#[command(
    name = "remoteop",
    version,
    about = "Simulate and verify remote implementations of restricted quantum operations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a protocol and score every branch against the direct product.
    Run(RunArgs),
    /// Check the intermediate joint states of the hybrid protocol.
    Verify(VerifyArgs),
    /// List every block-permutation split of a unitary matrix.
    Classify(ClassifyArgs),
    /// Predict entanglement and classical-bit cost without simulating.
    Resources(ResourcesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Hpv,
    Wang,
    Hybrid,
    Bqst,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Hpv => Protocol::Hpv,
            ProtocolArg::Wang => Protocol::Wang,
            ProtocolArg::Hybrid => Protocol::Hybrid,
            ProtocolArg::Bqst => Protocol::Bqst,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct OpArgs {
    /// Leading (permutation) qubits N.
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Trailing (block) qubits M.
    #[arg(long = "m")]
    pub m: Option<usize>,
    /// HPV form: 0 diagonal, 1 antidiagonal. Used with --random-op.
    #[arg(long = "d", value_parser = clap::value_parser!(u8).range(0..=1))]
    pub d: Option<u8>,
    /// 1-indexed permutation, e.g. `2,1,4,3`. Needs --blocks-file.
    #[arg(long, value_delimiter = ',')]
    pub perm: Option<Vec<usize>>,
    /// JSON array of block matrices for --perm.
    #[arg(long)]
    pub blocks_file: Option<PathBuf>,
    /// Operator JSON file.
    #[arg(long)]
    pub op_file: Option<PathBuf>,
    /// Inline operator JSON.
    #[arg(long)]
    pub op_json: Option<String>,
    /// Draw the operator at random; needs a seed.
    #[arg(long)]
    pub random_op: bool,
    #[arg(long)]
    pub op_seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    /// State JSON file.
    #[arg(long)]
    pub state_file: Option<PathBuf>,
    /// Computational basis state by amplitude index (0 = |0...0>).
    #[arg(long)]
    pub basis: Option<usize>,
    /// Haar-random input state; needs a seed.
    #[arg(long)]
    pub random_state: bool,
    #[arg(long)]
    pub state_seed: Option<u64>,
    /// Seed for the nearest preceding --random-op, --random-state or
    /// --sample (or the next one if none precedes). Repeatable.
    #[arg(long, action = ArgAction::Append)]
    pub seed: Vec<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    #[command(flatten)]
    pub op: OpArgs,
    #[command(flatten)]
    pub state: StateArgs,
    /// Enumerate every branch (default).
    #[arg(long, conflicts_with = "sample")]
    pub enumerate: bool,
    /// Draw this many branches instead of enumerating; needs a seed.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub sample_seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the branch table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Acceptance tolerance on 1 - fidelity.
    #[arg(long, env = "REMOTEOP_TOL", default_value_t = remoteop_core::FIDELITY_TOL)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub op: OpArgs,
    #[command(flatten)]
    pub state: StateArgs,
    /// Check only this branch id; all branches otherwise.
    #[arg(long)]
    pub branch: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ClassifyArgs {
    /// Matrix JSON file.
    pub matrix_file: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ResourcesArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    #[arg(long = "n", default_value_t = 0)]
    pub n: usize,
    #[arg(long = "m", default_value_t = 0)]
    pub m: usize,
}
