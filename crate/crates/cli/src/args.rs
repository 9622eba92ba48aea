use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "cpcert",
    version,
    about = "Extremality certificates for unital CP maps"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, global = true, env = "CPCERT_TOL_RANK", default_value_t = 1e-9)]
    pub tol_rank: f64,
    /// Absolute cutoff for residual checks.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_residual: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extremality among unital CP maps; a directory input certifies every `.json` file in it.
    Certify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Extremality among unital CP maps preserving a state.
    CertifyPhi {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        state: PathBuf,
    },
    /// Minimal Kraus family and index.
    Reduce {
        #[arg(long)]
        input: PathBuf,
    },
    /// Radon–Nikodym derivative of `--eta` with respect to `--input`.
    Rn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        eta: PathBuf,
        /// Domination constant.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// State adjoint channel.
    Adjoint {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        state: PathBuf,
    },
    /// Channel to coupling state.
    Couple {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        state: PathBuf,
    },
    /// Coupling state to channel.
    Uncouple {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Also certify extremality of the induced channel.
        #[arg(long)]
        certify: bool,
    },
    /// Seeded random channel or state.
    Random {
        /// Blocks as `DIMxMULT` pairs, e.g. `2x1,1x2`.
        #[arg(long)]
        blocks: String,
        #[arg(long, default_value_t = 1)]
        kraus: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generate a channel preserving this state.
        #[arg(long)]
        state: Option<PathBuf>,
        /// With `--state`, mix state-commuting unitaries instead of scaling a Gaussian family.
        #[arg(long, requires = "state")]
        mixture: bool,
        /// Emit a random faithful state instead of a channel.
        #[arg(long, conflicts_with_all = ["state", "mixture"])]
        faithful_state: bool,
    },
    /// KMS defect table over pairs of algebra basis elements.
    KmsCheck {
        /// Channel file whose algebra is used.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        state: PathBuf,
    },
}
