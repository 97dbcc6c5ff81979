use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gwdc", version, about = "Sparse-approximation audio codec")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a WAV file.
    Encode(EncodeArgs),
    /// Decode a .gwdc file to WAV.
    Decode(DecodeArgs),
    /// Compare a test WAV against an original.
    Metrics(MetricsArgs),
    /// Write the per-block sparsity summary of a .gwdc file.
    Summary(SummaryArgs),
    /// Print the header fields of a .gwdc file.
    DumpHeader(DumpHeaderArgs),
}

#[derive(Debug, Args)]
#[command(group(
    ArgGroup::new("mode")
        .required(true)
        .args(["target_snr", "target_mean_snr", "rho_db", "rho"])
))]
pub struct EncodeArgs {
    pub input: PathBuf,
    pub output: PathBuf,

    #[arg(long, default_value_t = 2048)]
    pub block_size: usize,
    /// trig_size = redundancy * block_size
    #[arg(long, default_value_t = 2)]
    pub redundancy: usize,
    /// JSON list of `{"label": .., "samples": [..]}` pulse prototypes.
    #[arg(long)]
    pub prototypes: Option<PathBuf>,

    /// Search for the coarsest encoding whose decoded SNR meets this (dB).
    #[arg(long)]
    pub target_snr: Option<f64>,
    /// Same, matching the mean of per-block snr values.
    #[arg(long)]
    pub target_mean_snr: Option<f64>,
    /// Accepted overshoot above the target (dB).
    #[arg(long, default_value_t = 0.5)]
    pub tolerance: f64,

    /// Single pass: stop each block at this block snr (dB).
    #[arg(long, conflicts_with = "rho")]
    pub rho_db: Option<f64>,
    /// Single pass: stop each block once the residual norm is below this.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Quantization step for a single pass; the finest admissible by default.
    #[arg(long, conflicts_with_all = ["target_snr", "target_mean_snr"])]
    pub delta: Option<f64>,

    #[arg(long, env = "GWDC_WORKERS")]
    pub workers: Option<usize>,
    /// Write per-block snr values here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// PCM width of the written WAV: 16, 24 or 32.
    #[arg(long, default_value_t = 32)]
    pub bit_depth: u16,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub original: PathBuf,
    pub test: PathBuf,
    #[arg(long, default_value_t = 2048)]
    pub block_size: usize,
    /// Undo a time shift and an affine gain before measuring.
    #[arg(long)]
    pub align: bool,
    /// Size of the compressed file, for the compression ratio.
    #[arg(long)]
    pub compressed: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DumpHeaderArgs {
    pub input: PathBuf,
}
