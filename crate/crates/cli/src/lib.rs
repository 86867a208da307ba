//! The `naimark` command-line tool.

pub mod commands;
pub mod format;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "naimark",
    version,
    about = "Dilate observable families to commuting projectors and check the result"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that an operator file holds a POVM (PSD elements summing to I).
    Validate {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Regularize and dilate a family, then check the projector invariants.
    Dilate {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dilation: DilationArgs,
    },
    /// Trace, Born and joint-distribution checks for a family.
    Verify {
        file: PathBuf,
        /// State used for the Born and distribution checks (default I/m).
        #[arg(long)]
        state: Option<PathBuf>,
        /// Observables for the trace-preservation check (default: the family).
        #[arg(long)]
        observables: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dilation: DilationArgs,
    },
    /// Draw outcome counts of the dilated projective family.
    Sample {
        file: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(short = 'n', default_value_t = 100_000)]
        n: u64,
        /// Write the counts file here.
        #[arg(long)]
        counts: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dilation: DilationArgs,
    },
    /// Merge two POVMs, by half-sum or by double dilation.
    Merge {
        p: PathBuf,
        q: PathBuf,
        #[arg(long, value_enum, default_value_t = MergeMode::Halfsum)]
        mode: MergeMode,
        /// State for the probability checks (default I/m).
        #[arg(long)]
        state: Option<PathBuf>,
        /// Write the half-sum POVM here.
        #[arg(long)]
        merged: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dilation: DilationArgs,
    },
    /// Estimate a state from outcome counts.
    Estimate {
        file: PathBuf,
        counts: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Em)]
        method: MethodArg,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        /// Compare the estimate with this state.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Write the estimated state here.
        #[arg(long)]
        estimate: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dilation: DilationArgs,
    },
    /// Run the tetrahedral worked example end to end.
    Demo {
        #[arg(short = 'n', default_value_t = 100_000)]
        n: u64,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dilation: DilationArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Override the tolerance of every bounded check of the command.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write the machine-readable report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DilationArgs {
    /// Regularization margin.
    #[arg(long, default_value_t = 0.5)]
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MergeMode {
    Halfsum,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Linear,
    Em,
}
