//! `auscult`: batch front end for the heart-sound screening pipeline.
//!
//! Subcommands walk the full path from raw WAVs plus a labeled manifest to
//! a challenge score: `ingest` validates a dataset, `segment` finds S1
//! onsets, `featurize` cuts segments into MFCC heat-map files, `render`
//! paints one as a PPM image, `train` fits the network, `predict` emits a
//! predictions CSV, `score` grades one, and `evaluate` runs predict and
//! score in a single step.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, bad config keys),
//! 2 data error (unreadable or invalid input files).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub mod config;

mod commands;

/// Failures split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: the invocation itself is wrong.
    Usage(String),
    /// Exit 2: inputs could not be read or failed validation.
    Data(String),
}

#[derive(Parser)]
#[command(
    name = "auscult",
    version,
    about = "Phonocardiogram screening: segmentation, MFCC features, CNN training, scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every dataset-reading subcommand.
#[derive(Args, Debug, Default)]
struct DataArgs {
    /// Manifest CSV (record_id,path,label,quality,subject_id)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory the manifest's paths are relative to
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Optional key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

/// MFCC extraction overrides; defaults produce 6x300 maps from 3 s segments.
#[derive(Args, Debug, Default)]
struct MfccArgs {
    /// Analysis window length in seconds
    #[arg(long)]
    window_length: Option<f64>,
    /// Window step in seconds
    #[arg(long)]
    step: Option<f64>,
    /// DFT length; defaults to the next power of two above the window
    #[arg(long)]
    dft_length: Option<usize>,
    /// Number of triangular mel filters
    #[arg(long)]
    filter_count: Option<usize>,
    /// DCT coefficients kept per window
    #[arg(long)]
    kept_coefficients: Option<usize>,
    /// Filterbank lower edge in Hz
    #[arg(long)]
    freq_low: Option<f64>,
    /// Filterbank upper edge in Hz
    #[arg(long)]
    freq_high: Option<f64>,
    /// Segment length cut at each S1 onset, in seconds
    #[arg(long)]
    segment_seconds: Option<f64>,
}

/// Training hyperparameter overrides.
#[derive(Args, Debug, Default)]
struct HyperArgs {
    #[arg(long)]
    learning_rate: Option<f64>,
    /// L2 penalty coefficient
    #[arg(long)]
    lambda: Option<f64>,
    /// Dropout keep probability on the fully connected layers
    #[arg(long)]
    keep_prob: Option<f64>,
    #[arg(long)]
    batch_size: Option<u32>,
    #[arg(long)]
    max_epochs: Option<u32>,
    /// Epochs without validation improvement before stopping
    #[arg(long)]
    patience: Option<u32>,
    /// RNG seed for init, shuffling, dropout, and the subject split
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate WAVs against the manifest and print a dataset summary
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        /// Also write the summary to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode S1 onsets and emit a record_id,onset_sample CSV
    Segment {
        #[command(flatten)]
        data: DataArgs,
        /// Output CSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cut S1-anchored segments and write one .mfhm heat map per segment
    Featurize {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        mfcc: MfccArgs,
        /// Output directory for .mfhm files
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paint one heat-map file as a binary PPM image
    Render {
        /// Input .mfhm file
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output .ppm file
        #[arg(long)]
        out: Option<PathBuf>,
        /// Integer nearest-neighbor upscale factor
        #[arg(long)]
        scale: Option<u32>,
        /// Optional key=value config file; flags override its entries
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train the classifier and write checkpoints plus a training log
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        mfcc: MfccArgs,
        #[command(flatten)]
        hyper: HyperArgs,
        /// Output directory for best.ckpt, last.ckpt, train_log.csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify recordings and emit a record_id,predicted CSV
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        mfcc: MfccArgs,
        /// Trained checkpoint to load
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Output CSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict a labeled set and score it in one step
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        mfcc: MfccArgs,
        /// Trained checkpoint to load
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Also write the predictions CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a predictions CSV, or combine explicit --se/--sp values
    Score {
        /// Sensitivity in [0,1]; use together with --sp
        #[arg(long)]
        se: Option<f64>,
        /// Specificity in [0,1]; use together with --se
        #[arg(long)]
        sp: Option<f64>,
        /// Predictions CSV to grade against the manifest
        #[arg(long)]
        input: Option<PathBuf>,
        /// Manifest CSV carrying the true labels and quality flags
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Optional key=value config file; flags override its entries
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Parses `args` and runs the selected subcommand, returning the process
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}
