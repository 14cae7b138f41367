//! Phonocardiogram ingest: WAV parsing, manifest joining, resampling.
//!
//! Recordings are mono RIFF/WAVE files with 16-bit integer PCM samples; any
//! other container layout, channel count, or encoding is rejected. Loaded
//! amplitudes are scaled to [-1, 1] and every operation in this module keeps
//! them there. Labels and signal-quality flags arrive separately through a
//! CSV manifest and are attached by [`join_manifest`].

mod manifest;
mod resample;
mod wav;

pub use manifest::{
    join_manifest, parse_manifest, DatasetManifest, JoinReport, ManifestEntry,
};
pub use resample::resample;
pub use wav::{encode_wav, load_wav, parse_wav, write_wav};

use std::io;

use thiserror::Error;

/// Processing sample rate every recording is resampled to before
/// segmentation: 2000 Hz, the conventional PCG rate, which makes the default
/// 25 ms MFCC window exactly 50 samples long.
pub const CANONICAL_SAMPLE_RATE: u32 = 2000;

/// Ground-truth class of a recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Normal,
    Abnormal,
    Unknown,
}

impl Label {
    /// Class index used by the network (0 = normal, 1 = abnormal).
    pub fn class_index(self) -> Option<usize> {
        match self {
            Label::Normal => Some(0),
            Label::Abnormal => Some(1),
            Label::Unknown => None,
        }
    }
}

/// Signal-quality flag assigned by the dataset curators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quality {
    Good,
    Poor,
    Unknown,
}

/// A mono heart-sound recording with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PcgRecording {
    pub id: String,
    pub subject_id: String,
    /// Amplitudes in [-1, 1].
    pub samples: Vec<f32>,
    /// Sample rate in Hz, always positive.
    pub sample_rate: u32,
    pub label: Label,
    pub quality: Quality,
}

impl PcgRecording {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Errors raised while loading or joining recordings.
#[derive(Debug, Error)]
pub enum PcgError {
    /// Malformed RIFF/WAVE container.
    #[error("wav format error: {0}")]
    Format(String),
    /// More than one channel.
    #[error("unsupported channel count: {0}")]
    UnsupportedChannels(u16),
    /// Not 16-bit integer PCM.
    #[error("unsupported encoding: format tag {format}, {bits} bits per sample")]
    UnsupportedEncoding { format: u16, bits: u16 },
    /// Bad manifest contents.
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}
