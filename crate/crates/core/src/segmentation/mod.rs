//! Heart-state segmentation: locate S1 onsets by decoding the cyclic
//! S1 → Systole → S2 → Diastole sequence with a duration-constrained Viterbi
//! pass over per-frame emission likelihoods, then cut fixed-length segments
//! anchored at each S1.

mod annotations;
mod emissions;
mod envelope;
mod extract;
mod hsmm;

pub use annotations::{parse_annotations, AnnotationRow};
pub use emissions::{
    fit_default_emissions, BandPowerEmissions, EmissionModel, LogisticEmissions,
};
pub use envelope::{compute_envelope_features, ENVELOPE_CHANNELS};
pub use extract::extract_segments;
pub use hsmm::{hsmm_decode, path_score, DurationPrior, StateSequence, LIKELIHOOD_FLOOR};

use crate::pcg_io::{Label, Quality};

/// Decoding frame rate in Hz; 20 ms frames keep S1 several frames wide.
pub const FRAME_RATE: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeartState {
    S1,
    Systole,
    S2,
    Diastole,
}

impl HeartState {
    pub const ALL: [HeartState; 4] = [
        HeartState::S1,
        HeartState::Systole,
        HeartState::S2,
        HeartState::Diastole,
    ];

    pub fn index(self) -> usize {
        match self {
            HeartState::S1 => 0,
            HeartState::Systole => 1,
            HeartState::S2 => 2,
            HeartState::Diastole => 3,
        }
    }

    /// The single legal successor in the cardiac cycle.
    pub fn successor(self) -> HeartState {
        match self {
            HeartState::S1 => HeartState::Systole,
            HeartState::Systole => HeartState::S2,
            HeartState::S2 => HeartState::Diastole,
            HeartState::Diastole => HeartState::S1,
        }
    }

    pub fn predecessor(self) -> HeartState {
        match self {
            HeartState::S1 => HeartState::Diastole,
            HeartState::Systole => HeartState::S1,
            HeartState::S2 => HeartState::Systole,
            HeartState::Diastole => HeartState::S2,
        }
    }
}

/// Fixed-length waveform slice anchored at an S1 onset.
#[derive(Debug, Clone)]
pub struct Segment {
    pub source_id: String,
    pub start_sample: usize,
    pub samples: Vec<f32>,
    pub label: Label,
    pub quality: Quality,
}

#[derive(Debug, thiserror::Error)]
pub enum SegmentationError {
    #[error("recording shorter than one frame")]
    TooShort,
    #[error("recording sample rate {0} Hz is not the canonical rate")]
    NotCanonicalRate(u32),
    #[error("invalid likelihoods: {0}")]
    InvalidLikelihood(String),
    #[error("no legal state path under the duration bounds")]
    DecodeError,
    #[error("emission fit failed: {0}")]
    FitError(String),
    #[error("no S1 onsets detected")]
    SegmentationEmpty,
    #[error("annotation file: {0}")]
    Annotation(String),
}
