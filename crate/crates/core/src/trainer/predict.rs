//! Recording-level inference: segment, featurize, classify each segment,
//! and stitch the per-segment probabilities into one decision.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::{standardize, FeatureError, MfccConfig, MfccExtractor};
use crate::nn::{network_forward, Mode, NetworkParams, NnError};
use crate::pcg_io::{resample, Label, PcgError, PcgRecording, CANONICAL_SAMPLE_RATE};
use crate::segmentation::{
    compute_envelope_features, extract_segments, hsmm_decode, BandPowerEmissions, DurationPrior,
    EmissionModel, SegmentationError, FRAME_RATE,
};
use crate::tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum PredictError {
    #[error(transparent)]
    Pcg(#[from] PcgError),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("recording {0} produced no segment probabilities")]
    NoSegments(String),
}

#[derive(Debug, thiserror::Error)]
#[error("cannot stitch an empty probability list")]
pub struct StitchError;

/// The pipeline pieces that sit in front of the network.
#[derive(Debug, Clone)]
pub struct PredictConfig {
    pub prior: DurationPrior,
    pub mfcc: MfccConfig,
    /// Segment length in seconds cut at each S1 onset.
    pub segment_seconds: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            prior: DurationPrior::default(),
            mfcc: MfccConfig::default(),
            segment_seconds: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingPrediction {
    pub record_id: String,
    /// (normal, abnormal) per segment, in onset order.
    pub segment_probabilities: Vec<[f64; 2]>,
    pub averaged: [f64; 2],
    pub label: Label,
}

/// Arithmetic mean per class, argmax label, tie broken toward normal.
pub fn stitch_prediction(
    record_id: &str,
    segment_probabilities: &[[f64; 2]],
) -> Result<RecordingPrediction, StitchError> {
    if segment_probabilities.is_empty() {
        return Err(StitchError);
    }
    let n = segment_probabilities.len() as f64;
    let mut averaged = [0.0f64; 2];
    for p in segment_probabilities {
        averaged[0] += p[0];
        averaged[1] += p[1];
    }
    averaged[0] /= n;
    averaged[1] /= n;
    let label = if averaged[1] > averaged[0] { Label::Abnormal } else { Label::Normal };
    Ok(RecordingPrediction {
        record_id: record_id.to_string(),
        segment_probabilities: segment_probabilities.to_vec(),
        averaged,
        label,
    })
}

/// Runs the full pipeline on one recording with a trained network:
/// resample to 2000 Hz if needed, locate S1 onsets, cut segments, build
/// standardized heat maps, classify each in Eval mode, and average.
pub fn predict_recording(
    rec: &PcgRecording,
    params: &NetworkParams<f32>,
    cfg: &PredictConfig,
) -> Result<RecordingPrediction, PredictError> {
    let canonical: PcgRecording = if rec.sample_rate == CANONICAL_SAMPLE_RATE {
        rec.clone()
    } else {
        PcgRecording {
            samples: resample(&rec.samples, rec.sample_rate, CANONICAL_SAMPLE_RATE)?,
            sample_rate: CANONICAL_SAMPLE_RATE,
            ..rec.clone()
        }
    };

    let envelope = compute_envelope_features(&canonical, FRAME_RATE)?;
    let emissions = BandPowerEmissions::fit(&envelope);
    let likelihoods: Vec<[f64; 4]> =
        envelope.iter().map(|f| emissions.likelihoods(f)).collect();
    let sequence = hsmm_decode(&likelihoods, &cfg.prior, FRAME_RATE)?;
    let segments = extract_segments(&canonical, &sequence, cfg.segment_seconds)?;

    let extractor = MfccExtractor::new(cfg.mfcc.clone(), f64::from(CANONICAL_SAMPLE_RATE))?;
    let maps: Vec<_> = segments.iter().map(|s| extractor.heatmap(s)).collect();
    let (maps, _) = standardize(&maps, Some(&params.norm_stats));

    let mut rng = ChaCha8Rng::seed_from_u64(0); // Eval mode never consumes it
    let mut probs = Vec::with_capacity(maps.len());
    for m in &maps {
        let data: Vec<f32> = m.values.iter().map(|&v| v as f32).collect();
        let input = Tensor::from_vec(&[1, m.rows, m.cols], data);
        let (p, _) = network_forward(&input, params, Mode::Eval, &mut rng)?;
        probs.push([f64::from(p[0]), f64::from(p[1])]);
    }
    stitch_prediction(&canonical.id, &probs)
        .map_err(|_| PredictError::NoSegments(canonical.id.clone()))
}
