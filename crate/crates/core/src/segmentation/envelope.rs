//! Per-frame envelope features that drive the emission models.
//!
//! Each non-overlapping frame yields three channels: a rectified amplitude
//! envelope, its first difference, and power in the 25–150 Hz band where S1
//! and S2 concentrate their energy. Frames never straddle signal boundaries,
//! so an onset quantized to the frame grid stays crisp.

use super::SegmentationError;
use crate::pcg_io::{PcgRecording, CANONICAL_SAMPLE_RATE};

pub const ENVELOPE_CHANNELS: usize = 3;

const BAND_LOW_HZ: f64 = 25.0;
const BAND_HIGH_HZ: f64 = 150.0;

/// Computes the three-channel feature matrix at `frame_rate` frames/second.
///
/// The recording must be at the canonical rate and span at least one frame.
/// Only complete frames are emitted; a trailing partial frame is dropped.
pub fn compute_envelope_features(
    rec: &PcgRecording,
    frame_rate: f64,
) -> Result<Vec<[f64; ENVELOPE_CHANNELS]>, SegmentationError> {
    if rec.sample_rate != CANONICAL_SAMPLE_RATE {
        return Err(SegmentationError::NotCanonicalRate(rec.sample_rate));
    }
    let frame_len = (rec.sample_rate as f64 / frame_rate).round() as usize;
    if frame_len == 0 || rec.samples.len() < frame_len {
        return Err(SegmentationError::TooShort);
    }
    let n_frames = rec.samples.len() / frame_len;

    // DFT bins of one frame that fall inside the 25-150 Hz band.
    let bin_hz = rec.sample_rate as f64 / frame_len as f64;
    let band_bins: Vec<usize> = (1..=frame_len / 2)
        .filter(|&k| {
            let f = k as f64 * bin_hz;
            (BAND_LOW_HZ..=BAND_HIGH_HZ).contains(&f)
        })
        .collect();

    let mut features = Vec::with_capacity(n_frames);
    let mut prev_env = 0.0f64;
    for t in 0..n_frames {
        let frame = &rec.samples[t * frame_len..(t + 1) * frame_len];
        let env = frame.iter().map(|&v| v.abs() as f64).sum::<f64>() / frame_len as f64;
        let diff = if t == 0 { 0.0 } else { env - prev_env };
        prev_env = env;

        let mut band = 0.0f64;
        for &k in &band_bins {
            let mut re = 0.0f64;
            let mut im = 0.0f64;
            for (n, &v) in frame.iter().enumerate() {
                let angle =
                    -2.0 * std::f64::consts::PI * k as f64 * n as f64 / frame_len as f64;
                re += v as f64 * angle.cos();
                im += v as f64 * angle.sin();
            }
            band += (re * re + im * im) / frame_len as f64;
        }
        features.push([env, diff, band]);
    }
    Ok(features)
}
