//! Emission models mapping envelope features to per-state likelihoods.
//!
//! The decoder only needs four non-negative numbers per frame, so the model
//! is a trait: a trained multinomial logistic regression when frame-level
//! annotations exist, and a band-power heuristic when they do not.

use super::{HeartState, SegmentationError, ENVELOPE_CHANNELS};

/// Per-frame feature vector → per-state likelihoods, all non-negative.
/// Zeros are legal; the decoder floors before taking logs.
pub trait EmissionModel {
    fn likelihoods(&self, features: &[f64; ENVELOPE_CHANNELS]) -> [f64; 4];
}

/// Annotation-free heuristic: the 25–150 Hz band power separates the sound
/// states (S1, S2) from the quiet intervals, and the duration prior then
/// distinguishes S1 from S2 and systole from diastole.
#[derive(Debug, Clone)]
pub struct BandPowerEmissions {
    /// Robust full-scale for the band-power channel.
    scale: f64,
}

impl BandPowerEmissions {
    /// Calibrates the loudness scale from a recording's own frames using the
    /// 95th percentile of band power.
    pub fn fit(features: &[[f64; ENVELOPE_CHANNELS]]) -> Self {
        let mut powers: Vec<f64> = features.iter().map(|f| f[2]).collect();
        powers.sort_by(|a, b| a.total_cmp(b));
        let scale = if powers.is_empty() {
            1.0
        } else {
            let idx = (powers.len() - 1) * 95 / 100;
            let p95 = powers[idx];
            if p95 > 0.0 {
                p95
            } else {
                1.0
            }
        };
        BandPowerEmissions { scale }
    }
}

impl EmissionModel for BandPowerEmissions {
    fn likelihoods(&self, features: &[f64; ENVELOPE_CHANNELS]) -> [f64; 4] {
        let loud = (features[2] / self.scale).clamp(0.0, 1.0);
        let quiet = 1.0 - loud;
        // S1 and S2 share the loudness cue, systole and diastole the rest.
        [
            0.02 + loud,
            0.02 + quiet,
            0.02 + loud,
            0.02 + quiet,
        ]
    }
}

/// Multinomial logistic regression over the three envelope channels.
#[derive(Debug, Clone)]
pub struct LogisticEmissions {
    /// weights[s] = per-class row over standardized features.
    weights: [[f64; ENVELOPE_CHANNELS]; 4],
    bias: [f64; 4],
    mean: [f64; ENVELOPE_CHANNELS],
    std: [f64; ENVELOPE_CHANNELS],
}

impl LogisticEmissions {
    fn class_probabilities(&self, features: &[f64; ENVELOPE_CHANNELS]) -> [f64; 4] {
        let mut z = [0.0f64; ENVELOPE_CHANNELS];
        for c in 0..ENVELOPE_CHANNELS {
            z[c] = (features[c] - self.mean[c]) / self.std[c];
        }
        let mut logits = self.bias;
        for s in 0..4 {
            for c in 0..ENVELOPE_CHANNELS {
                logits[s] += self.weights[s][c] * z[c];
            }
        }
        softmax4(logits)
    }
}

impl EmissionModel for LogisticEmissions {
    fn likelihoods(&self, features: &[f64; ENVELOPE_CHANNELS]) -> [f64; 4] {
        self.class_probabilities(features)
    }
}

fn softmax4(logits: [f64; 4]) -> [f64; 4] {
    let m = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut out = [0.0f64; 4];
    let mut sum = 0.0;
    for s in 0..4 {
        out[s] = (logits[s] - m).exp();
        sum += out[s];
    }
    for v in out.iter_mut() {
        *v /= sum;
    }
    out
}

/// Trains the logistic model by full-batch gradient descent.
///
/// Fails if any state is absent from the labels or the fit cannot beat the
/// majority-class rate on its own training data.
pub fn fit_default_emissions(
    features: &[[f64; ENVELOPE_CHANNELS]],
    labels: &[HeartState],
) -> Result<LogisticEmissions, SegmentationError> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(SegmentationError::FitError(
            "features and labels must be non-empty and aligned".into(),
        ));
    }
    let mut counts = [0usize; 4];
    for &l in labels {
        counts[l.index()] += 1;
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(SegmentationError::FitError(
            "every heart state must appear in the labels".into(),
        ));
    }

    let n = features.len() as f64;
    let mut mean = [0.0f64; ENVELOPE_CHANNELS];
    let mut std = [0.0f64; ENVELOPE_CHANNELS];
    for f in features {
        for c in 0..ENVELOPE_CHANNELS {
            mean[c] += f[c];
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    for f in features {
        for c in 0..ENVELOPE_CHANNELS {
            std[c] += (f[c] - mean[c]) * (f[c] - mean[c]);
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n).sqrt().max(1e-6);
    }
    let standardized: Vec<[f64; ENVELOPE_CHANNELS]> = features
        .iter()
        .map(|f| {
            let mut z = [0.0; ENVELOPE_CHANNELS];
            for c in 0..ENVELOPE_CHANNELS {
                z[c] = (f[c] - mean[c]) / std[c];
            }
            z
        })
        .collect();

    let mut model = LogisticEmissions {
        weights: [[0.0; ENVELOPE_CHANNELS]; 4],
        bias: [0.0; 4],
        mean,
        std,
    };
    let lr = 0.5;
    for _ in 0..600 {
        let mut gw = [[0.0f64; ENVELOPE_CHANNELS]; 4];
        let mut gb = [0.0f64; 4];
        for (z, &label) in standardized.iter().zip(labels) {
            let mut logits = model.bias;
            for s in 0..4 {
                for c in 0..ENVELOPE_CHANNELS {
                    logits[s] += model.weights[s][c] * z[c];
                }
            }
            let p = softmax4(logits);
            for s in 0..4 {
                let err = p[s] - if s == label.index() { 1.0 } else { 0.0 };
                gb[s] += err;
                for c in 0..ENVELOPE_CHANNELS {
                    gw[s][c] += err * z[c];
                }
            }
        }
        for s in 0..4 {
            model.bias[s] -= lr * gb[s] / n;
            for c in 0..ENVELOPE_CHANNELS {
                model.weights[s][c] -= lr * gw[s][c] / n;
            }
        }
    }

    let correct = features
        .iter()
        .zip(labels)
        .filter(|(f, &l)| {
            let p = model.class_probabilities(f);
            let pred = (0..4).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
            pred == l.index()
        })
        .count();
    let majority = *counts.iter().max().unwrap();
    if correct <= majority {
        return Err(SegmentationError::FitError(format!(
            "training accuracy {}/{} does not beat the majority rate {}/{}",
            correct,
            labels.len(),
            majority,
            labels.len()
        )));
    }
    Ok(model)
}
