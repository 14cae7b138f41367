//! MFCC heat-map extraction: a 3-second segment becomes a 6×300 matrix of
//! Mel-frequency cepstral coefficients, one column per 10 ms analysis step.
//!
//! The chain is: overlapping Hamming windows → K-point DFT power spectrum →
//! triangular Mel filterbank → log energies → DCT, keeping coefficients
//! k = 1…6.

mod heatmap;
mod mfhm;

pub use heatmap::{standardize, MfccHeatMap, NormalizationStats};
pub use mfhm::{decode_heatmap, encode_heatmap, load_heatmap, save_heatmap};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::segmentation::Segment;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("invalid MFCC config: {0}")]
    Config(String),
    #[error("heat-map file: {0}")]
    HeatMapFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Extraction parameters. Defaults produce the 6×300 map for a 3 s segment
/// at 2000 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    /// Analysis window length ℓ in seconds.
    pub window_length: f64,
    /// Step Δ between window starts in seconds.
    pub step: f64,
    /// DFT length K; `None` picks the smallest power of two ≥ ℓ·ν.
    pub dft_length: Option<usize>,
    /// Number of triangular Mel filters J.
    pub filter_count: usize,
    /// DCT outputs kept, k = 1…kept_coefficients.
    pub kept_coefficients: usize,
    /// Filterbank frequency range [low, high] in Hz.
    pub freq_range: (f64, f64),
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            window_length: 0.025,
            step: 0.01,
            dft_length: None,
            filter_count: 26,
            kept_coefficients: 6,
            freq_range: (0.0, 1000.0),
        }
    }
}

impl MfccConfig {
    /// Samples per window at rate `nu`.
    pub fn window_samples(&self, nu: f64) -> usize {
        (self.window_length * nu).round() as usize
    }

    pub fn step_samples(&self, nu: f64) -> usize {
        (self.step * nu).round() as usize
    }

    /// Effective DFT length K.
    pub fn resolved_dft_length(&self, nu: f64) -> usize {
        self.dft_length
            .unwrap_or_else(|| self.window_samples(nu).next_power_of_two())
    }

    pub fn validate(&self, nu: f64) -> Result<(), FeatureError> {
        let n = self.window_samples(nu);
        if n == 0 || self.step_samples(nu) == 0 {
            return Err(FeatureError::Config("window and step must be positive".into()));
        }
        if self.step > self.window_length {
            return Err(FeatureError::Config("step must not exceed window length".into()));
        }
        if self.kept_coefficients == 0 || self.kept_coefficients > self.filter_count {
            return Err(FeatureError::Config(
                "kept_coefficients must lie in 1..=filter_count".into(),
            ));
        }
        if self.resolved_dft_length(nu) < n {
            return Err(FeatureError::Config("DFT length must be >= window samples".into()));
        }
        let (lo, hi) = self.freq_range;
        if !(0.0 <= lo && lo < hi && hi <= nu / 2.0) {
            return Err(FeatureError::Config(format!(
                "freq_range [{lo}, {hi}] must sit within [0, {}]",
                nu / 2.0
            )));
        }
        Ok(())
    }
}

/// Splits a segment into overlapping windows of ℓ·ν samples every Δ·ν
/// samples. Window count is ⌊T/Δ⌋; windows reaching past the end are
/// zero-padded.
pub fn frame_windows(samples: &[f32], cfg: &MfccConfig, nu: f64) -> Vec<Vec<f64>> {
    let win = cfg.window_samples(nu);
    let step = cfg.step_samples(nu);
    let duration = samples.len() as f64 / nu;
    let count = (duration / cfg.step).floor() as usize;
    let mut windows = Vec::with_capacity(count);
    for i in 0..count {
        let start = i * step;
        let mut w = vec![0.0f64; win];
        for (j, slot) in w.iter_mut().enumerate() {
            if let Some(&v) = samples.get(start + j) {
                *slot = v as f64;
            }
        }
        windows.push(w);
    }
    windows
}

fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Mel scale, M(f) = 1125·ln(1 + f/700).
pub fn hz_to_mel(f: f64) -> f64 {
    1125.0 * (1.0 + f / 700.0).ln()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * ((m / 1125.0).exp() - 1.0)
}

/// Hamming-windowed K-point power spectrum, P(k) = |S(k)|²/N for k = 1…K
/// stored at index k−1 (so the wrapped k = K entry equals the DC term).
pub fn dft_power(window: &[f64], cfg: &MfccConfig, nu: f64) -> Vec<f64> {
    let k_len = cfg.resolved_dft_length(nu);
    let planner_fft = FftPlanner::new().plan_fft_forward(k_len);
    dft_power_with(window, k_len, &hamming(window.len()), planner_fft.as_ref())
}

fn dft_power_with(window: &[f64], k_len: usize, taper: &[f64], fft: &dyn Fft<f64>) -> Vec<f64> {
    let n = window.len();
    let mut buf = vec![Complex::new(0.0, 0.0); k_len];
    for i in 0..n {
        buf[i].re = window[i] * taper[i];
    }
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    (1..=k_len)
        .map(|k| {
            let c = buf[k % k_len];
            (c.re * c.re + c.im * c.im) * scale
        })
        .collect()
}

/// J triangular filters over the K power bins. Peaks sit at J Mel-uniform
/// points strictly between the range edges; each filter rises from the
/// previous peak (or the low edge) and falls to the next (or the high edge),
/// with peak weight 1.
pub fn build_mel_filterbank(cfg: &MfccConfig, nu: f64) -> Result<Vec<Vec<f64>>, FeatureError> {
    cfg.validate(nu)?;
    let j_count = cfg.filter_count;
    let k_len = cfg.resolved_dft_length(nu);
    let (lo, hi) = cfg.freq_range;
    let mel_lo = hz_to_mel(lo);
    let mel_hi = hz_to_mel(hi);
    // j_count + 2 anchors: edges plus the peak of every filter.
    let anchors: Vec<f64> = (0..j_count + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (j_count + 1) as f64))
        .collect();

    let mut filters = vec![vec![0.0f64; k_len]; j_count];
    for (j, filter) in filters.iter_mut().enumerate() {
        let (left, center, right) = (anchors[j], anchors[j + 1], anchors[j + 2]);
        for k in 1..=k_len {
            // Bin k's frequency; the wrapped k = K entry is DC at 0 Hz.
            let f = (k % k_len) as f64 * nu / k_len as f64;
            let w = if f >= left && f <= center && center > left {
                (f - left) / (center - left)
            } else if f > center && f <= right && right > center {
                (right - f) / (right - center)
            } else {
                0.0
            };
            filter[k - 1] = w;
        }
    }
    Ok(filters)
}

/// Log filterbank energies with an additive floor inside the log.
pub fn log_filter_energies(power: &[f64], filters: &[Vec<f64>]) -> Vec<f64> {
    const FLOOR: f64 = 1e-12;
    filters
        .iter()
        .map(|f| {
            let e: f64 = f.iter().zip(power).map(|(&w, &p)| w * p).sum();
            (e + FLOOR).ln()
        })
        .collect()
}

/// DCT over the J log energies, c_k = Σ_j e_j·cos[k(2j−1)π/(2J)] for
/// k = 1…kept.
pub fn dct_coefficients(energies: &[f64], kept: usize) -> Vec<f64> {
    let j_count = energies.len();
    (1..=kept)
        .map(|k| {
            energies
                .iter()
                .enumerate()
                .map(|(j, &e)| {
                    let angle = k as f64 * (2.0 * (j + 1) as f64 - 1.0) * std::f64::consts::PI
                        / (2.0 * j_count as f64);
                    e * angle.cos()
                })
                .sum()
        })
        .collect()
}

/// Reusable extraction state: FFT plan, taper, filterbank, and DCT table.
pub struct MfccExtractor {
    cfg: MfccConfig,
    nu: f64,
    taper: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filters: Vec<Vec<f64>>,
    /// dct[k][j] = cos[(k+1)(2(j+1)−1)π/(2J)].
    dct: Vec<Vec<f64>>,
}

impl MfccExtractor {
    pub fn new(cfg: MfccConfig, nu: f64) -> Result<Self, FeatureError> {
        cfg.validate(nu)?;
        let n = cfg.window_samples(nu);
        let k_len = cfg.resolved_dft_length(nu);
        let filters = build_mel_filterbank(&cfg, nu)?;
        let j_count = cfg.filter_count;
        let dct = (1..=cfg.kept_coefficients)
            .map(|k| {
                (1..=j_count)
                    .map(|j| {
                        (k as f64 * (2.0 * j as f64 - 1.0) * std::f64::consts::PI
                            / (2.0 * j_count as f64))
                            .cos()
                    })
                    .collect()
            })
            .collect();
        Ok(MfccExtractor {
            taper: hamming(n),
            fft: FftPlanner::new().plan_fft_forward(k_len),
            cfg,
            nu,
            filters,
            dct,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    /// Full chain for one segment.
    pub fn heatmap(&self, segment: &Segment) -> MfccHeatMap {
        let windows = frame_windows(&segment.samples, &self.cfg, self.nu);
        let rows = self.cfg.kept_coefficients;
        let cols = windows.len();
        let mut values = vec![0.0f64; rows * cols];
        let k_len = self.cfg.resolved_dft_length(self.nu);
        for (i, w) in windows.iter().enumerate() {
            let power = dft_power_with(w, k_len, &self.taper, self.fft.as_ref());
            let energies = log_filter_energies(&power, &self.filters);
            for k in 0..rows {
                let c: f64 = self.dct[k]
                    .iter()
                    .zip(&energies)
                    .map(|(&cos, &e)| e * cos)
                    .sum();
                values[k * cols + i] = c;
            }
        }
        MfccHeatMap {
            values,
            rows,
            cols,
            source_id: segment.source_id.clone(),
            start_sample: segment.start_sample,
            label: segment.label,
            quality: segment.quality,
        }
    }
}

/// One-shot convenience over [`MfccExtractor`].
pub fn segment_to_heatmap(
    segment: &Segment,
    cfg: &MfccConfig,
    nu: f64,
) -> Result<MfccHeatMap, FeatureError> {
    Ok(MfccExtractor::new(cfg.clone(), nu)?.heatmap(segment))
}
