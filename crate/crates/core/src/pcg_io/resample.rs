//! Sample-rate conversion to the canonical 2000 Hz analysis rate.
//!
//! Windowed-sinc interpolation with a Kaiser window. For downsampling the
//! kernel is widened and the cutoff lowered so the filter also acts as the
//! anti-alias stage.

use super::PcgError;

/// Kaiser window shape parameter; ~90 dB stopband.
const KAISER_BETA: f64 = 8.6;
/// Kernel half-width in output-side taps before scaling for decimation.
const BASE_HALF_WIDTH: usize = 32;
/// Transition-band headroom below Nyquist.
const CUTOFF_MARGIN: f64 = 0.95;

/// Zeroth-order modified Bessel function, by its power series.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-16 {
            break;
        }
    }
    sum
}

fn kaiser(offset: f64, half_width: f64) -> f64 {
    let t = offset / half_width;
    if t.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(KAISER_BETA * (1.0 - t * t).sqrt()) / bessel_i0(KAISER_BETA)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Resamples `samples` from `src_rate` to `tgt_rate`.
///
/// Output length is `round(n * tgt / src)`. Edge taps that fall outside the
/// signal are skipped and the kernel is renormalized over the taps that
/// remain, so constant signals pass through exactly.
pub fn resample(samples: &[f32], src_rate: u32, tgt_rate: u32) -> Result<Vec<f32>, PcgError> {
    if src_rate == 0 || tgt_rate == 0 {
        return Err(PcgError::Format("zero sample rate".into()));
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    if src_rate == tgt_rate {
        return Ok(samples.to_vec());
    }

    let n = samples.len() as u64;
    let src = src_rate as u64;
    let tgt = tgt_rate as u64;
    let out_len = ((n * tgt + src / 2) / src) as usize;
    if out_len == 0 {
        return Ok(Vec::new());
    }

    let ratio = src_rate as f64 / tgt_rate as f64;
    // When decimating, stretch the kernel so its passband shrinks with it.
    let scale = ratio.max(1.0);
    let half_width = (BASE_HALF_WIDTH as f64 * scale).ceil();
    let cutoff = 0.5 * (tgt_rate as f64 / src_rate as f64).min(1.0) * CUTOFF_MARGIN;

    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let center = i as f64 * ratio;
        let lo = (center - half_width).ceil().max(0.0) as usize;
        let hi = ((center + half_width).floor() as usize).min(samples.len() - 1);
        let mut acc = 0.0f64;
        let mut weight = 0.0f64;
        for (j, &s) in samples[lo..=hi].iter().enumerate() {
            let offset = lo as f64 + j as f64 - center;
            let w = 2.0 * cutoff * sinc(2.0 * cutoff * offset) * kaiser(offset, half_width);
            acc += w * s as f64;
            weight += w;
        }
        let v = if weight.abs() > 1e-12 { acc / weight } else { 0.0 };
        out.push(v.clamp(-1.0, 1.0) as f32);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_length_follows_rate_ratio() {
        let signal = vec![0.0f32; 8000];
        let out = resample(&signal, 4000, 2000).unwrap();
        assert_eq!(out.len(), 4000);
        let out = resample(&signal, 2000, 2000).unwrap();
        assert_eq!(out.len(), 8000);
        let out = resample(&signal, 3000, 2000).unwrap();
        assert_eq!(out.len(), 5333);
    }

    #[test]
    fn dc_level_is_preserved() {
        let signal = vec![0.5f32; 4000];
        let out = resample(&signal, 4000, 2000).unwrap();
        for &v in &out {
            assert!((v - 0.5).abs() < 1e-6, "got {v}");
        }
    }

    /// Frequency of the strongest bin of a naive DFT, in Hz.
    fn dominant_frequency(signal: &[f32], rate: u32) -> f64 {
        let n = signal.len();
        let mut best_k = 0;
        let mut best_mag = f64::NEG_INFINITY;
        for k in 1..n / 2 {
            let mut re = 0.0f64;
            let mut im = 0.0f64;
            for (j, &s) in signal.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * k as f64 * j as f64 / n as f64;
                re += s as f64 * angle.cos();
                im += s as f64 * angle.sin();
            }
            let mag = re * re + im * im;
            if mag > best_mag {
                best_mag = mag;
                best_k = k;
            }
        }
        best_k as f64 * rate as f64 / n as f64
    }

    #[test]
    fn sine_survives_decimation_at_the_same_frequency() {
        // 50 Hz tone, two seconds at 8 kHz; integer number of cycles both
        // before and after so the spectral peak is unsmeared.
        let src_rate = 8000u32;
        let signal: Vec<f32> = (0..16000)
            .map(|i| {
                let t = i as f64 / src_rate as f64;
                (0.8 * (2.0 * std::f64::consts::PI * 50.0 * t).sin()) as f32
            })
            .collect();
        let out = resample(&signal, src_rate, 2000).unwrap();
        assert_eq!(out.len(), 4000);
        let f = dominant_frequency(&out, 2000);
        assert!((f - 50.0).abs() < 0.51, "dominant frequency {f}");
        // Amplitude should be roughly intact mid-signal.
        let peak = out[1000..3000].iter().fold(0.0f32, |m, &v| m.max(v.abs()));
        assert!((peak - 0.8).abs() < 0.02, "peak {peak}");
    }

    #[test]
    fn upsampling_preserves_a_tone_too() {
        let src_rate = 1000u32;
        let signal: Vec<f32> = (0..2000)
            .map(|i| {
                let t = i as f64 / src_rate as f64;
                (0.5 * (2.0 * std::f64::consts::PI * 40.0 * t).sin()) as f32
            })
            .collect();
        let out = resample(&signal, src_rate, 2000).unwrap();
        assert_eq!(out.len(), 4000);
        let f = dominant_frequency(&out, 2000);
        assert!((f - 40.0).abs() < 0.51, "dominant frequency {f}");
    }

    #[test]
    fn empty_and_degenerate_inputs() {
        assert!(resample(&[], 4000, 2000).unwrap().is_empty());
        assert!(resample(&[0.1], 0, 2000).is_err());
        assert!(resample(&[0.1], 2000, 0).is_err());
    }

    #[test]
    fn output_stays_in_unit_range() {
        // Step edges ring; the clamp keeps samples legal for re-encoding.
        let mut signal = vec![1.0f32; 2000];
        signal.extend(vec![-1.0f32; 2000]);
        let out = resample(&signal, 4000, 2000).unwrap();
        for &v in &out {
            assert!((-1.0..=1.0).contains(&v));
        }
    }
}
