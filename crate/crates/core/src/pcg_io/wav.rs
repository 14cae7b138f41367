//! RIFF/WAVE reader and writer for mono 16-bit PCM.
//!
//! The parser walks the chunk list defensively: every length is bounds
//! checked against the buffer, odd chunk sizes honour the RIFF pad byte, and
//! unknown chunks are skipped. It never panics on arbitrary bytes, which the
//! `wav_parse` fuzz target exercises.

use std::fs;
use std::path::Path;

use super::{Label, PcgError, PcgRecording, Quality};

const FORMAT_PCM: u16 = 1;

/// Divisor that maps 16-bit sample values onto [-1, 1): v -> v / 32768.
const I16_SCALE: f32 = 32768.0;

fn read_u16(bytes: &[u8], at: usize) -> Option<u16> {
    Some(u16::from_le_bytes(bytes.get(at..at + 2)?.try_into().ok()?))
}

fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    Some(u32::from_le_bytes(bytes.get(at..at + 4)?.try_into().ok()?))
}

/// Parsed PCM payload before manifest metadata is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct WavAudio {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

/// Parses a mono 16-bit PCM RIFF/WAVE buffer.
///
/// Amplitudes are scaled by 1/32768 so the full i16 range maps into
/// [-1, 1). Multi-channel files fail with `UnsupportedChannels`, non-PCM or
/// non-16-bit encodings with `UnsupportedEncoding`, and any structural
/// problem with `Format`.
pub fn parse_wav(bytes: &[u8]) -> Result<WavAudio, PcgError> {
    if bytes.len() < 12 {
        return Err(PcgError::Format("file shorter than RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(PcgError::Format("missing RIFF magic".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(PcgError::Format("missing WAVE form type".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;

    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4)
            .ok_or_else(|| PcgError::Format("truncated chunk header".into()))?
            as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| PcgError::Format("chunk size overflow".into()))?;
        if body_end > bytes.len() {
            return Err(PcgError::Format(format!(
                "chunk {:?} overruns file",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(PcgError::Format("fmt chunk shorter than 16 bytes".into()));
                }
                let format = read_u16(body, 0).unwrap();
                let channels = read_u16(body, 2).unwrap();
                let rate = read_u32(body, 4).unwrap();
                let bits = read_u16(body, 14).unwrap();
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => {
                data = Some(body);
            }
            _ => {}
        }
        // Chunks are word aligned; odd sizes carry a pad byte.
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| PcgError::Format("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| PcgError::Format("no data chunk".into()))?;

    if channels != 1 {
        return Err(PcgError::UnsupportedChannels(channels));
    }
    if format != FORMAT_PCM || bits != 16 {
        return Err(PcgError::UnsupportedEncoding { format, bits });
    }
    if rate == 0 {
        return Err(PcgError::Format("zero sample rate".into()));
    }
    if data.len() < 2 {
        return Err(PcgError::Format("empty data chunk".into()));
    }

    let samples: Vec<f32> = data
        .chunks_exact(2)
        .map(|pair| f32::from(i16::from_le_bytes([pair[0], pair[1]])) / I16_SCALE)
        .collect();

    Ok(WavAudio {
        samples,
        sample_rate: rate,
    })
}

/// Loads a WAV file into a recording; the id defaults to the file stem and
/// label/quality stay `Unknown` until a manifest join fills them in.
pub fn load_wav(path: &Path) -> Result<PcgRecording, PcgError> {
    let bytes = fs::read(path)?;
    let audio = parse_wav(&bytes)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(PcgRecording {
        id,
        subject_id: String::new(),
        samples: audio.samples,
        sample_rate: audio.sample_rate,
        label: Label::Unknown,
        quality: Quality::Unknown,
    })
}

/// Encodes samples as a mono 16-bit PCM RIFF/WAVE buffer.
///
/// Quantization rounds `x * 32768` to the nearest integer and clamps to the
/// i16 range, so `load -> write -> load` reproduces samples bit-exactly.
pub fn encode_wav(samples: &[f32], sample_rate: u32) -> Vec<u8> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // channels
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        let v = (f64::from(s) * f64::from(I16_SCALE)).round();
        let v = v.clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_wav(path: &Path, rec: &PcgRecording) -> Result<(), PcgError> {
    fs::write(path, encode_wav(&rec.samples, rec.sample_rate))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wav_with(format: u16, channels: u16, rate: u32, bits: u16, payload: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + payload.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&format.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        out.extend_from_slice(&(rate * 2).to_le_bytes());
        out.extend_from_slice(&2u16.to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn header_rate_is_used() {
        let audio = parse_wav(&wav_with(1, 1, 2000, 16, &[0, 0, 1, 0])).unwrap();
        assert_eq!(audio.sample_rate, 2000);
        assert_eq!(audio.samples.len(), 2);
    }

    #[test]
    fn positive_full_scale_sample() {
        let audio = parse_wav(&wav_with(1, 1, 2000, 16, &32767i16.to_le_bytes())).unwrap();
        assert!((audio.samples[0] - 32767.0 / 32768.0).abs() < 1e-9);
    }

    #[test]
    fn stereo_is_rejected() {
        let err = parse_wav(&wav_with(1, 2, 2000, 16, &[0, 0, 0, 0])).unwrap_err();
        assert!(matches!(err, PcgError::UnsupportedChannels(2)));
    }

    #[test]
    fn float_encoding_is_rejected() {
        let err = parse_wav(&wav_with(3, 1, 2000, 32, &[0; 8])).unwrap_err();
        assert!(matches!(
            err,
            PcgError::UnsupportedEncoding { format: 3, bits: 32 }
        ));
    }

    #[test]
    fn malformed_header_is_rejected() {
        assert!(matches!(
            parse_wav(b"RIFFxxxxNOPE"),
            Err(PcgError::Format(_))
        ));
        assert!(matches!(parse_wav(b"RI"), Err(PcgError::Format(_))));
    }

    #[test]
    fn chunk_overrun_is_rejected() {
        let mut bytes = wav_with(1, 1, 2000, 16, &[0, 0]);
        let at = bytes.len() - 6; // data chunk size field
        bytes[at..at + 4].copy_from_slice(&1000u32.to_le_bytes());
        assert!(matches!(parse_wav(&bytes), Err(PcgError::Format(_))));
    }

    #[test]
    fn load_write_load_round_trip_is_bit_exact() {
        let payload: Vec<u8> = [-32768i16, -1, 0, 1, 12345, 32767]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let first = parse_wav(&wav_with(1, 1, 2000, 16, &payload)).unwrap();
        let second = parse_wav(&encode_wav(&first.samples, first.sample_rate)).unwrap();
        assert_eq!(first, second);
        assert!(first.samples.iter().all(|s| (-1.0..=1.0).contains(s)));
    }

    proptest! {
        #[test]
        fn parsed_samples_stay_in_unit_range(raw in proptest::collection::vec(any::<i16>(), 1..256)) {
            let payload: Vec<u8> = raw.iter().flat_map(|v| v.to_le_bytes()).collect();
            let audio = parse_wav(&wav_with(1, 1, 4000, 16, &payload)).unwrap();
            prop_assert!(audio.samples.iter().all(|s| (-1.0..=1.0).contains(s)));
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
            let _ = parse_wav(&bytes);
        }
    }
}
