//! Fixed-length segment extraction anchored at decoded S1 onsets.

use super::{Segment, SegmentationError, StateSequence};
use crate::pcg_io::PcgRecording;

/// Cuts one `duration`-second segment per S1 onset that has enough signal
/// after it. If no onset does, the first onset still yields a segment,
/// zero-padded to full length, so every segmentable recording produces at
/// least one map.
pub fn extract_segments(
    rec: &PcgRecording,
    seq: &StateSequence,
    duration: f64,
) -> Result<Vec<Segment>, SegmentationError> {
    let onsets = seq.s1_onset_samples(rec.sample_rate);
    if onsets.is_empty() {
        return Err(SegmentationError::SegmentationEmpty);
    }
    let seg_len = (duration * rec.sample_rate as f64).round() as usize;
    let n = rec.samples.len();

    let make = |start: usize| Segment {
        source_id: rec.id.clone(),
        start_sample: start,
        samples: rec.samples[start..(start + seg_len).min(n)].to_vec(),
        label: rec.label,
        quality: rec.quality,
    };

    let mut segments: Vec<Segment> = onsets
        .iter()
        .filter(|&&s| s + seg_len <= n)
        .map(|&s| make(s))
        .collect();

    if segments.is_empty() {
        let first = onsets[0].min(n.saturating_sub(1));
        let mut seg = make(first);
        seg.samples.resize(seg_len, 0.0);
        segments.push(seg);
    }
    Ok(segments)
}
