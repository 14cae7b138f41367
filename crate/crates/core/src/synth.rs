//! Synthetic phonocardiogram generator for end-to-end testing.
//!
//! Real auscultation data cannot ship with this repository, so the
//! integration tests run the full pipeline on generated recordings whose
//! ground truth is known exactly:
//!
//! * A beat is an S1 tone burst, a silent (or murmuring) systolic gap, an
//!   S2 tone burst, and a silent diastolic gap. Tone frequencies sit in the
//!   50 to 150 Hz band where fundamental heart sounds live; per-recording
//!   frequencies, amplitudes, and burst phases are drawn from a seeded RNG
//!   so recordings differ while staying reproducible.
//! * Abnormal recordings add a murmur: band-limited noise at 200 to 400 Hz
//!   confined to the systolic interval, mimicking the systolic murmurs the
//!   classifier is supposed to flag.
//! * Poor-quality recordings add broadband white noise over the whole
//!   signal.
//!
//! Every beat is aligned to the 20 ms envelope frame grid (50 Hz), and the
//! true S1 onset sample indices are returned next to the audio, so
//! segmentation accuracy can be measured against exact truth.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pcg_io::{Label, PcgRecording, Quality};

/// Envelope frame length in seconds; all beat timing snaps to this grid.
pub const GRID_SECONDS: f64 = 0.02;

/// Canonical synthesis rate, matching the pipeline's working rate.
pub const SYNTH_SAMPLE_RATE: u32 = 2000;

const S1_SECONDS: f64 = 0.12;
const SYSTOLE_SECONDS: f64 = 0.20;
const S2_SECONDS: f64 = 0.10;

/// One generated recording plus its ground truth.
#[derive(Debug, Clone)]
pub struct SynthRecording {
    pub recording: PcgRecording,
    /// Sample indices where each S1 burst begins.
    pub s1_onsets: Vec<usize>,
}

/// Everything that varies between generated recordings.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub id: String,
    pub subject_id: String,
    pub label: Label,
    pub quality: Quality,
    pub duration_seconds: f64,
    pub seed: u64,
}

fn grid_align(seconds: f64) -> f64 {
    (seconds / GRID_SECONDS).round() * GRID_SECONDS
}

/// Adds a Hann-windowed sine burst starting at `onset` seconds.
fn add_burst(
    samples: &mut [f32],
    rate: f64,
    onset: f64,
    duration: f64,
    freq: f64,
    amplitude: f64,
    phase: f64,
) {
    let start = (onset * rate).round() as usize;
    let len = (duration * rate).round() as usize;
    for i in 0..len {
        let Some(slot) = samples.get_mut(start + i) else { break };
        let t = i as f64 / rate;
        let window = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * t / duration).cos());
        *slot += (amplitude * window * (2.0 * std::f64::consts::PI * freq * t + phase).sin()) as f32;
    }
}

/// Band-limited murmur: a handful of random-phase sinusoids in the band,
/// Hann-windowed over the systolic interval.
fn add_murmur(
    samples: &mut [f32],
    rate: f64,
    onset: f64,
    duration: f64,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) {
    const COMPONENTS: usize = 8;
    let tones: Vec<(f64, f64)> = (0..COMPONENTS)
        .map(|_| (rng.random_range(200.0..400.0), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    let start = (onset * rate).round() as usize;
    let len = (duration * rate).round() as usize;
    let per_tone = amplitude / COMPONENTS as f64;
    for i in 0..len {
        let Some(slot) = samples.get_mut(start + i) else { break };
        let t = i as f64 / rate;
        let window = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * t / duration).cos());
        let mut v = 0.0;
        for &(f, p) in &tones {
            v += (2.0 * std::f64::consts::PI * f * t + p).sin();
        }
        *slot += (per_tone * window * v) as f32;
    }
}

/// Generates one recording per the spec. Deterministic in `spec.seed`.
pub fn synth_recording(spec: &SynthSpec) -> SynthRecording {
    assert!(spec.duration_seconds > 0.0, "duration must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rate = f64::from(SYNTH_SAMPLE_RATE);
    let n = (spec.duration_seconds * rate).round() as usize;
    let mut samples = vec![0.0f32; n];

    // per-recording voice: tone frequencies inside the 50-150 Hz band and a
    // grid-aligned beat period near 1 Hz (0.8 to 1.2 s in 20 ms steps)
    let s1_freq = rng.random_range(60.0..140.0);
    let s2_freq = rng.random_range(60.0..140.0);
    let period = grid_align(rng.random_range(0.80..=1.20));
    let s1_amp = rng.random_range(0.55..0.75);
    let s2_amp = rng.random_range(0.35..0.55);

    let mut s1_onsets = Vec::new();
    let mut t0 = 0.0;
    while t0 + S1_SECONDS <= spec.duration_seconds {
        s1_onsets.push((t0 * rate).round() as usize);
        let phase1 = rng.random_range(0.0..std::f64::consts::TAU);
        let phase2 = rng.random_range(0.0..std::f64::consts::TAU);
        add_burst(&mut samples, rate, t0, S1_SECONDS, s1_freq, s1_amp, phase1);
        let systole_start = t0 + S1_SECONDS;
        if spec.label == Label::Abnormal {
            add_murmur(&mut samples, rate, systole_start, SYSTOLE_SECONDS, 0.45, &mut rng);
        }
        add_burst(
            &mut samples,
            rate,
            systole_start + SYSTOLE_SECONDS,
            S2_SECONDS,
            s2_freq,
            s2_amp,
            phase2,
        );
        t0 = grid_align(t0 + period);
    }

    if spec.quality == Quality::Poor {
        for s in samples.iter_mut() {
            *s += rng.random_range(-0.04..0.04);
        }
    }

    for s in samples.iter_mut() {
        *s = s.clamp(-1.0, 1.0);
    }

    SynthRecording {
        recording: PcgRecording {
            id: spec.id.clone(),
            subject_id: spec.subject_id.clone(),
            samples,
            sample_rate: SYNTH_SAMPLE_RATE,
            label: spec.label,
            quality: spec.quality,
        },
        s1_onsets,
    }
}

/// Generates a labeled cohort: `n_subjects` subjects, `per_subject`
/// recordings each of `duration_seconds`. Even-indexed subjects are normal,
/// odd abnormal (disease is a property of the subject, so splits by subject
/// stay label-clean); roughly one recording in seven is marked poor quality.
pub fn synth_dataset(
    n_subjects: usize,
    per_subject: usize,
    duration_seconds: f64,
    seed: u64,
) -> Vec<SynthRecording> {
    let mut out = Vec::with_capacity(n_subjects * per_subject);
    for subject in 0..n_subjects {
        let label = if subject % 2 == 0 { Label::Normal } else { Label::Abnormal };
        for rec in 0..per_subject {
            let ordinal = subject * per_subject + rec;
            let quality = if ordinal % 7 == 3 { Quality::Poor } else { Quality::Good };
            out.push(synth_recording(&SynthSpec {
                id: format!("rec{ordinal:04}"),
                subject_id: format!("subj{subject:04}"),
                label,
                quality,
                duration_seconds,
                seed: seed ^ (ordinal as u64).wrapping_mul(0x9e3779b97f4a7c15),
            }));
        }
    }
    out
}
