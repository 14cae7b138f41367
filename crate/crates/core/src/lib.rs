//! Automated heart-sound classification.
//!
//! This crate implements a complete phonocardiogram (PCG) analysis pipeline:
//!
//! 1. **Ingest** — RIFF/WAVE PCM loading, manifest joining, and windowed-sinc
//!    resampling to the canonical 2000 Hz processing rate ([`pcg_io`]).
//! 2. **Segmentation** — a duration-constrained four-state Viterbi decoder
//!    (S1 → systole → S2 → diastole) locates S1 onsets and extracts
//!    overlapping 3-second segments anchored at each heartbeat
//!    ([`segmentation`]).
//! 3. **Features** — each segment becomes a 6×300 MFCC heat map: Hamming
//!    windows, DFT power spectra, a 26-filter Mel filterbank, log energies,
//!    and a DCT keeping the first six coefficients ([`features`]).
//! 4. **Classification** — a from-scratch CNN (two conv/max-pool stages, two
//!    fully connected layers, softmax output) with full backpropagation
//!    ([`nn`]), trained with a sensitivity–specificity trade-off loss
//!    ([`loss`]) and Adam ([`trainer`]).
//! 5. **Scoring** — quality-weighted challenge sensitivity/specificity and
//!    the (Se+Sp)/2 overall score ([`scoring`]).
//!
//! Per-segment predictions are stitched into recording-level decisions by
//! probability averaging. A deterministic synthetic-recording generator
//! ([`synth`]) supports end-to-end evaluation without clinical data.
//!
//! All pipeline stages are pure functions of their inputs plus explicit
//! seeds; training runs are reproducible bit-for-bit on one machine.

pub mod features;
pub mod loss;
pub mod nn;
pub mod pcg_io;
pub mod scoring;
pub mod segmentation;
pub mod synth;
pub mod tensor;
pub mod trainer;

pub use pcg_io::{Label, PcgRecording, Quality, CANONICAL_SAMPLE_RATE};
pub use tensor::{Scalar, Tensor};
