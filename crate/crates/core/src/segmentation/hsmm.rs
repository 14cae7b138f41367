//! Duration-constrained Viterbi decoding over the four cyclic heart states.
//!
//! A path is a sequence of complete state runs. Every run, including the
//! first and last, obeys the per-state duration bounds, and consecutive runs
//! follow the fixed cycle S1 → Systole → S2 → Diastole → S1. Each run scores
//! a truncated-Gaussian duration term plus its per-frame emission
//! log-likelihoods; the decoder maximizes the total.
//!
//! `path_score` is the single scoring definition. The dynamic program
//! accumulates candidates with the same operation order, so its optimum is
//! bit-identical to scoring the winning path directly, which lets tests
//! compare against exhaustive enumeration with `==` rather than a tolerance.

use super::{HeartState, SegmentationError};

/// Emission probabilities are floored here before logs to keep scores finite.
pub const LIKELIHOOD_FLOOR: f64 = 1e-9;

/// Per-state duration model in seconds, indexed by `HeartState::index()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationPrior {
    pub mean: [f64; 4],
    pub std: [f64; 4],
    pub min: [f64; 4],
    pub max: [f64; 4],
}

impl Default for DurationPrior {
    /// Resting-physiology defaults: S1 0.12 s, systole 0.20 s, S2 0.10 s,
    /// diastole 0.50 s, std at 30% of mean, bounds at mean ± 3 std.
    fn default() -> Self {
        let mean = [0.12f64, 0.20, 0.10, 0.50];
        let mut std = [0.0f64; 4];
        let mut min = [0.0f64; 4];
        let mut max = [0.0f64; 4];
        for s in 0..4 {
            std[s] = 0.3 * mean[s];
            min[s] = (mean[s] - 3.0 * std[s]).max(1e-3);
            max[s] = mean[s] + 3.0 * std[s];
        }
        DurationPrior { mean, std, min, max }
    }
}

impl DurationPrior {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        for s in 0..4 {
            let ok = self.min[s] > 0.0
                && self.min[s] <= self.mean[s]
                && self.mean[s] <= self.max[s]
                && self.std[s] > 0.0;
            if !ok {
                return Err(SegmentationError::InvalidLikelihood(format!(
                    "duration prior violates 0 < min <= mean <= max, std > 0 for state {s}"
                )));
            }
        }
        Ok(())
    }

    /// Inclusive frame-count bounds per state at the given frame rate.
    pub fn frame_bounds(&self, frame_rate: f64) -> [(usize, usize); 4] {
        let mut bounds = [(0usize, 0usize); 4];
        for s in 0..4 {
            let lo = ((self.min[s] * frame_rate).round() as usize).max(1);
            let hi = ((self.max[s] * frame_rate).round() as usize).max(lo);
            bounds[s] = (lo, hi);
        }
        bounds
    }

    /// Gaussian log-density of a run of `frames` frames, evaluated in
    /// seconds. Truncation to [min, max] is enforced by the frame bounds;
    /// the density itself is left unnormalized.
    pub fn duration_log_score(&self, state: HeartState, frames: usize, frame_rate: f64) -> f64 {
        let s = state.index();
        let t = frames as f64 / frame_rate;
        let z = (t - self.mean[s]) / self.std[s];
        -0.5 * z * z - (self.std[s] * (2.0 * std::f64::consts::PI).sqrt()).ln()
    }
}

/// Decoded state path plus the S1 onsets it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    pub frame_rate: f64,
    pub states: Vec<HeartState>,
    /// Frame indices where an S1 run begins (sequence start or a
    /// Diastole→S1 transition), ascending.
    pub s1_onset_frames: Vec<usize>,
}

impl StateSequence {
    /// S1 onsets as sample indices at the given audio rate.
    pub fn s1_onset_samples(&self, sample_rate: u32) -> Vec<usize> {
        let samples_per_frame = sample_rate as f64 / self.frame_rate;
        self.s1_onset_frames
            .iter()
            .map(|&f| (f as f64 * samples_per_frame).round() as usize)
            .collect()
    }
}

fn s1_onsets_of(states: &[HeartState]) -> Vec<usize> {
    let mut onsets = Vec::new();
    for (f, &s) in states.iter().enumerate() {
        if s == HeartState::S1 && (f == 0 || states[f - 1] != HeartState::S1) {
            onsets.push(f);
        }
    }
    onsets
}

fn log_emissions(likelihoods: &[[f64; 4]]) -> Result<Vec<[f64; 4]>, SegmentationError> {
    let mut out = Vec::with_capacity(likelihoods.len());
    for (f, row) in likelihoods.iter().enumerate() {
        let mut lrow = [0.0f64; 4];
        for s in 0..4 {
            let l = row[s];
            if !l.is_finite() || l < 0.0 {
                return Err(SegmentationError::InvalidLikelihood(format!(
                    "frame {f}, state {s}: likelihood {l}"
                )));
            }
            lrow[s] = l.max(LIKELIHOOD_FLOOR).ln();
        }
        out.push(lrow);
    }
    Ok(out)
}

/// Scores a complete state path, or returns `None` if it breaks the cyclic
/// successor rule or any run's duration bounds.
///
/// This is the decoder's objective, computed with the decoder's exact
/// accumulation order.
pub fn path_score(
    states: &[HeartState],
    likelihoods: &[[f64; 4]],
    prior: &DurationPrior,
    frame_rate: f64,
) -> Option<f64> {
    if states.is_empty() || states.len() != likelihoods.len() {
        return None;
    }
    let bounds = prior.frame_bounds(frame_rate);
    let logs = log_emissions(likelihoods).ok()?;

    let mut acc = 0.0f64;
    let mut run_start = 0usize;
    let mut prev: Option<HeartState> = None;
    let mut f = 0usize;
    while f < states.len() {
        let state = states[f];
        if let Some(p) = prev {
            if state != p.successor() {
                return None;
            }
        }
        let mut end = f;
        while end + 1 < states.len() && states[end + 1] == state {
            end += 1;
        }
        let d = end - run_start + 1;
        let (lo, hi) = bounds[state.index()];
        if d < lo || d > hi {
            return None;
        }
        acc += prior.duration_log_score(state, d, frame_rate);
        for frame in run_start..=end {
            acc += logs[frame][state.index()];
        }
        prev = Some(state);
        f = end + 1;
        run_start = f;
    }
    Some(acc)
}

/// Maximum a-posteriori state path under the duration-constrained cyclic
/// model. `likelihoods[f][s]` is the emission probability of state `s` at
/// frame `f`.
pub fn hsmm_decode(
    likelihoods: &[[f64; 4]],
    prior: &DurationPrior,
    frame_rate: f64,
) -> Result<StateSequence, SegmentationError> {
    prior.validate()?;
    let n = likelihoods.len();
    if n == 0 {
        return Err(SegmentationError::DecodeError);
    }
    let logs = log_emissions(likelihoods)?;
    let bounds = prior.frame_bounds(frame_rate);

    // dur[s][d - lo] precomputed through the same function path_score uses.
    let dur: Vec<Vec<f64>> = HeartState::ALL
        .iter()
        .map(|&state| {
            let (lo, hi) = bounds[state.index()];
            (lo..=hi)
                .map(|d| prior.duration_log_score(state, d, frame_rate))
                .collect()
        })
        .collect();

    // best[t][s]: top score over paths covering frames 0..=t whose final run
    // of state s ends at t. from[t][s]: that run's length, 0 marking "run
    // starts the path".
    let mut best = vec![[f64::NEG_INFINITY; 4]; n];
    let mut from = vec![[(0usize, false); 4]; n];

    for t in 0..n {
        for &state in &HeartState::ALL {
            let s = state.index();
            let (lo, hi) = bounds[s];
            let p = state.predecessor().index();
            let mut top = f64::NEG_INFINITY;
            let mut arg = (0usize, false);
            for d in lo..=hi.min(t + 1) {
                let start = t + 1 - d;
                let (base, first) = if start == 0 {
                    (0.0, true)
                } else {
                    (best[start - 1][p], false)
                };
                if base == f64::NEG_INFINITY {
                    continue;
                }
                let mut cand = base + dur[s][d - lo];
                for frame in start..=t {
                    cand += logs[frame][s];
                }
                if cand > top {
                    top = cand;
                    arg = (d, first);
                }
            }
            best[t][s] = top;
            from[t][s] = arg;
        }
    }

    let (mut state, final_score) = HeartState::ALL
        .iter()
        .map(|&st| (st, best[n - 1][st.index()]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if final_score == f64::NEG_INFINITY {
        return Err(SegmentationError::DecodeError);
    }

    let mut states = vec![HeartState::S1; n];
    let mut t = n - 1;
    loop {
        let (d, first) = from[t][state.index()];
        let start = t + 1 - d;
        for f in start..=t {
            states[f] = state;
        }
        if first {
            break;
        }
        t = start - 1;
        state = state.predecessor();
    }

    let s1_onset_frames = s1_onsets_of(&states);
    Ok(StateSequence {
        frame_rate,
        states,
        s1_onset_frames,
    })
}
