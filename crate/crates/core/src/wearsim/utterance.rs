//! Synthetic spoken commands: deterministic multi-tone "words".

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

use super::SimError;
use crate::signal::Signal;

pub const CORPUS_SIZE: u32 = 20;
pub const UTTERANCE_RATE_HZ: f64 = 8000.0;
pub const UTTERANCE_SECONDS: f64 = 2.0;
const WORD_START_S: f64 = 0.4;
const AMBIENT_DBFS: f64 = -60.0;
const RAMP_S: f64 = 0.015;
const WORD_SALT: u64 = 0x7702_d5c1_9a3b_0000;

struct Partial {
    f0_hz: f64,
    glide_hz: f64,
    level_db: f64,
}

struct Syllable {
    start_s: f64,
    dur_s: f64,
    partials: Vec<Partial>,
}

/// Word structure depends on `word_id` alone.
fn word_plan(word_id: u32) -> Vec<Syllable> {
    let mut rng = ChaCha8Rng::seed_from_u64(WORD_SALT ^ u64::from(word_id));
    let count = rng.random_range(3..=5);
    let mut t = 0.0;
    (0..count)
        .map(|_| {
            let dur_s = rng.random_range(0.15..=0.25);
            let partials = (0..rng.random_range(2..=3))
                .map(|_| Partial {
                    f0_hz: rng.random_range(760.0..3240.0),
                    glide_hz: rng.random_range(-20.0..=20.0),
                    level_db: rng.random_range(-26.0..=-18.0),
                })
                .collect();
            let syl = Syllable { start_s: t, dur_s, partials };
            t += dur_s + rng.random_range(0.02..=0.06);
            syl
        })
        .collect()
}

/// White noise at the ambient level (-60 dBFS RMS).
pub fn ambient_noise(len: usize, rate_hz: f64, seed: u64) -> Result<Signal, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, 10f64.powf(AMBIENT_DBFS / 20.0)).expect("finite std");
    Ok(Signal::new((0..len).map(|_| n.sample(&mut rng)).collect(), rate_hz)?)
}

/// A 2 s, 8 kHz recording of synthetic word `word_id` (0..20) starting near
/// 0.4 s over ambient noise. `seed` only perturbs levels, timing by a few
/// milliseconds and the noise.
pub fn synth_utterance(word_id: u32, seed: u64) -> Result<Signal, SimError> {
    if word_id >= CORPUS_SIZE {
        return Err(SimError::UnknownWordId(word_id));
    }
    let plan = word_plan(word_id);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ u64::from(word_id));
    let gain_db = rng.random_range(-2.0..=2.0);
    let offset_s = WORD_START_S + rng.random_range(-0.02..=0.02);

    let fs = UTTERANCE_RATE_HZ;
    let len = (UTTERANCE_SECONDS * fs) as usize;
    let mut out = ambient_noise(len, fs, rng.random())?.into_samples();
    for syl in &plan {
        let start = offset_s + syl.start_s + rng.random_range(-0.005..=0.005);
        for p in &syl.partials {
            let amp = 10f64.powf((p.level_db + gain_db + rng.random_range(-1.0..=1.0)) / 20.0);
            let phase0 = rng.random_range(0.0..2.0 * PI);
            let first = (start * fs).round().max(0.0) as usize;
            let n = (syl.dur_s * fs).round() as usize;
            for i in 0..n.min(len.saturating_sub(first)) {
                let tau = i as f64 / fs;
                // linear glide: instantaneous frequency f0 + glide * tau / dur
                let phase = 2.0 * PI * (p.f0_hz * tau + 0.5 * p.glide_hz * tau * tau / syl.dur_s);
                out[first + i] += amp * ramp(tau, syl.dur_s) * (phase + phase0).sin();
            }
        }
    }
    Ok(Signal::new(out, fs)?)
}

/// Raised-cosine fade in and out.
fn ramp(tau: f64, dur: f64) -> f64 {
    let edge = tau.min(dur - tau);
    if edge >= RAMP_S {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge.max(0.0) / RAMP_S).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(synth_utterance(3, 11).unwrap(), synth_utterance(3, 11).unwrap());
        assert_ne!(synth_utterance(3, 11).unwrap(), synth_utterance(3, 12).unwrap());
    }

    #[test]
    fn corpus_generates() {
        for w in 0..CORPUS_SIZE {
            let s = synth_utterance(w, 0).unwrap();
            assert_eq!(s.len(), 16000);
            assert!(s.samples().iter().all(|v| v.abs() < 1.0));
        }
        assert!(matches!(synth_utterance(CORPUS_SIZE, 0), Err(SimError::UnknownWordId(20))));
    }

    #[test]
    fn words_fit_the_recording() {
        for w in 0..CORPUS_SIZE {
            let plan = word_plan(w);
            let last = plan.last().unwrap();
            assert!(WORD_START_S + 0.03 + last.start_s + last.dur_s < UTTERANCE_SECONDS);
            assert!(plan.iter().flat_map(|s| &s.partials).all(|p| (700.0..=3300.0).contains(&(p.f0_hz + p.glide_hz))));
        }
    }
}
