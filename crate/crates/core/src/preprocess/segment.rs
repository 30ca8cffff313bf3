//! Moving-variance command segmentation.
//!
//! The envelope is the variance of the signal over a sliding window. A window
//! is "active" when its variance exceeds `mu + k * max(sigma, mu)`, where
//! `mu`/`sigma` describe the envelope over a noise-only stretch; flooring
//! `sigma` at `mu` keeps the threshold at least `(1 + k)` times the noise
//! variance when the noise estimate comes from only a few windows.

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::signal::Signal;

/// Which channel a segment was found on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Mic,
    Accel,
}

/// A command span, in seconds from the start of its signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
    pub source: Channel,
    /// No onset was found and the span was derived from the other channel.
    pub fallback: bool,
}

impl Segment {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentParams {
    pub window_s: f64,
    pub hop_s: f64,
    /// Leading stretch assumed to be noise (mic only).
    pub noise_lead_s: f64,
    pub k_sigma: f64,
    /// Absolute variance floor for the threshold; digital silence never triggers.
    pub min_variance: f64,
}

impl SegmentParams {
    pub fn mic() -> Self {
        Self { window_s: 0.025, hop_s: 0.010, noise_lead_s: 0.100, k_sigma: 3.0, min_variance: 1e-10 }
    }

    pub fn accel() -> Self {
        Self { window_s: 0.100, hop_s: 0.010, noise_lead_s: 0.100, k_sigma: 3.0, min_variance: 1e-12 }
    }
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self::mic()
    }
}

/// If the leading noise estimate is this many times the global 10th
/// percentile, the lead is assumed to contain the command itself.
const LEAD_CONTAMINATION_RATIO: f64 = 10.0;
const MIN_NOISE_WINDOWS: usize = 2;

/// Envelope geometry in samples.
struct Frames {
    window: usize,
    hop: usize,
    fs: f64,
}

impl Frames {
    fn new(params: &SegmentParams, fs: f64) -> Self {
        let window = ((params.window_s * fs).round() as usize).max(2);
        let hop = ((params.hop_s * fs).round() as usize).max(1);
        Self { window, hop, fs }
    }

    fn start_s(&self, i: usize) -> f64 {
        (i * self.hop) as f64 / self.fs
    }

    fn end_s(&self, i: usize) -> f64 {
        (i * self.hop + self.window) as f64 / self.fs
    }
}

/// Variance over windows of `window` samples advanced by `hop`.
pub fn moving_variance(x: &[f64], window: usize, hop: usize) -> Vec<f64> {
    if window == 0 || hop == 0 || x.len() < window {
        return Vec::new();
    }
    let count = (x.len() - window) / hop + 1;
    (0..count)
        .map(|i| {
            let w = &x[i * hop..i * hop + window];
            let mean = w.iter().sum::<f64>() / window as f64;
            w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / window as f64
        })
        .collect()
}

fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return 0.0;
    }
    let idx = ((v.len() - 1) as f64 * p).round() as usize;
    v[idx]
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    (mu, var.sqrt())
}

/// Activity threshold from a noise-only lead, or from the global 10th
/// percentile when the lead is too short or already holds the command.
fn threshold(lead: &[f64], all: &[f64], params: &SegmentParams) -> f64 {
    let p10 = percentile(all, 0.10);
    let (mu, sigma) = if lead.len() >= MIN_NOISE_WINDOWS {
        let (mu, sigma) = mean_std(lead);
        if mu > LEAD_CONTAMINATION_RATIO * p10 && p10 > 0.0 {
            (p10, 0.0)
        } else {
            (mu, sigma)
        }
    } else {
        (p10, 0.0)
    };
    (mu + params.k_sigma * sigma.max(mu)).max(params.min_variance)
}

/// Finds the command span on a (band-passed) microphone signal.
///
/// The span runs from the start of the first active window to the end of the
/// last one, i.e. the onset/offset padded outward by one window.
pub fn segment_mic(sig: &Signal, params: &SegmentParams) -> Result<Segment, PreprocessError> {
    let dur = sig.duration_s();
    if dur < 0.2 {
        return Err(PreprocessError::TooShort(dur));
    }
    let frames = Frames::new(params, sig.sample_rate_hz());
    let env = moving_variance(sig.samples(), frames.window, frames.hop);
    let lead = env.iter().enumerate().take_while(|&(i, _)| frames.end_s(i) <= params.noise_lead_s + 1e-12).count();
    let thr = threshold(&env[..lead], &env, params);

    let first = env.iter().position(|&v| v > thr).ok_or(PreprocessError::NoCommandDetected)?;
    let last = env.iter().rposition(|&v| v > thr).unwrap_or(first);
    Ok(Segment {
        start_s: frames.start_s(first).clamp(0.0, dur),
        end_s: frames.end_s(last).min(dur),
        source: Channel::Mic,
        fallback: false,
    })
}

/// Locates the command on an accelerometer axis using the microphone span.
///
/// The onset is searched within `mic_seg.start_s ± w_t_s`: it is the end of the
/// first active envelope window there, which lands on the first sample of the
/// burst. The end follows from the microphone command length, clamped to the
/// trace. Without an onset the span falls back to the microphone start and is
/// flagged.
pub fn segment_accel_assisted(sig: &Signal, mic_seg: &Segment, w_t_s: f64, params: &SegmentParams) -> Segment {
    let dur = sig.duration_s();
    let len = mic_seg.duration_s();
    let frames = Frames::new(params, sig.sample_rate_hz());
    let env = moving_variance(sig.samples(), frames.window, frames.hop);
    let (lo, hi) = (mic_seg.start_s - w_t_s, mic_seg.start_s + w_t_s);

    let lead = env.iter().enumerate().take_while(|&(i, _)| frames.end_s(i) < lo).count();
    let thr = threshold(&env[..lead], &env, params);
    let onset = env
        .iter()
        .enumerate()
        .skip(lead)
        .take_while(|&(i, _)| frames.end_s(i) <= hi)
        .find(|&(_, &v)| v > thr)
        .map(|(i, _)| frames.end_s(i));

    let last_sample = ((sig.len().max(1) - 1) as f64 / sig.sample_rate_hz()).max(0.0);
    let (start, fallback) = match onset {
        Some(t) => (t.min(last_sample), false),
        None => (mic_seg.start_s.clamp(0.0, last_sample), true),
    };
    let end = (start + len).min(dur);
    Segment { start_s: start, end_s: end, source: Channel::Accel, fallback }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn burst(fs: f64, total: f64, on: f64, off: f64, noise: f64, seed: u64) -> Signal {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, noise.max(1e-300)).unwrap();
        Signal::from_fn((total * fs) as usize, fs, |t| {
            let s = if (on..off).contains(&t) { 0.3 * (2.0 * PI * 1000.0 * t).sin() } else { 0.0 };
            s + if noise > 0.0 { n.sample(&mut rng) } else { 0.0 }
        })
        .unwrap()
    }

    #[test]
    fn finds_known_edges() {
        for noise in [0.0, 1e-3] {
            let sig = burst(8000.0, 2.0, 0.5, 1.5, noise, 3);
            let seg = segment_mic(&sig, &SegmentParams::mic()).unwrap();
            assert!((0.45..=0.55).contains(&seg.start_s), "{seg:?}");
            assert!((1.45..=1.55).contains(&seg.end_s), "{seg:?}");
        }
    }

    #[test]
    fn silence_has_no_command() {
        let sig = Signal::zeros(8000, 8000.0).unwrap();
        assert!(matches!(segment_mic(&sig, &SegmentParams::mic()), Err(PreprocessError::NoCommandDetected)));
        let noise = burst(8000.0, 1.0, 5.0, 5.0, 1e-3, 9);
        assert!(matches!(segment_mic(&noise, &SegmentParams::mic()), Err(PreprocessError::NoCommandDetected)));
    }

    #[test]
    fn burst_at_start_uses_percentile_fallback() {
        let sig = burst(8000.0, 2.0, 0.0, 1.0, 1e-3, 5);
        let seg = segment_mic(&sig, &SegmentParams::mic()).unwrap();
        assert!(seg.start_s < 0.02, "{seg:?}");
        assert!((0.95..=1.05).contains(&seg.end_s), "{seg:?}");
    }

    #[test]
    fn too_short() {
        let sig = Signal::zeros(800, 8000.0).unwrap();
        assert!(matches!(segment_mic(&sig, &SegmentParams::mic()), Err(PreprocessError::TooShort(_))));
    }

    fn accel_burst(onset: f64, seed: u64) -> Signal {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 0.002).unwrap();
        Signal::from_fn(400, 200.0, |t| {
            let s = if (onset..onset + 1.0).contains(&t) { 0.03 * (2.0 * PI * 47.0 * t).sin() } else { 0.0 };
            s + n.sample(&mut rng)
        })
        .unwrap()
    }

    #[test]
    fn accel_onset_follows_offset() {
        let mic = Segment { start_s: 0.475, end_s: 1.525, source: Channel::Mic, fallback: false };
        for seed in 0..5 {
            let acc = accel_burst(0.54, seed);
            let seg = segment_accel_assisted(&acc, &mic, 0.3, &SegmentParams::accel());
            assert!(!seg.fallback);
            assert!((seg.start_s - 0.54).abs() <= 0.010 + 1e-9, "{seg:?}");
            assert!((seg.duration_s() - mic.duration_s()).abs() < 1e-9);
        }
    }

    #[test]
    fn flat_accel_falls_back() {
        let mic = Segment { start_s: 0.475, end_s: 1.525, source: Channel::Mic, fallback: false };
        let flat = Signal::zeros(400, 200.0).unwrap();
        let seg = segment_accel_assisted(&flat, &mic, 0.3, &SegmentParams::accel());
        assert!(seg.fallback);
        assert_eq!(seg.start_s, 0.475);
    }

    #[test]
    fn accel_end_is_clamped() {
        let mic = Segment { start_s: 0.475, end_s: 3.0, source: Channel::Mic, fallback: false };
        let acc = accel_burst(0.5, 1);
        let seg = segment_accel_assisted(&acc, &mic, 0.3, &SegmentParams::accel());
        assert_eq!(seg.end_s, acc.duration_s());
        assert!(seg.start_s >= 0.0 && seg.start_s < seg.end_s);
    }
}
