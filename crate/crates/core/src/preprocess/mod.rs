//! Noise removal, command segmentation and coarse channel synchronization.

pub mod filter;
mod segment;
mod sync;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::Signal;
use filter::{Kind, Sos};

pub use segment::{moving_variance, segment_accel_assisted, segment_mic, Channel, Segment, SegmentParams};
pub use sync::{sample_trigger_lag, simulate_wake_trigger, SimulatedSession, SyncPair, WakeMessage, MAX_TRIGGER_LAG_S};

/// Order of every Butterworth stage used here.
pub const FILTER_ORDER: usize = 4;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("cutoff {cutoff_hz} Hz is not below Nyquist ({nyquist_hz} Hz)")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("invalid band [{low_hz}, {high_hz}] Hz")]
    InvalidBand { low_hz: f64, high_hz: f64 },
    #[error("no command sound detected")]
    NoCommandDetected,
    #[error("signal too short for segmentation: {0:.3} s")]
    TooShort(f64),
    #[error("lag {lag_s} s exceeds the synchronization horizon {max_s} s")]
    LagOutOfRange { lag_s: f64, max_s: f64 },
    #[error("malformed wake message: {0}")]
    MalformedWake(String),
}

/// Filter settings shared by the CLI config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    pub accel_highpass_hz: f64,
    pub mic_band_low_hz: f64,
    pub mic_band_high_hz: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self { accel_highpass_hz: 30.0, mic_band_low_hz: 300.0, mic_band_high_hz: 4000.0 }
    }
}

/// Removes hand motion and gravity from an accelerometer axis with a
/// zero-phase 4th-order Butterworth high-pass.
pub fn highpass_accel(sig: &Signal, cutoff_hz: f64) -> Result<Signal, PreprocessError> {
    let nyquist_hz = sig.sample_rate_hz() / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz) {
        return Err(PreprocessError::CutoffAboveNyquist { cutoff_hz, nyquist_hz });
    }
    let sos = Sos::butterworth(Kind::Highpass, FILTER_ORDER, cutoff_hz, sig.sample_rate_hz());
    Ok(sig.with_samples(sos.filtfilt(sig.samples())))
}

/// Keeps the voice band of a microphone recording (zero-phase).
///
/// When `high_hz` reaches Nyquist the upper stage is dropped and the filter
/// degrades to a high-pass at `low_hz`, so 8 kHz recordings stay usable.
pub fn bandpass_mic(sig: &Signal, low_hz: f64, high_hz: f64) -> Result<Signal, PreprocessError> {
    if !(low_hz > 0.0 && low_hz < high_hz) {
        return Err(PreprocessError::InvalidBand { low_hz, high_hz });
    }
    Ok(sig.with_samples(mic_band_filter(sig.sample_rate_hz(), low_hz, high_hz)?.filtfilt(sig.samples())))
}

pub(crate) fn mic_band_filter(fs: f64, low_hz: f64, high_hz: f64) -> Result<Sos, PreprocessError> {
    let nyquist_hz = fs / 2.0;
    if low_hz >= nyquist_hz {
        return Err(PreprocessError::CutoffAboveNyquist { cutoff_hz: low_hz, nyquist_hz });
    }
    let hp = Sos::butterworth(Kind::Highpass, FILTER_ORDER, low_hz, fs);
    Ok(if high_hz >= nyquist_hz { hp } else { hp.then(Sos::butterworth(Kind::Lowpass, FILTER_ORDER, high_hz, fs)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(f: f64, fs: f64, secs: f64) -> Signal {
        Signal::from_fn((fs * secs) as usize, fs, |t| (2.0 * PI * f * t).sin()).unwrap()
    }

    /// Gain in dB measured as RMS ratio over the middle half, away from edges.
    fn measured_gain_db(input: &Signal, output: &Signal) -> f64 {
        let n = input.len();
        let mid = |s: &Signal| Signal::new(s.samples()[n / 4..3 * n / 4].to_vec(), s.sample_rate_hz()).unwrap().rms();
        20.0 * (mid(output) / mid(input)).log10()
    }

    #[test]
    fn highpass_removes_dc() {
        let dc = Signal::new(vec![1.0; 400], 200.0).unwrap();
        let out = highpass_accel(&dc, 30.0).unwrap();
        assert!(out.samples().iter().all(|v| v.abs() < 1e-6), "max {}", out.samples().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn highpass_passes_50hz_and_blocks_hand_motion() {
        let x = tone(50.0, 200.0, 4.0);
        assert!(measured_gain_db(&x, &highpass_accel(&x, 30.0).unwrap()) > -3.0);
        let x = tone(5.0, 200.0, 8.0);
        assert!(measured_gain_db(&x, &highpass_accel(&x, 30.0).unwrap()) < -40.0);
    }

    #[test]
    fn highpass_rejects_cutoff_above_nyquist() {
        let x = tone(5.0, 50.0, 1.0);
        assert!(matches!(highpass_accel(&x, 30.0), Err(PreprocessError::CutoffAboveNyquist { .. })));
    }

    #[test]
    fn bandpass_gains() {
        let x = tone(1000.0, 8000.0, 1.0);
        let g = measured_gain_db(&x, &bandpass_mic(&x, 300.0, 4000.0).unwrap());
        assert!(g.abs() < 1.0, "{g}");
        let x = tone(100.0, 8000.0, 2.0);
        let g = measured_gain_db(&x, &bandpass_mic(&x, 300.0, 4000.0).unwrap());
        assert!(g < -30.0, "{g}");
        // with a real upper edge, out-of-band highs are removed too
        let x = tone(6000.0, 16000.0, 1.0);
        assert!(measured_gain_db(&x, &bandpass_mic(&x, 300.0, 4000.0).unwrap()) < -30.0);
    }

    #[test]
    fn bandpass_at_nyquist_is_plain_highpass() {
        let x = Signal::from_fn(8000, 8000.0, |t| (2.0 * PI * 1234.0 * t).sin() + 0.3 * (2.0 * PI * 3900.0 * t).cos()).unwrap();
        let bp = bandpass_mic(&x, 300.0, 4000.0).unwrap();
        let hp = Sos::butterworth(Kind::Highpass, FILTER_ORDER, 300.0, 8000.0).filtfilt(x.samples());
        assert_eq!(bp.samples(), &hp[..]);
    }

    #[test]
    fn bandpass_rejects_inverted_band() {
        let x = tone(1000.0, 8000.0, 0.1);
        assert!(matches!(bandpass_mic(&x, 4000.0, 300.0), Err(PreprocessError::InvalidBand { .. })));
        assert!(matches!(bandpass_mic(&x, 300.0, 300.0), Err(PreprocessError::InvalidBand { .. })));
    }

    #[test]
    fn zero_phase_keeps_burst_centre() {
        let fs = 8000.0;
        let x = Signal::from_fn(16000, fs, |t| {
            let env = (-((t - 1.0) / 0.05).powi(2)).exp();
            env * (2.0 * PI * 1000.0 * t).sin()
        })
        .unwrap();
        let y = bandpass_mic(&x, 300.0, 4000.0).unwrap();
        let centroid = |s: &[f64]| {
            let w: f64 = s.iter().map(|v| v * v).sum();
            s.iter().enumerate().map(|(i, v)| i as f64 * v * v).sum::<f64>() / w
        };
        assert!((centroid(x.samples()) - centroid(y.samples())).abs() < 1.0);
    }
}
