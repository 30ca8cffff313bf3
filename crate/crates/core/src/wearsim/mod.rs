//! Wearable accelerometer simulator and attack scenario generation.
//!
//! A smartwatch accelerometer responds to loud nearby sound only inside a
//! narrow band, has no anti-alias filter, and samples at a few hundred hertz.
//! The simulator band-limits the audio to that band, scales it by distance,
//! gates it at a sensitivity floor, point-samples it at the accelerometer rate
//! (so the band folds), and adds wrist motion and sensor noise.

mod attack;
mod scenario;
mod utterance;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::filter::{Kind, Sos};
use crate::signal::{AccelTrace, Signal, SignalError};

pub use attack::{generate_attack, AttackKind, AttackSpec, Label, ReplayAccel};
pub use scenario::{load_scenario, parse_scenario, run_scenario, ManifestEntry, ScenarioEntry, MANIFEST_NAME};
pub use utterance::{ambient_noise, synth_utterance, CORPUS_SIZE, UTTERANCE_RATE_HZ, UTTERANCE_SECONDS};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("audio rate {rate_hz} Hz is below the {needed_hz} Hz needed for the response band")]
    RateTooLow { rate_hz: f64, needed_hz: f64 },
    #[error("unknown word id {0}")]
    UnknownWordId(u32),
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Beyond this distance the wearable does not respond to sound at all.
pub const MAX_RESPONSE_DISTANCE_M: f64 = 0.25;
const REFERENCE_DISTANCE_M: f64 = 0.05;
/// Largest start offset [`simulate_accel_at`] accepts.
pub const MAX_START_OFFSET_S: f64 = 1.0;
const GATE_WINDOW_S: f64 = 0.020;
const HAND_MOTION_HZ: f64 = 20.0;
const RESPONSE_FILTER_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccelModel {
    pub f_ws_hz: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Smallest in-band amplitude (dBFS, after distance gain) that moves the sensor.
    pub sensitivity_floor_db: f64,
    pub distance_m: f64,
    /// Acceleration per unit of full-scale audio at the reference distance, m/s².
    pub response_scale: f64,
    pub hand_noise_rms: f64,
    pub sensor_noise_rms: f64,
    pub gravity_m_s2: f64,
}

impl Default for AccelModel {
    fn default() -> Self {
        Self {
            f_ws_hz: 200.0,
            band_low_hz: 700.0,
            band_high_hz: 3300.0,
            sensitivity_floor_db: -40.0,
            distance_m: 0.10,
            response_scale: 1.0,
            hand_noise_rms: 0.02,
            sensor_noise_rms: 0.002,
            gravity_m_s2: 9.81,
        }
    }
}

impl AccelModel {
    /// Inverse-square amplitude rolloff from 5 cm, zero past 25 cm.
    pub fn distance_gain(&self) -> f64 {
        if self.distance_m > MAX_RESPONSE_DISTANCE_M {
            0.0
        } else {
            (REFERENCE_DISTANCE_M / self.distance_m.max(REFERENCE_DISTANCE_M)).powi(2)
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let ok = self.f_ws_hz > 0.0
            && self.band_low_hz > 0.0
            && self.band_low_hz < self.band_high_hz
            && self.distance_m > 0.0
            && self.response_scale >= 0.0
            && self.hand_noise_rms >= 0.0
            && self.sensor_noise_rms >= 0.0
            && [self.f_ws_hz, self.sensitivity_floor_db, self.gravity_m_s2].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidSpec(format!("accelerometer model {self:?}")))
        }
    }
}

/// Simulated accelerometer trace for `audio`, sampled from time zero.
pub fn simulate_accel(audio: &Signal, model: &AccelModel, seed: u64) -> Result<AccelTrace, SimError> {
    simulate_accel_at(audio, model, seed, 0.0)
}

/// Like [`simulate_accel`], but the wearable's first sample is taken at
/// `start_offset_s` on the audio's clock. Its own timestamps still start at 0.
///
/// Wrist motion and sensor noise live on the audio's clock too, so two traces
/// of the same seed at different offsets see the same noise at the same
/// physical instant. Offsets are limited to ±[`MAX_START_OFFSET_S`].
pub fn simulate_accel_at(audio: &Signal, model: &AccelModel, seed: u64, start_offset_s: f64) -> Result<AccelTrace, SimError> {
    model.validate()?;
    if !(start_offset_s.abs() <= MAX_START_OFFSET_S) {
        return Err(SimError::InvalidSpec(format!("start offset {start_offset_s} s")));
    }
    let fs = audio.sample_rate_hz();
    if fs < 2.0 * model.band_high_hz {
        return Err(SimError::RateTooLow { rate_hz: fs, needed_hz: 2.0 * model.band_high_hz });
    }
    let response = acoustic_response(audio, model);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orientation = random_unit(&mut rng);
    let gravity_dir = random_unit(&mut rng);
    let count = (audio.duration_s() * model.f_ws_hz).floor() as usize;
    let sampled: Vec<f64> = (0..count)
        .map(|k| {
            let idx = ((start_offset_s + k as f64 / model.f_ws_hz) * fs).round();
            if idx >= 0.0 && (idx as usize) < response.len() {
                response[idx as usize]
            } else {
                0.0
            }
        })
        .collect();

    // noise is drawn on a fixed grid of sensor periods covering every allowed offset
    let margin = (MAX_START_OFFSET_S * model.f_ws_hz).ceil() as usize;
    let span = count + 2 * margin + 1;
    let first = (margin as f64 + (start_offset_s * model.f_ws_hz).round()) as usize;
    let sensor = Normal::new(0.0, model.sensor_noise_rms.max(f64::MIN_POSITIVE)).expect("finite std");
    let mut axes: [Vec<f64>; 3] = Default::default();
    for (i, axis) in axes.iter_mut().enumerate() {
        let hand = hand_motion(&mut rng, span, model);
        let noise: Vec<f64> = (0..span).map(|_| if model.sensor_noise_rms > 0.0 { sensor.sample(&mut rng) } else { 0.0 }).collect();
        *axis = (0..count)
            .map(|k| orientation[i] * sampled[k] + hand[first + k] + noise[first + k] + gravity_dir[i] * model.gravity_m_s2)
            .collect();
    }
    let [x, y, z] = axes;
    Ok(AccelTrace::uniform(0.0, model.f_ws_hz, x, y, z)?)
}

/// The vibration the sound induces, on the audio's own sample grid.
fn acoustic_response(audio: &Signal, model: &AccelModel) -> Vec<f64> {
    let fs = audio.sample_rate_hz();
    let gain = model.distance_gain() * model.response_scale;
    if gain == 0.0 || audio.is_empty() {
        return vec![0.0; audio.len()];
    }
    let mut band = Sos::butterworth(Kind::Highpass, RESPONSE_FILTER_ORDER, model.band_low_hz, fs);
    if model.band_high_hz < fs / 2.0 {
        band = band.then(Sos::butterworth(Kind::Lowpass, RESPONSE_FILTER_ORDER, model.band_high_hz, fs));
    }
    let mut y = band.filtfilt(audio.samples());
    // sensitivity floor on the local peak amplitude, judged on the audio scale
    let floor = 10f64.powf(model.sensitivity_floor_db / 20.0);
    let dist = model.distance_gain();
    let gate = moving_rms(&y, ((GATE_WINDOW_S * fs).round() as usize).max(1));
    for (v, rms) in y.iter_mut().zip(gate) {
        *v = if rms * std::f64::consts::SQRT_2 * dist >= floor { *v * gain } else { 0.0 };
    }
    y
}

/// Centred moving RMS with a window of `w` samples.
fn moving_rms(x: &[f64], w: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    let half = w / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + w - half).min(x.len());
            ((prefix[hi] - prefix[lo]).max(0.0) / (hi - lo) as f64).sqrt()
        })
        .collect()
}

fn random_unit(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(rand_distr::StandardNormal));
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.map(|c| c / n);
        }
    }
}

/// Slow wrist motion: white noise low-passed below 20 Hz, scaled to `hand_noise_rms`.
fn hand_motion(rng: &mut impl Rng, count: usize, model: &AccelModel) -> Vec<f64> {
    if model.hand_noise_rms == 0.0 || count < 2 || HAND_MOTION_HZ >= model.f_ws_hz / 2.0 {
        return vec![0.0; count];
    }
    let white: Vec<f64> = (0..count).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    let lp = Sos::butterworth(Kind::Lowpass, RESPONSE_FILTER_ORDER, HAND_MOTION_HZ, model.f_ws_hz);
    let slow = lp.filtfilt(&white);
    let rms = (slow.iter().map(|v| v * v).sum::<f64>() / count as f64).sqrt();
    if rms == 0.0 {
        return slow;
    }
    slow.into_iter().map(|v| v * model.hand_noise_rms / rms).collect()
}
