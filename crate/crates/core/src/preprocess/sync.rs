//! Wake-trigger synchronization between the assistant and the wearable.
//!
//! When the assistant hears its wake word it sends a one-line JSON message to
//! the wearable, which starts recording on receipt. Network delay leaves a
//! residual lag between the two recordings, bounded by a few tens of
//! milliseconds; the shift correlation absorbs it later.

use rand::Rng;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use super::PreprocessError;
use crate::signal::{select_axis, AccelTrace, Signal};
use crate::wearsim::{simulate_accel_at, AccelModel, SimError};

/// Typical bound on the trigger lag.
pub const MAX_TRIGGER_LAG_S: f64 = 0.040;
/// Largest lag a [`SyncPair`] accepts; matches the shift-correlation horizon.
pub const MAX_PAIR_LAG_S: f64 = 0.5;

/// `{"type":"wake","session_id":"<uuid>","va_clock_ms":<int>}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WakeMessage {
    #[serde(rename = "type")]
    kind: String,
    pub session_id: Uuid,
    pub va_clock_ms: i64,
}

impl WakeMessage {
    pub fn new(session_id: Uuid, va_clock_ms: i64) -> Self {
        Self { kind: "wake".into(), session_id, va_clock_ms }
    }

    /// Serialized form, newline-terminated.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("wake message serializes");
        s.push('\n');
        s
    }

    pub fn parse(line: &str) -> Result<Self, PreprocessError> {
        let msg: Self =
            serde_json::from_str(line.trim_end_matches(['\n', '\r'])).map_err(|e| PreprocessError::MalformedWake(e.to_string()))?;
        if msg.kind != "wake" {
            return Err(PreprocessError::MalformedWake(format!("type `{}`", msg.kind)));
        }
        Ok(msg)
    }
}

/// Microphone and accelerometer recordings of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncPair {
    pub mic: Signal,
    pub accel: Signal,
    /// Accelerometer start minus microphone start, seconds.
    pub lag_s: f64,
}

impl SyncPair {
    pub fn new(mic: Signal, accel: Signal, lag_s: f64) -> Result<Self, PreprocessError> {
        if !(lag_s.abs() <= MAX_PAIR_LAG_S) {
            return Err(PreprocessError::LagOutOfRange { lag_s, max_s: MAX_PAIR_LAG_S });
        }
        Ok(Self { mic, accel, lag_s })
    }
}

/// Draws a trigger lag uniformly from `[-max_lag_s, +max_lag_s]`.
pub fn sample_trigger_lag<R: Rng + ?Sized>(rng: &mut R, max_lag_s: f64) -> f64 {
    if max_lag_s <= 0.0 {
        return 0.0;
    }
    rng.random_range(-max_lag_s..=max_lag_s)
}

/// A simulated wake-triggered session with its ground-truth lag.
#[derive(Debug, Clone)]
pub struct SimulatedSession {
    pub wake: WakeMessage,
    pub trace: AccelTrace,
    pub pair: SyncPair,
}

/// Simulates a wearable that starts recording `lag_s` seconds after the
/// microphone. The accelerometer timestamps are on the wearable's own clock,
/// starting at zero, so the lag is visible only as a content offset.
pub fn simulate_wake_trigger(audio: &Signal, model: &AccelModel, lag_s: f64, seed: u64) -> Result<SimulatedSession, SimError> {
    if !(lag_s.abs() <= MAX_PAIR_LAG_S) {
        return Err(SimError::InvalidSpec(format!("lag {lag_s} s out of range")));
    }
    let trace = simulate_accel_at(audio, model, seed, lag_s)?;
    let axes = trace.regularize().map_err(|e| SimError::InvalidSpec(e.to_string()))?;
    let accel = select_axis(&axes).1.clone();
    let session_id = Uuid::from_u64_pair(seed, lag_s.to_bits());
    // the assistant's clock reads zero when its recording starts
    let wake = WakeMessage::new(session_id, 0);
    let pair = SyncPair { mic: audio.clone(), accel, lag_s };
    Ok(SimulatedSession { wake, trace, pair })
}
