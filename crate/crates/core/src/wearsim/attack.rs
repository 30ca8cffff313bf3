//! Legitimate and attack trial generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{ambient_noise, simulate_accel, synth_utterance, AccelModel, SimError, CORPUS_SIZE};
use crate::signal::{AccelTrace, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Legit,
    Attack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Normal,
    RandomAttack,
    Replay,
    HiddenCommand,
    Ultrasound,
}

/// What the absent user's wearable picks up during a replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReplayAccel {
    #[default]
    Ambient,
    OtherUtterance,
}

/// One trial recipe. In JSON the variant is the `kind` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackSpec {
    /// The user speaks; both devices hear it.
    Normal,
    /// The assistant hears an attacker's command while the user's wearable
    /// records the user saying something else.
    RandomAttack {
        #[serde(default)]
        attacker_word: Option<u32>,
    },
    /// The legitimate recording is played to the assistant while the user is away.
    Replay {
        #[serde(default)]
        accel: ReplayAccel,
        #[serde(default)]
        other_word: Option<u32>,
    },
    /// Noise-like audio carrying the command's envelope, played from a
    /// speaker that is also heard by the nearby wearable.
    HiddenCommand {
        #[serde(default = "hidden_distance")]
        distance_m: f64,
    },
    /// An inaudible chirp recorded at a high microphone rate.
    Ultrasound {
        #[serde(default = "us_low")]
        f_low_hz: f64,
        #[serde(default = "us_high")]
        f_high_hz: f64,
        #[serde(default = "us_rate")]
        mic_rate_hz: f64,
    },
}

fn hidden_distance() -> f64 {
    0.30
}
fn us_low() -> f64 {
    15_000.0
}
fn us_high() -> f64 {
    25_000.0
}
fn us_rate() -> f64 {
    96_000.0
}

impl AttackSpec {
    pub fn kind(&self) -> AttackKind {
        match self {
            AttackSpec::Normal => AttackKind::Normal,
            AttackSpec::RandomAttack { .. } => AttackKind::RandomAttack,
            AttackSpec::Replay { .. } => AttackKind::Replay,
            AttackSpec::HiddenCommand { .. } => AttackKind::HiddenCommand,
            AttackSpec::Ultrasound { .. } => AttackKind::Ultrasound,
        }
    }

    pub fn label(&self) -> Label {
        if matches!(self, AttackSpec::Normal) {
            Label::Legit
        } else {
            Label::Attack
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let word = |w: &Option<u32>| match w {
            Some(id) if *id >= CORPUS_SIZE => Err(SimError::UnknownWordId(*id)),
            _ => Ok(()),
        };
        match self {
            AttackSpec::Normal => Ok(()),
            AttackSpec::RandomAttack { attacker_word } => word(attacker_word),
            AttackSpec::Replay { other_word, .. } => word(other_word),
            AttackSpec::HiddenCommand { distance_m } if *distance_m > 0.0 && distance_m.is_finite() => Ok(()),
            AttackSpec::Ultrasound { f_low_hz, f_high_hz, mic_rate_hz }
                if *f_low_hz > 0.0 && f_low_hz < f_high_hz && 2.0 * f_high_hz <= *mic_rate_hz =>
            {
                Ok(())
            }
            other => Err(SimError::InvalidSpec(format!("{other:?}"))),
        }
    }
}

/// The explicit word, or one drawn from `rng`.
fn pick_word(rng: &mut impl Rng, explicit: Option<u32>) -> u32 {
    explicit.unwrap_or_else(|| rng.random_range(0..CORPUS_SIZE))
}

/// Builds the microphone audio and accelerometer trace of one trial.
///
/// `legit_audio` is what the user says (or said, for a replay).
pub fn generate_attack(
    spec: &AttackSpec,
    legit_audio: &Signal,
    model: &AccelModel,
    seed: u64,
) -> Result<(Signal, AccelTrace, Label), SimError> {
    spec.validate()?;
    if legit_audio.is_empty() {
        return Err(SimError::InvalidSpec("empty legitimate audio".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51_7cc1_b727_220a);
    let accel_seed = rng.random();
    let (mic, accel) = match spec {
        AttackSpec::Normal => (legit_audio.clone(), simulate_accel(legit_audio, model, accel_seed)?),
        AttackSpec::RandomAttack { attacker_word } => {
            let mic = synth_utterance(pick_word(&mut rng, *attacker_word), rng.random())?;
            (mic, simulate_accel(legit_audio, model, accel_seed)?)
        }
        AttackSpec::Replay { accel, other_word } => {
            let heard = match accel {
                ReplayAccel::Ambient => ambient_noise(legit_audio.len(), legit_audio.sample_rate_hz(), rng.random())?,
                ReplayAccel::OtherUtterance => synth_utterance(pick_word(&mut rng, *other_word), rng.random())?,
            };
            (legit_audio.clone(), simulate_accel(&heard, model, accel_seed)?)
        }
        AttackSpec::HiddenCommand { distance_m } => {
            let audio = hidden_command_audio(legit_audio, &mut rng);
            let far = AccelModel { distance_m: *distance_m, ..model.clone() };
            let accel = simulate_accel(&audio, &far, accel_seed)?;
            (audio, accel)
        }
        AttackSpec::Ultrasound { f_low_hz, f_high_hz, mic_rate_hz } => {
            let audio = ultrasound_chirp(legit_audio.duration_s(), *f_low_hz, *f_high_hz, *mic_rate_hz, rng.random())?;
            (audio.clone(), simulate_accel(&audio, model, accel_seed)?)
        }
    };
    Ok((mic, accel, spec.label()))
}

/// Broadband noise shaped by the command's envelope, with the command itself
/// mixed in well below it.
fn hidden_command_audio(legit: &Signal, rng: &mut impl Rng) -> Signal {
    let fs = legit.sample_rate_hz();
    let w = ((0.02 * fs) as usize).max(1);
    let x = legit.samples();
    let mut prefix = vec![0.0];
    for v in x {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    let env: Vec<f64> = (0..x.len())
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(w / 2), (i + w / 2 + 1).min(x.len()));
            ((prefix[hi] - prefix[lo]) / (hi - lo) as f64).sqrt()
        })
        .collect();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let out = x.iter().zip(&env).map(|(&s, &e)| (2.0 * e * normal.sample(rng) + 0.1 * s).clamp(-1.0, 1.0)).collect();
    legit.with_samples(out)
}

/// Linear chirp between `f_low` and `f_high` at -6 dBFS over ambient noise.
fn ultrasound_chirp(dur_s: f64, f_low: f64, f_high: f64, rate: f64, seed: u64) -> Result<Signal, SimError> {
    let len = (dur_s * rate).round() as usize;
    let noise = ambient_noise(len, rate, seed)?;
    let k = (f_high - f_low) / dur_s;
    let out = noise
        .samples()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let t = i as f64 / rate;
            n + 0.5 * (2.0 * PI * (f_low * t + 0.5 * k * t * t)).sin()
        })
        .collect();
    Ok(Signal::new(out, rate)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_shapes() {
        let s: AttackSpec = serde_json::from_str(r#"{"kind":"normal"}"#).unwrap();
        assert_eq!(s, AttackSpec::Normal);
        let s: AttackSpec = serde_json::from_str(r#"{"kind":"replay"}"#).unwrap();
        assert_eq!(s, AttackSpec::Replay { accel: ReplayAccel::Ambient, other_word: None });
        let s: AttackSpec = serde_json::from_str(r#"{"kind":"ultrasound"}"#).unwrap();
        assert_eq!(s.kind(), AttackKind::Ultrasound);
        assert!(serde_json::from_str::<AttackSpec>(r#"{"kind":"laser"}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(AttackSpec::RandomAttack { attacker_word: Some(25) }.validate().is_err());
        let us = AttackSpec::Ultrasound { f_low_hz: 15e3, f_high_hz: 25e3, mic_rate_hz: 44_100.0 };
        assert!(us.validate().is_err());
        assert!(AttackSpec::HiddenCommand { distance_m: 0.0 }.validate().is_err());
    }

    #[test]
    fn labels_and_shapes() {
        let legit = synth_utterance(0, 1).unwrap();
        let m = AccelModel::default();
        let (mic, acc, label) = generate_attack(&AttackSpec::Normal, &legit, &m, 4).unwrap();
        assert_eq!((mic, label), (legit.clone(), Label::Legit));
        assert_eq!(acc.len(), 400);
        let us = AttackSpec::Ultrasound { f_low_hz: 15e3, f_high_hz: 25e3, mic_rate_hz: 96e3 };
        let (mic, _, label) = generate_attack(&us, &legit, &m, 4).unwrap();
        assert_eq!(mic.sample_rate_hz(), 96e3);
        assert_eq!(label, Label::Attack);
    }
}
