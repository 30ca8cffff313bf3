//! Verification settings, loadable from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convert::ConversionParams;
use crate::preprocess::{FilterParams, SegmentParams};
use crate::spectro::StftParams;
use crate::Error;

/// How two normalized spectrograms are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    /// Mean-centred 2-D correlation coefficient.
    #[default]
    Pearson,
    /// Uncentred `sum(AB) / sqrt(sum(A^2) sum(B^2))`.
    Cosine,
}

/// Every tunable of the verification pipeline. Missing JSON keys take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub filters: FilterParams,
    pub mic_segment: SegmentParams,
    pub accel_segment: SegmentParams,
    /// Half-width of the accelerometer onset search around the mic onset.
    pub onset_search_s: f64,
    pub mic_stft: StftParams,
    pub accel_stft: StftParams,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// `None` disables amplitude selection.
    pub amp_threshold_db: Option<f64>,
    pub max_shift_s: f64,
    /// Column step of the common time grid; `None` uses the microphone hop.
    pub grid_step_s: Option<f64>,
    pub threshold: f64,
    pub correlation: CorrelationMode,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            filters: FilterParams::default(),
            mic_segment: SegmentParams::mic(),
            accel_segment: SegmentParams::accel(),
            onset_search_s: 0.3,
            mic_stft: StftParams::mic(),
            accel_stft: StftParams::accel(),
            band_low_hz: ConversionParams::BAND_LOW_HZ,
            band_high_hz: ConversionParams::BAND_HIGH_HZ,
            amp_threshold_db: Some(ConversionParams::AMP_THRESHOLD_DB),
            max_shift_s: 0.5,
            grid_step_s: None,
            threshold: 0.30,
            correlation: CorrelationMode::Pearson,
        }
    }
}

impl VerifyConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(m));
        self.mic_stft.validate()?;
        self.accel_stft.validate()?;
        if !(self.max_shift_s >= 0.0 && self.max_shift_s.is_finite()) {
            return bad(format!("max_shift_s {}", self.max_shift_s));
        }
        if let Some(step) = self.grid_step_s {
            if !(step > 0.0 && step.is_finite()) {
                return bad(format!("grid_step_s {step}"));
            }
        }
        if !self.threshold.is_finite() {
            return bad(format!("threshold {}", self.threshold));
        }
        if !(self.band_low_hz >= 0.0 && self.band_low_hz < self.band_high_hz) {
            return bad(format!("band [{}, {}]", self.band_low_hz, self.band_high_hz));
        }
        if !(self.onset_search_s >= 0.0) {
            return bad(format!("onset_search_s {}", self.onset_search_s));
        }
        for (name, p) in [("mic_segment", &self.mic_segment), ("accel_segment", &self.accel_segment)] {
            if !(p.window_s > 0.0 && p.hop_s > 0.0 && p.k_sigma >= 0.0 && p.min_variance >= 0.0) {
                return bad(format!("{name}: {p:?}"));
            }
        }
        Ok(())
    }

    /// Conversion settings for an accelerometer at `f_ws_hz`.
    pub fn conversion(&self, f_ws_hz: f64) -> ConversionParams {
        let mut p = ConversionParams::new(f_ws_hz, self.accel_stft.n_fft / 2 + 1);
        p.band_low_hz = self.band_low_hz;
        p.band_high_hz = self.band_high_hz;
        p.amp_threshold_db = self.amp_threshold_db;
        p.n_shift_range = p.n_shift_range.max((self.band_high_hz / f_ws_hz).ceil() as i64);
        p
    }

    /// SHA-256 of the compact JSON serialization, hex encoded.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_is_default() {
        assert_eq!(VerifyConfig::from_json("{}").unwrap(), VerifyConfig::default());
    }

    #[test]
    fn partial_override() {
        let cfg = VerifyConfig::from_json(r#"{"threshold": 0.5, "correlation": "cosine", "amp_threshold_db": null}"#).unwrap();
        assert_eq!(cfg.threshold, 0.5);
        assert_eq!(cfg.correlation, CorrelationMode::Cosine);
        assert_eq!(cfg.amp_threshold_db, None);
        assert_eq!(cfg.max_shift_s, 0.5);
    }

    #[test]
    fn hash_tracks_content() {
        let a = VerifyConfig::default();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
        b.threshold = 0.31;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(VerifyConfig::from_json(r#"{"max_shift_s": -1}"#).is_err());
        assert!(VerifyConfig::from_json(r#"{"band_low_hz": 4000}"#).is_err());
        assert!(VerifyConfig::from_json(r#"{"mic_stft": {"n_fft": 1000, "hop": 10}}"#).is_err());
        assert!(VerifyConfig::from_json(r#"{"thresold": 0.2}"#).is_err());
    }
}
