//! Microphone-to-accelerometer spectrogram conversion by frequency folding.
//!
//! An accelerometer sampling at `f_ws` with no anti-alias filter sees a tone at
//! `f` as `|f - N f_ws|` for the integer `N` that lands it in `[0, f_ws/2]`.
//! Conversion keeps the microphone bins the accelerometer can respond to
//! (frequency and amplitude selection) and re-bins their power at the folded
//! frequency on the accelerometer's grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{Origin, Spectrogram};

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("output grid of {target_bins} bins cannot hold a {mic_bin_hz} Hz input grid folded into 0..{nyquist_hz} Hz")]
    GridMismatch { target_bins: usize, mic_bin_hz: f64, nyquist_hz: f64 },
    #[error("expected a microphone spectrogram, got {0:?}")]
    WrongOrigin(Origin),
    #[error("invalid conversion parameters: {0}")]
    InvalidParams(String),
}

/// Folded frequency of `f_hz` when sampled at `f_ws_hz`.
///
/// Equals `min_N |f - N f_ws|` over all integers `N`; always in `[0, f_ws/2]`.
pub fn fold_frequency(f_hz: f64, f_ws_hz: f64) -> f64 {
    let r = f_hz.rem_euclid(f_ws_hz);
    r.min(f_ws_hz - r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionParams {
    pub f_ws_hz: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Per-bin selection threshold in dBFS; `None` keeps every in-band bin.
    pub amp_threshold_db: Option<f64>,
    /// Shift range of the shift search, `-n..=n`.
    pub n_shift_range: i64,
    pub target_bins: usize,
}

impl ConversionParams {
    pub const BAND_LOW_HZ: f64 = 700.0;
    pub const BAND_HIGH_HZ: f64 = 3300.0;
    pub const AMP_THRESHOLD_DB: f64 = -40.0;

    /// Defaults for an accelerometer at `f_ws_hz` whose spectrogram has
    /// `target_bins` rows. The shift range is at least 10 and wide enough to
    /// reach the top of the band.
    pub fn new(f_ws_hz: f64, target_bins: usize) -> Self {
        Self {
            f_ws_hz,
            band_low_hz: Self::BAND_LOW_HZ,
            band_high_hz: Self::BAND_HIGH_HZ,
            amp_threshold_db: Some(Self::AMP_THRESHOLD_DB),
            n_shift_range: min_shift_range(Self::BAND_HIGH_HZ, f_ws_hz).max(10),
            target_bins,
        }
    }

    pub fn validate(&self) -> Result<(), ConvertError> {
        if !(self.f_ws_hz.is_finite() && self.f_ws_hz > 0.0) {
            return Err(ConvertError::InvalidParams(format!("f_ws {} Hz", self.f_ws_hz)));
        }
        if !(self.band_low_hz >= 0.0 && self.band_low_hz < self.band_high_hz) {
            return Err(ConvertError::InvalidParams(format!("band [{}, {}] Hz", self.band_low_hz, self.band_high_hz)));
        }
        let need = min_shift_range(self.band_high_hz, self.f_ws_hz);
        if self.n_shift_range < need {
            return Err(ConvertError::InvalidParams(format!(
                "shift range ±{} cannot reach {} Hz at {} Hz (need ±{need})",
                self.n_shift_range, self.band_high_hz, self.f_ws_hz
            )));
        }
        Ok(())
    }

    /// Width of one output bin.
    pub fn out_bin_hz(&self) -> f64 {
        self.f_ws_hz / 2.0 / (self.target_bins as f64 - 1.0)
    }

    /// Output row of a folded frequency, rounding half up.
    pub fn out_bin(&self, folded_hz: f64) -> usize {
        ((folded_hz / self.out_bin_hz() + 0.5).floor() as usize).min(self.target_bins - 1)
    }

    fn power_floor(&self, full_scale_power: f64) -> f64 {
        self.amp_threshold_db.map_or(f64::NEG_INFINITY, |db| full_scale_power * 10f64.powf(db / 10.0))
    }

    fn check_grid(&self, spec: &Spectrogram) -> Result<(), ConvertError> {
        self.validate()?;
        if spec.origin != Origin::Mic {
            return Err(ConvertError::WrongOrigin(spec.origin));
        }
        let nyquist_hz = self.f_ws_hz / 2.0;
        if self.target_bins < 2 || spec.bin_hz > nyquist_hz {
            return Err(ConvertError::GridMismatch { target_bins: self.target_bins, mic_bin_hz: spec.bin_hz, nyquist_hz });
        }
        Ok(())
    }

    fn output_for(&self, spec: &Spectrogram) -> Spectrogram {
        let mut out = Spectrogram::zeros(spec.cols(), self.target_bins, spec.col_step_s, self.out_bin_hz(), Origin::Converted);
        out.t0_s = spec.t0_s;
        out.full_scale_power = spec.full_scale_power;
        out
    }
}

fn min_shift_range(band_high_hz: f64, f_ws_hz: f64) -> i64 {
    (band_high_hz / f_ws_hz).ceil() as i64
}

/// Mic rows whose centre lies inside the selection band.
fn band_rows(spec: &Spectrogram, params: &ConversionParams) -> impl Iterator<Item = (usize, f64)> {
    let (lo, hi) = (params.band_low_hz, params.band_high_hz);
    let bin_hz = spec.bin_hz;
    (0..spec.rows()).map(move |r| (r, r as f64 * bin_hz)).filter(move |&(_, f)| f >= lo && f <= hi)
}

/// Folds every selected mic bin onto the accelerometer grid, summing bins
/// that land together. Columns are carried over unchanged.
pub fn convert_spectrogram(spec: &Spectrogram, params: &ConversionParams) -> Result<Spectrogram, ConvertError> {
    params.check_grid(spec)?;
    let floor = params.power_floor(spec.full_scale_power);
    let targets: Vec<(usize, usize)> =
        band_rows(spec, params).map(|(r, f)| (r, params.out_bin(fold_frequency(f, params.f_ws_hz)))).collect();

    let mut out = params.output_for(spec);
    for c in 0..spec.cols() {
        let col = spec.column(c);
        for &(r, k) in &targets {
            let p = col[r];
            if p >= floor && p > 0.0 {
                out.add(c, k, p);
            }
        }
    }
    Ok(out)
}

/// The shift-search formulation of the conversion, kept as a reference.
///
/// For every selected bin it tries each `N` in the shift range and adds the
/// power wherever `0 < |f - N f_ws| <= f_ws/2`. It therefore drops bins that
/// fold exactly to DC and counts bins that fold exactly to Nyquist twice.
pub fn convert_by_shift_search(spec: &Spectrogram, params: &ConversionParams) -> Result<Spectrogram, ConvertError> {
    params.check_grid(spec)?;
    let floor = params.power_floor(spec.full_scale_power);
    let mut out = params.output_for(spec);
    for c in 0..spec.cols() {
        for (r, f_mic) in band_rows(spec, params) {
            let p = spec.get(c, r);
            if !(p >= floor && p > 0.0) {
                continue;
            }
            for n_shift in -params.n_shift_range..=params.n_shift_range {
                let f_w = (f_mic - n_shift as f64 * params.f_ws_hz).abs();
                if f_w <= params.f_ws_hz / 2.0 && f_w > 0.0 {
                    out.add(c, params.out_bin(f_w), p);
                }
            }
        }
    }
    Ok(out)
}
