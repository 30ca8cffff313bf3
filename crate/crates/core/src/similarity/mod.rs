//! Spectrogram alignment, normalization and shift 2-D correlation.

mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::CorrelationMode;
use crate::signal::Spectrogram;

pub use verify::{verdict_json, verify, VerdictJson};

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("spectrogram is empty")]
    EmptySpectrogram,
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("comparison window of {0} columns is too small (need 4)")]
    WindowTooSmall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    LowSimilarity,
    EmptyAccel,
    EmptyMic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub peak_corr: f64,
    /// Delay of the accelerometer content relative to the microphone.
    pub best_shift_s: f64,
    /// `(shift_s, corr)` for every tried shift, in increasing shift order.
    pub curve: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub reject_reason: Option<RejectReason>,
    /// The peak sits on the edge of the shift range.
    pub edge_peak: bool,
}

impl SimilarityReport {
    /// Applies threshold `eta` unless a reason is already set.
    pub(crate) fn decide(mut self, eta: f64) -> Self {
        if self.reject_reason.is_none() && !(self.peak_corr >= eta) {
            self.reject_reason = Some(RejectReason::LowSimilarity);
        }
        self.verdict = if self.reject_reason.is_none() { Verdict::Accept } else { Verdict::Reject };
        self
    }
}

/// Resamples every row linearly onto `target_cols` evenly spaced columns
/// spanning the same time extent.
pub fn interpolate_time(spec: &Spectrogram, target_cols: usize) -> Result<Spectrogram, SimilarityError> {
    if spec.is_empty() {
        return Err(SimilarityError::EmptySpectrogram);
    }
    let target_cols = target_cols.max(1);
    let span = (spec.cols() - 1) as f64;
    let ratio = if target_cols > 1 { span / (target_cols - 1) as f64 } else { 0.0 };
    let positions: Vec<f64> = (0..target_cols).map(|j| j as f64 * ratio).collect();
    let mut out = sample_columns(spec, &positions);
    out.col_step_s = spec.col_step_s * ratio;
    Ok(out)
}

/// Resamples onto columns centred at `t_start + j * step_s`, `j < cols`,
/// interpolating linearly between the nearest input columns and holding the
/// edge columns beyond the input extent.
pub fn resample_time(spec: &Spectrogram, t_start: f64, step_s: f64, cols: usize) -> Result<Spectrogram, SimilarityError> {
    if spec.is_empty() {
        return Err(SimilarityError::EmptySpectrogram);
    }
    let positions: Vec<f64> = (0..cols).map(|j| (t_start + j as f64 * step_s - spec.t0_s) / spec.col_step_s).collect();
    let mut out = sample_columns(spec, &positions);
    out.col_step_s = step_s;
    out.t0_s = t_start;
    Ok(out)
}

/// Columns at fractional input positions.
fn sample_columns(spec: &Spectrogram, positions: &[f64]) -> Spectrogram {
    let rows = spec.rows();
    let last = spec.cols() - 1;
    let mut data = Vec::with_capacity(positions.len() * rows);
    for &pos in positions {
        let pos = pos.clamp(0.0, last as f64);
        let i = (pos.floor() as usize).min(last);
        let w = pos - i as f64;
        let a = spec.column(i);
        if w == 0.0 || i == last {
            data.extend_from_slice(a);
        } else {
            let b = spec.column(i + 1);
            data.extend(a.iter().zip(b).map(|(x, y)| x + w * (y - x)));
        }
    }
    spec.with_data(positions.len(), rows, data)
}

/// Per-column min-max scaling into `[0, 1]`; constant columns become zeros.
pub fn normalize_2d(spec: &Spectrogram) -> Spectrogram {
    let mut data = Vec::with_capacity(spec.data().len());
    for col in spec.columns() {
        let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi > lo {
            let range = hi - lo;
            data.extend(col.iter().map(|&v| ((v - lo) / range).clamp(0.0, 1.0)));
        } else {
            data.extend(std::iter::repeat_n(0.0, col.len()));
        }
    }
    spec.with_data(spec.cols(), spec.rows(), data)
}

/// Correlation of two equally shaped matrices; 0 when either is constant.
pub fn corr2d(a: &Spectrogram, b: &Spectrogram) -> Result<f64, SimilarityError> {
    corr2d_with(a, b, CorrelationMode::Pearson)
}

pub fn corr2d_with(a: &Spectrogram, b: &Spectrogram, mode: CorrelationMode) -> Result<f64, SimilarityError> {
    if (a.cols(), a.rows()) != (b.cols(), b.rows()) {
        return Err(SimilarityError::ShapeMismatch((a.cols(), a.rows()), (b.cols(), b.rows())));
    }
    Ok(corr_slices(a.data(), b.data(), mode))
}

fn corr_slices(a: &[f64], b: &[f64], mode: CorrelationMode) -> f64 {
    let n = a.len() as f64;
    if a.is_empty() {
        return 0.0;
    }
    let (ma, mb) = match mode {
        CorrelationMode::Pearson => (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n),
        CorrelationMode::Cosine => (0.0, 0.0),
    };
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let constant = |s: &[f64]| s.iter().all(|&v| v == s[0]);
    if saa <= 0.0 || sbb <= 0.0 || constant(a) || constant(b) {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Slides the accelerometer spectrogram against the fixed converted-mic
/// spectrogram by whole columns within `±max_shift_s`.
///
/// Both inputs must share shape and column step. The compared window is the
/// full extent minus the shift margin on each side; a positive shift means the
/// accelerometer content lags the microphone. The verdict is provisional: the
/// caller applies the threshold.
pub fn shift_corr(
    mic: &Spectrogram,
    acc: &Spectrogram,
    max_shift_s: f64,
    mode: CorrelationMode,
) -> Result<SimilarityReport, SimilarityError> {
    if (mic.cols(), mic.rows()) != (acc.cols(), acc.rows()) {
        return Err(SimilarityError::ShapeMismatch((mic.cols(), mic.rows()), (acc.cols(), acc.rows())));
    }
    let cols = mic.cols();
    let step = mic.col_step_s;
    let k = if step > 0.0 { (max_shift_s / step + 1e-9).floor() as usize } else { 0 };
    let window = cols.saturating_sub(2 * k);
    if window < 4 {
        return Err(SimilarityError::WindowTooSmall(window));
    }
    let rows = mic.rows();
    let fixed = &mic.data()[k * rows..(k + window) * rows];

    let curve: Vec<(f64, f64)> = (-(k as i64)..=k as i64)
        .map(|s| {
            let start = (k as i64 + s) as usize;
            let moving = &acc.data()[start * rows..(start + window) * rows];
            (s as f64 * step, corr_slices(fixed, moving, mode))
        })
        .collect();

    // best score; ties go to the smallest |shift|, then the negative one
    let (best_idx, _) = curve.iter().enumerate().fold((k, f64::NEG_INFINITY), |(bi, bv), (i, &(_, v))| {
        let (di, dbi) = ((i as i64 - k as i64).abs(), (bi as i64 - k as i64).abs());
        if v > bv || (v == bv && (di < dbi || (di == dbi && i < bi))) {
            (i, v)
        } else {
            (bi, bv)
        }
    });
    let (best_shift_s, peak_corr) = curve[best_idx];
    let reject_reason = if acc.is_constant() {
        Some(RejectReason::EmptyAccel)
    } else if mic.is_constant() {
        Some(RejectReason::EmptyMic)
    } else {
        None
    };
    Ok(SimilarityReport {
        peak_corr,
        best_shift_s,
        curve,
        verdict: Verdict::Reject,
        reject_reason,
        edge_peak: k > 0 && (best_idx == 0 || best_idx == 2 * k),
    })
}
