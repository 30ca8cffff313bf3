//! End-to-end verification of one microphone recording against one
//! accelerometer trace.

use serde::{Deserialize, Serialize};

use super::{normalize_2d, resample_time, shift_corr, RejectReason, SimilarityReport};
use crate::config::VerifyConfig;
use crate::convert::convert_spectrogram;
use crate::preprocess::{bandpass_mic, highpass_accel, segment_accel_assisted, segment_mic, Channel, PreprocessError, Segment};
use crate::signal::{select_axis, AccelTrace, Origin, Signal};
use crate::spectro::stft_power;
use crate::Error;

/// Shortest command span analysed, in microphone columns.
const MIN_SPAN_COLS: f64 = 6.0;

/// Runs the full pipeline and applies the acceptance threshold.
///
/// The microphone is band-passed and segmented; the accelerometer axis with
/// the most vibration energy is high-passed and its onset located near the
/// microphone onset. Both channels are cut around the command (with room for
/// the shift search), turned into spectrograms, the microphone one folded onto
/// the accelerometer grid, both resampled onto a common time grid, normalized
/// per column, and compared by shift 2-D correlation.
///
/// `best_shift_s` in the report is the delay of the accelerometer content
/// relative to the microphone content on the two recorders' own clocks.
pub fn verify(mic: &Signal, accel: &AccelTrace, config: &VerifyConfig) -> Result<SimilarityReport, Error> {
    config.validate()?;
    let f = &config.filters;
    let mic_bp = bandpass_mic(mic, f.mic_band_low_hz, f.mic_band_high_hz)?;
    let (mic_seg, mic_found) = match segment_mic(&mic_bp, &config.mic_segment) {
        Ok(seg) => (seg, true),
        Err(PreprocessError::NoCommandDetected) => {
            (Segment { start_s: 0.0, end_s: mic.duration_s(), source: Channel::Mic, fallback: true }, false)
        }
        Err(e) => return Err(e.into()),
    };

    let axes = accel.regularize()?;
    let acc_hp = highpass_accel(select_axis(&axes).1, f.accel_highpass_hz)?;
    let acc_seg = segment_accel_assisted(&acc_hp, &mic_seg, config.onset_search_s, &config.accel_segment);
    let delta = if acc_seg.fallback || !mic_found { 0.0 } else { acc_seg.start_s - (mic_seg.start_s + config.mic_segment.window_s) };

    // analysis span: the command plus the shift margin and half an STFT window
    let mic_fs = mic.sample_rate_hz();
    let acc_fs = acc_hp.sample_rate_hz();
    let mic_col_s = config.mic_stft.hop as f64 / mic_fs;
    let half_window = 0.5 * (config.mic_stft.n_fft as f64 / mic_fs).max(config.accel_stft.n_fft as f64 / acc_fs);
    let pad = config.max_shift_s + half_window;
    let len = mic_seg.duration_s().max(MIN_SPAN_COLS * mic_col_s);
    let (lo, hi) = (mic_seg.start_s - pad, mic_seg.start_s + len + pad);

    let mic_spec = stft_power(&mic_bp.window_padded(lo, hi), &config.mic_stft, Origin::Mic)?;
    let acc_spec = stft_power(&acc_hp.window_padded(lo + delta, hi + delta), &config.accel_stft, Origin::Accel)?;
    let conv = convert_spectrogram(&mic_spec, &config.conversion(acc_fs))?;

    let step = config.grid_step_s.unwrap_or(conv.col_step_s);
    let t_start = conv.t0_s.max(acc_spec.t0_s);
    let t_end = conv.col_time_s(conv.cols() - 1).min(acc_spec.col_time_s(acc_spec.cols() - 1));
    let cols = ((t_end - t_start) / step + 1e-9).floor().max(0.0) as usize + 1;
    // only rows the accelerometer high-pass leaves intact are comparable
    let r0 = ((f.accel_highpass_hz / acc_spec.bin_hz).ceil() as usize).min(acc_spec.rows() - 1);
    let rows = acc_spec.rows() - r0;
    let conv_n = normalize_2d(&resample_time(&conv, t_start, step, cols)?.slice_rows(r0, rows));
    let acc_n = normalize_2d(&resample_time(&acc_spec, t_start, step, cols)?.slice_rows(r0, rows));

    let mut report = shift_corr(&conv_n, &acc_n, config.max_shift_s, config.correlation)?;
    report.reject_reason = if acc_seg.fallback || acc_spec.is_constant() {
        Some(RejectReason::EmptyAccel)
    } else if !mic_found || conv.is_constant() {
        Some(RejectReason::EmptyMic)
    } else {
        report.reject_reason
    };
    report.best_shift_s += delta;
    for point in &mut report.curve {
        point.0 += delta;
    }
    Ok(report.decide(config.threshold))
}

/// Wire form of a verification result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub verdict: super::Verdict,
    pub score: f64,
    pub best_shift_s: f64,
    pub reason: Option<RejectReason>,
    pub config_hash: String,
}

impl VerdictJson {
    pub fn new(report: &SimilarityReport, config: &VerifyConfig) -> Self {
        Self {
            verdict: report.verdict,
            score: report.peak_corr,
            best_shift_s: report.best_shift_s,
            reason: report.reject_reason,
            config_hash: config.config_hash(),
        }
    }
}

/// `{"verdict":..,"score":..,"best_shift_s":..,"reason":..,"config_hash":..}`
pub fn verdict_json(report: &SimilarityReport, config: &VerifyConfig) -> String {
    serde_json::to_string(&VerdictJson::new(report, config)).expect("verdict serializes")
}
