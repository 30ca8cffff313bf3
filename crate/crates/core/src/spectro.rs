//! Short-time Fourier power spectrograms.
//!
//! Column `m` holds `|sum_n x(n) w(n - m p) e^{-j w n}|^2` for the one-sided
//! frequencies `k * fs / N`, `k = 0..=N/2`, with the window advanced by `p`
//! samples per column.

use std::io::{Read, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{Origin, Signal, Spectrogram};

#[derive(Debug, Error)]
pub enum SpectroError {
    #[error("signal has {len} samples, fewer than the {n_fft}-point window")]
    SignalTooShort { len: usize, n_fft: usize },
    #[error("invalid STFT parameters: {0}")]
    InvalidParams(String),
    #[error("malformed spectrogram dump: {0}")]
    MalformedDump(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rect,
}

impl Window {
    /// Periodic window coefficients of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub n_fft: usize,
    pub hop: usize,
    #[serde(default)]
    pub window: Window,
}

impl StftParams {
    pub fn new(n_fft: usize, hop: usize, window: Window) -> Result<Self, SpectroError> {
        let p = Self { n_fft, hop, window };
        p.validate()?;
        Ok(p)
    }

    /// 2048-point window, hop 512.
    pub fn mic() -> Self {
        Self { n_fft: 2048, hop: 512, window: Window::Hann }
    }

    /// 64-point window, hop 16.
    pub fn accel() -> Self {
        Self { n_fft: 64, hop: 16, window: Window::Hann }
    }

    pub fn validate(&self) -> Result<(), SpectroError> {
        if !self.n_fft.is_power_of_two() || self.n_fft < 2 {
            return Err(SpectroError::InvalidParams(format!("n_fft {} is not a power of two >= 2", self.n_fft)));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(SpectroError::InvalidParams(format!("hop {} not in 1..={}", self.hop, self.n_fft)));
        }
        Ok(())
    }
}

/// Power spectrogram of `sig`.
///
/// Shape: `floor((M - N) / p) + 1` columns by `N/2 + 1` rows.
pub fn stft_power(sig: &Signal, params: &StftParams, origin: Origin) -> Result<Spectrogram, SpectroError> {
    params.validate()?;
    let n = params.n_fft;
    if sig.len() < n {
        return Err(SpectroError::SignalTooShort { len: sig.len(), n_fft: n });
    }
    let fs = sig.sample_rate_hz();
    let cols = (sig.len() - n) / params.hop + 1;
    let rows = n / 2 + 1;
    let window = params.window.coefficients(n);
    let fft = FftPlanner::new().plan_fft_forward(n);

    let mut data = Vec::with_capacity(cols * rows);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for c in 0..cols {
        let frame = &sig.samples()[c * params.hop..c * params.hop + n];
        for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&window) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend(buf[..rows].iter().map(|z| z.norm_sqr()));
    }

    let mut spec = Spectrogram::from_columns(cols, rows, data, params.hop as f64 / fs, fs / n as f64, origin);
    spec.t0_s = n as f64 / 2.0 / fs;
    let gain: f64 = window.iter().sum::<f64>() / 2.0;
    spec.full_scale_power = gain * gain;
    Ok(spec)
}

/// Columns whose peak power is below this emit no sweep point.
pub const SWEEP_FLOOR: f64 = 1e-12;

/// Per-column peak frequency: the "frequency sweeping curve".
pub fn sweep_curve(spec: &Spectrogram) -> Vec<(f64, Option<f64>)> {
    spec.columns()
        .enumerate()
        .map(|(c, col)| {
            let (k, &p) = col.iter().enumerate().fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            (spec.col_time_s(c), (p >= SWEEP_FLOOR).then_some(k as f64 * spec.bin_hz))
        })
        .collect()
}

/// Header line of the spectrogram dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub cols: usize,
    pub rows: usize,
    pub col_step_s: f64,
    pub bin_hz: f64,
    pub origin: Origin,
    #[serde(default)]
    pub t0_s: f64,
    #[serde(default = "one")]
    pub full_scale_power: f64,
}

fn one() -> f64 {
    1.0
}

/// Writes a JSON header line followed by `rows x cols` little-endian f32
/// values in row-major order (frequency row by frequency row).
pub fn write_dump<W: Write>(mut out: W, spec: &Spectrogram) -> Result<(), SpectroError> {
    let header = DumpHeader {
        cols: spec.cols(),
        rows: spec.rows(),
        col_step_s: spec.col_step_s,
        bin_hz: spec.bin_hz,
        origin: spec.origin,
        t0_s: spec.t0_s,
        full_scale_power: spec.full_scale_power,
    };
    let mut line = serde_json::to_vec(&header).map_err(|e| SpectroError::MalformedDump(e.to_string()))?;
    line.push(b'\n');
    out.write_all(&line)?;
    let mut body = Vec::with_capacity(4 * spec.cols() * spec.rows());
    for r in 0..spec.rows() {
        for c in 0..spec.cols() {
            body.extend_from_slice(&(spec.get(c, r) as f32).to_le_bytes());
        }
    }
    out.write_all(&body)?;
    out.flush()?;
    Ok(())
}

pub fn read_dump<R: Read>(mut input: R) -> Result<Spectrogram, SpectroError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| SpectroError::MalformedDump("no header line".into()))?;
    let header: DumpHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| SpectroError::MalformedDump(e.to_string()))?;
    let body = &bytes[nl + 1..];
    if body.len() != 4 * header.cols * header.rows {
        return Err(SpectroError::MalformedDump(format!("expected {} payload bytes, found {}", 4 * header.cols * header.rows, body.len())));
    }
    let mut data = vec![0.0; header.cols * header.rows];
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let (r, c) = (i / header.cols, i % header.cols);
        let v = f64::from(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
        if !(v.is_finite() && v >= 0.0) {
            return Err(SpectroError::MalformedDump(format!("bad value {v} at row {r} col {c}")));
        }
        data[c * header.rows + r] = v;
    }
    let mut spec = Spectrogram::from_columns(header.cols, header.rows, data, header.col_step_s, header.bin_hz, header.origin);
    spec.t0_s = header.t0_s;
    spec.full_scale_power = header.full_scale_power;
    Ok(spec)
}
