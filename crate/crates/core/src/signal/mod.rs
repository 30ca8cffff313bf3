//! Sampled signals, accelerometer traces and spectrogram storage.

mod accel_csv;
mod spectrogram;
mod wav;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

pub use accel_csv::{format_accel_csv, load_accel_csv, parse_accel_csv, write_accel_csv};
pub use spectrogram::{Origin, Spectrogram};
pub use wav::{decode_wav, encode_wav, load_wav, write_wav, WavEncoding};

/// Lower edge of the band used when ranking accelerometer axes.
pub const AXIS_BAND_LOW_HZ: f64 = 30.0;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt wav header: {0}")]
    CorruptHeader(String),
    #[error("malformed csv row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("timestamps decrease at line {line}")]
    NonMonotonicTime { line: usize },
    #[error("accelerometer trace has fewer than two samples")]
    EmptyTrace,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A uniformly sampled, real-valued time series.
///
/// Audio is kept at digital full scale (±1.0); accelerometer axes are in m/s².
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self, SignalError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(SignalError::InvalidRate(sample_rate_hz));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self, SignalError> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    /// Builds a signal by evaluating `f` at each sample time.
    pub fn from_fn(len: usize, sample_rate_hz: f64, f: impl FnMut(f64) -> f64) -> Result<Self, SignalError> {
        let mut f = f;
        let samples = (0..len).map(|n| f(n as f64 / sample_rate_hz)).collect();
        Self::new(samples, sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Replaces the samples, keeping the rate. Used by filters that preserve length.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self { samples, sample_rate_hz: self.sample_rate_hz }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        self.with_samples(self.samples.iter().map(|s| s * gain).collect())
    }

    /// Samples in `[start_s, end_s)`, zero-filled wherever the span leaves the recording.
    pub fn window_padded(&self, start_s: f64, end_s: f64) -> Self {
        let first = (start_s * self.sample_rate_hz).round() as i64;
        let last = (end_s * self.sample_rate_hz).round() as i64;
        let n = self.samples.len() as i64;
        let out = (first..last.max(first)).map(|i| if (0..n).contains(&i) { self.samples[i as usize] } else { 0.0 }).collect();
        self.with_samples(out)
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Root-mean-square amplitude.
    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }
}

/// A timestamped three-axis accelerometer record.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelTrace {
    t: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    nominal_rate_hz: f64,
}

impl AccelTrace {
    /// Validates the columns and derives the nominal rate as `round(1 / median Δt)`.
    pub fn new(t: Vec<f64>, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self, SignalError> {
        let n = t.len();
        if x.len() != n || y.len() != n || z.len() != n {
            return Err(SignalError::MalformedRow { line: 0, reason: "column lengths differ".into() });
        }
        if n < 2 {
            return Err(SignalError::EmptyTrace);
        }
        for (i, col) in [&t, &x, &y, &z].into_iter().enumerate() {
            if let Some(j) = col.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::MalformedRow {
                    line: j + 2,
                    reason: format!("non-finite value in column {}", ["t", "x", "y", "z"][i]),
                });
            }
        }
        if let Some(i) = t.windows(2).position(|w| w[1] < w[0]) {
            // header is line 1, first row line 2
            return Err(SignalError::NonMonotonicTime { line: i + 3 });
        }
        let mut dts: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        dts.sort_by(f64::total_cmp);
        let median = median_sorted(&dts);
        if median <= 0.0 {
            return Err(SignalError::NonMonotonicTime { line: 2 });
        }
        let nominal_rate_hz = (1.0 / median).round().max(1.0);
        Ok(Self { t, x, y, z, nominal_rate_hz })
    }

    /// A trace sampled on the exact grid `t0 + k / rate`.
    pub fn uniform(t0: f64, rate_hz: f64, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self, SignalError> {
        let t = (0..x.len()).map(|k| t0 + k as f64 / rate_hz).collect();
        Self::new(t, x, y, z)
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn nominal_rate_hz(&self) -> f64 {
        self.nominal_rate_hz
    }

    /// Linearly resamples every axis onto the uniform grid `t[0] + k / nominal_rate`.
    ///
    /// Grid points that coincide with a recorded timestamp reproduce the
    /// recorded sample exactly, so uniform input passes through unchanged.
    pub fn regularize(&self) -> Result<[Signal; 3], SignalError> {
        if self.t.len() < 2 {
            return Err(SignalError::EmptyTrace);
        }
        let rate = self.nominal_rate_hz;
        let t0 = self.t[0];
        let span = self.t[self.t.len() - 1] - t0;
        let count = (span * rate + 1e-9).floor() as usize + 1;

        let mut idx = vec![0usize; count];
        let mut frac = vec![0f64; count];
        let mut seg = 0usize;
        for k in 0..count {
            let tau = t0 + k as f64 / rate;
            while seg + 1 < self.t.len() - 1 && self.t[seg + 1] <= tau {
                seg += 1;
            }
            let (a, b) = (self.t[seg], self.t[seg + 1]);
            idx[k] = seg;
            frac[k] = if b > a { ((tau - a) / (b - a)).clamp(0.0, 1.0) } else { 0.0 };
        }
        let resample = |col: &[f64]| -> Vec<f64> {
            idx.iter()
                .zip(&frac)
                .map(|(&i, &w)| {
                    if w == 0.0 {
                        col[i]
                    } else if w == 1.0 {
                        col[i + 1]
                    } else {
                        col[i] + (col[i + 1] - col[i]) * w
                    }
                })
                .collect()
        };
        Ok([Signal::new(resample(&self.x), rate)?, Signal::new(resample(&self.y), rate)?, Signal::new(resample(&self.z), rate)?])
    }
}

/// Accelerometer axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Picks the axis carrying the most energy between 30 Hz and Nyquist after
/// mean removal. Ties resolve to the earlier axis (x, then y, then z).
pub fn select_axis(axes: &[Signal; 3]) -> (Axis, &Signal) {
    let energies: Vec<f64> = axes.iter().map(|s| band_energy(s, AXIS_BAND_LOW_HZ)).collect();
    let mut best = 0;
    for i in 1..3 {
        if energies[i] > energies[best] {
            best = i;
        }
    }
    let axis = [Axis::X, Axis::Y, Axis::Z][best];
    (axis, &axes[best])
}

/// One-sided spectral energy of the mean-removed signal at or above `low_hz`.
pub(crate) fn band_energy(sig: &Signal, low_hz: f64) -> f64 {
    let n = sig.len();
    if n == 0 {
        return 0.0;
    }
    let mean = sig.mean();
    let mut buf: Vec<Complex<f64>> = sig.samples().iter().map(|&s| Complex::new(s - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let rate = sig.sample_rate_hz();
    (0..=n / 2)
        .filter(|&k| k as f64 * rate / n as f64 >= low_hz)
        .map(|k| {
            let w = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
            w * buf[k].norm_sqr()
        })
        .sum()
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
