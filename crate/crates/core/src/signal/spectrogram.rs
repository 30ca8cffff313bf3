use serde::{Deserialize, Serialize};

/// Which sensor (or transformation) produced a spectrogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Mic,
    Accel,
    Converted,
}

/// Time × frequency power matrix.
///
/// Stored column-major: each column is one power spectrum, `rows` bins long,
/// with bin `r` centred on `r * bin_hz`. Column `c` is centred at
/// `t0_s + c * col_step_s` seconds from the start of the analysed signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<f64>,
    cols: usize,
    rows: usize,
    pub col_step_s: f64,
    pub bin_hz: f64,
    pub t0_s: f64,
    /// Bin power of a full-scale sinusoid sitting on a bin centre; 0 dBFS reference.
    pub full_scale_power: f64,
    pub origin: Origin,
}

impl Spectrogram {
    /// Builds a spectrogram from column-major data. Panics if the data length
    /// does not match or any entry is negative or non-finite.
    pub fn from_columns(cols: usize, rows: usize, data: Vec<f64>, col_step_s: f64, bin_hz: f64, origin: Origin) -> Self {
        assert_eq!(data.len(), cols * rows, "spectrogram data length");
        assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0), "spectrogram entries must be finite and >= 0");
        Self { data, cols, rows, col_step_s, bin_hz, t0_s: 0.0, full_scale_power: 1.0, origin }
    }

    pub fn zeros(cols: usize, rows: usize, col_step_s: f64, bin_hz: f64, origin: Origin) -> Self {
        Self::from_columns(cols, rows, vec![0.0; cols * rows], col_step_s, bin_hz, origin)
    }

    /// Copies metadata from `self` onto new data of a possibly different shape.
    pub(crate) fn with_data(&self, cols: usize, rows: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), cols * rows);
        Self { data, cols, rows, ..self.clone() }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.cols == 0 || self.rows == 0
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub(crate) fn add(&mut self, col: usize, row: usize, v: f64) {
        self.data[col * self.rows + row] += v;
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.rows.max(1)).take(self.cols)
    }

    /// Column-major backing storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn total_power(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Centre time of column `col`.
    pub fn col_time_s(&self, col: usize) -> f64 {
        self.t0_s + col as f64 * self.col_step_s
    }

    /// Multiplies every entry by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c >= 0.0 && c.is_finite());
        self.with_data(self.cols, self.rows, self.data.iter().map(|v| v * c).collect())
    }

    /// True when every entry equals the first one (including the empty case).
    pub fn is_constant(&self) -> bool {
        match self.data.first() {
            None => true,
            Some(&v0) => self.data.iter().all(|&v| v == v0),
        }
    }

    /// Rows `[start, start + len)`; bin centres keep their frequencies, so
    /// row 0 of the result sits at `start * bin_hz`.
    pub fn slice_rows(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.rows);
        let data = self.columns().flat_map(|c| c[start..start + len].iter().copied()).collect();
        self.with_data(self.cols, len, data)
    }

    /// Columns `[start, start + len)`.
    pub fn slice_cols(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.cols);
        let data = self.data[start * self.rows..(start + len) * self.rows].to_vec();
        let mut out = self.with_data(len, self.rows, data);
        out.t0_s = self.col_time_s(start);
        out
    }
}
