//! Butterworth IIR design as cascaded biquads, applied forward-backward.

use std::f64::consts::PI;

/// One second-order section in transposed direct form II, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// DC gain `H(1)`.
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// State that makes a unit step input appear to have been running forever.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        [g - self.b[0], self.b[2] - self.a[1] * g]
    }

    fn run(&self, x: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z[0];
            z[0] = b1 * input - a1 * y + z[1];
            z[1] = b2 * input - a2 * y;
            *v = y;
        }
    }

    /// Magnitude response at `f_hz`.
    pub fn gain_at(&self, f_hz: f64, fs_hz: f64) -> f64 {
        let w = 2.0 * PI * f_hz / fs_hz;
        let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
        let num = (self.b[0] + self.b[1] * c1 + self.b[2] * c2, -(self.b[1] * s1 + self.b[2] * s2));
        let den = (1.0 + self.a[0] * c1 + self.a[1] * c2, -(self.a[0] * s1 + self.a[1] * s2));
        (num.0.hypot(num.1)) / (den.0.hypot(den.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Lowpass,
    Highpass,
}

/// A cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos(pub Vec<Biquad>);

impl Sos {
    /// Butterworth design of even `order` via the bilinear transform with the
    /// cutoff prewarped, one biquad per conjugate pole pair.
    pub fn butterworth(kind: Kind, order: usize, cutoff_hz: f64, fs_hz: f64) -> Self {
        assert!(order >= 2 && order.is_multiple_of(2), "order must be even");
        assert!(cutoff_hz > 0.0 && cutoff_hz < fs_hz / 2.0);
        let w0 = 2.0 * PI * cutoff_hz / fs_hz;
        let (sin, cos) = w0.sin_cos();
        let sections = (1..=order / 2)
            .map(|k| {
                let q = 1.0 / (2.0 * ((2 * k - 1) as f64 * PI / (2 * order) as f64).sin());
                let alpha = sin / (2.0 * q);
                let a0 = 1.0 + alpha;
                let b = match kind {
                    Kind::Lowpass => [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0],
                    Kind::Highpass => [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0],
                };
                Biquad { b: b.map(|v| v / a0), a: [-2.0 * cos / a0, (1.0 - alpha) / a0] }
            })
            .collect();
        Sos(sections)
    }

    pub fn then(mut self, other: Sos) -> Self {
        self.0.extend(other.0);
        self
    }

    /// Magnitude response of a single forward pass.
    pub fn gain_at(&self, f_hz: f64, fs_hz: f64) -> f64 {
        self.0.iter().map(|s| s.gain_at(f_hz, fs_hz)).product()
    }

    /// Causal filtering with steady-state initial conditions scaled by `x[0]`.
    fn run_steady(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let mut level = x0;
        for s in &self.0 {
            let z = s.step_state().map(|v| v * level);
            s.run(x, z);
            level *= s.dc_gain();
        }
    }

    /// Zero-phase filtering: odd-extended edges, forward pass, reverse pass.
    ///
    /// The effective magnitude response is the square of [`Sos::gain_at`].
    /// The operation is linear in `x` and preserves length.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = (3 * (2 * self.0.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        self.run_steady(&mut ext);
        ext.reverse();
        self.run_steady(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn butterworth_half_power_at_cutoff() {
        for kind in [Kind::Lowpass, Kind::Highpass] {
            for order in [2, 4, 6] {
                let sos = Sos::butterworth(kind, order, 300.0, 8000.0);
                let g = sos.gain_at(300.0, 8000.0);
                assert!((g - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9, "{kind:?} {order}: {g}");
            }
        }
    }

    #[test]
    fn butterworth_is_maximally_flat() {
        let lp = Sos::butterworth(Kind::Lowpass, 4, 1000.0, 8000.0);
        assert!((lp.gain_at(0.0, 8000.0) - 1.0).abs() < 1e-12);
        assert!(lp.gain_at(3999.0, 8000.0) < 1e-6);
        let hp = Sos::butterworth(Kind::Highpass, 4, 30.0, 200.0);
        assert!(hp.gain_at(0.0, 200.0) < 1e-12);
        assert!((hp.gain_at(100.0, 200.0) - 1.0).abs() < 1e-9);
        // monotone in the passband-to-stopband transition
        let mut prev = 0.0;
        for f in 1..100 {
            let g = hp.gain_at(f as f64, 200.0);
            assert!(g >= prev - 1e-12);
            prev = g;
        }
    }

    #[test]
    fn step_state_is_steady() {
        let sos = Sos::butterworth(Kind::Lowpass, 4, 500.0, 8000.0);
        let mut x = vec![1.0; 50];
        sos.run_steady(&mut x);
        for v in x {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filtfilt_short_inputs() {
        let sos = Sos::butterworth(Kind::Highpass, 4, 30.0, 200.0);
        assert!(sos.filtfilt(&[]).is_empty());
        assert_eq!(sos.filtfilt(&[0.5]).len(), 1);
        assert_eq!(sos.filtfilt(&[0.5, 1.0, 2.0]).len(), 3);
    }
}
