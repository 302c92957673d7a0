//! Fixed-kernel Savitzky–Golay smoothing of an input sequence.

use crate::dynamics::{ControlInput, InputBounds};
use crate::error::{Error, Result};

/// Odd-length convolution kernel, stored as integer-like taps plus their sum
/// so the default 5-point quadratic kernel is `(-3, 12, 17, 12, -3) / 35`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingKernel {
    taps: Vec<f64>,
    norm: f64,
}

impl Default for SmoothingKernel {
    fn default() -> Self {
        Self {
            taps: vec![-3.0, 12.0, 17.0, 12.0, -3.0],
            norm: 35.0,
        }
    }
}

impl SmoothingKernel {
    /// Taps are normalised by their sum.
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() || taps.len().is_multiple_of(2) {
            return Err(Error::invalid("sg_coeffs", "needs an odd number of taps"));
        }
        if !taps.iter().all(|t| t.is_finite()) {
            return Err(Error::invalid("sg_coeffs", "taps must be finite"));
        }
        let norm: f64 = taps.iter().sum();
        if norm == 0.0 {
            return Err(Error::invalid("sg_coeffs", "taps must not sum to zero"));
        }
        Ok(Self { taps, norm })
    }

    /// Pass-through kernel.
    pub fn identity() -> Self {
        Self {
            taps: vec![1.0],
            norm: 1.0,
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn half_width(&self) -> usize {
        self.taps.len() / 2
    }

    /// Normalised coefficients.
    pub fn coefficients(&self) -> Vec<f64> {
        self.taps.iter().map(|t| t / self.norm).collect()
    }

    /// Smooths one channel. The signal is extended by repeating its first and
    /// last samples `half_width` times.
    ///
    /// Evaluated as `u_t + sum_k c_k (u_{t+k} - u_t) / sum(c)`, which equals the
    /// plain convolution and returns constants unchanged bit for bit.
    pub fn apply(&self, signal: &[f64]) -> Vec<f64> {
        let n = signal.len();
        let h = self.half_width() as isize;
        (0..n as isize)
            .map(|t| {
                let centre = signal[t as usize];
                let mut acc = 0.0;
                for (k, tap) in (-h..=h).zip(&self.taps) {
                    if k == 0 {
                        continue;
                    }
                    let j = (t + k).clamp(0, n as isize - 1) as usize;
                    acc += tap * (signal[j] - centre);
                }
                centre + acc / self.norm
            })
            .collect()
    }
}

/// Smooths both channels and re-clamps to the input box.
pub fn smooth(inputs: &[ControlInput], kernel: &SmoothingKernel, bounds: &InputBounds) -> Vec<ControlInput> {
    let a: Vec<f64> = inputs.iter().map(|u| u.a).collect();
    let omega: Vec<f64> = inputs.iter().map(|u| u.omega).collect();
    kernel
        .apply(&a)
        .into_iter()
        .zip(kernel.apply(&omega))
        .map(|(a, omega)| bounds.clamp(ControlInput::new(a, omega)))
        .collect()
}
