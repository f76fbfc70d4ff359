//! Real signals sampled at the midpoints of `M` equal cells of `[0, 1)`,
//! with the spectral helpers shared by the harmonic-analysis experiments.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// A real function tabulated at `x_i = (i + 1/2)/M`, `M` a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal {
    values: Vec<f64>,
}

impl GridSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let m = values.len();
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "signal length must be a power of two ≥ 8, got {m}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("signal values must be finite".into()));
        }
        Ok(Self { values })
    }

    /// Tabulate `f` at the cell midpoints.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            (0..m)
                .map(|i| f((i as f64 + 0.5) / m as f64))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Midpoint abscissa of cell `i`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.values.len() as f64
    }

    /// Grid-average `L²` norm.
    pub fn l2(&self) -> f64 {
        let n = self.values.len();
        (crate::numerics::pairwise_sum(0, n, &|i| self.values[i] * self.values[i]) / n as f64)
            .sqrt()
    }

    pub fn mean(&self) -> f64 {
        crate::numerics::pairwise_sum(0, self.values.len(), &|i| self.values[i])
            / self.values.len() as f64
    }
}

/// Forward DFT of a real signal (unnormalized, full complex spectrum).
pub(crate) fn spectrum(signal: &GridSignal) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = signal
        .values()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf
}

/// Inverse DFT back to a real signal (applies the 1/M normalization and
/// drops the numerically-zero imaginary parts).
pub(crate) fn from_spectrum(mut spec: Vec<Complex<f64>>) -> GridSignal {
    let m = spec.len();
    FftPlanner::new().plan_fft_inverse(m).process(&mut spec);
    let scale = 1.0 / m as f64;
    GridSignal {
        values: spec.iter().map(|c| c.re * scale).collect(),
    }
}

/// Signed frequency of spectrum bin `i` for length `m`.
pub(crate) fn bin_frequency(i: usize, m: usize) -> i64 {
    if i <= m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(GridSignal::new(vec![0.0; 7]).is_err());
        assert!(GridSignal::new(vec![0.0; 12]).is_err());
        assert!(GridSignal::new(vec![f64::NAN; 8]).is_err());
        assert!(GridSignal::new(vec![0.0; 8]).is_ok());
    }

    #[test]
    fn parseval() {
        let s = GridSignal::from_fn(1024, |x| (2.0 * std::f64::consts::PI * 3.0 * x).cos() + 0.25)
            .unwrap();
        let spec = spectrum(&s);
        let m = s.len() as f64;
        let lhs = s.l2() * s.l2();
        let rhs: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() / (m * m);
        assert!((lhs - rhs).abs() / lhs < 1e-10);
    }

    #[test]
    fn round_trip() {
        let s = GridSignal::from_fn(256, |x| (x * 7.0).sin() + x).unwrap();
        let back = from_spectrum(spectrum(&s));
        for (a, b) in s.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn frequencies() {
        assert_eq!(bin_frequency(0, 8), 0);
        assert_eq!(bin_frequency(3, 8), 3);
        assert_eq!(bin_frequency(4, 8), 4);
        assert_eq!(bin_frequency(5, 8), -3);
        assert_eq!(bin_frequency(7, 8), -1);
    }
}
