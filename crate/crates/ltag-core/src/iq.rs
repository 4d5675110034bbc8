//! Timestamped complex baseband sample streams.
//!
//! An [`IqStream`] is the universal currency between the synthesis, channel
//! and receiver stages: a contiguous run of complex samples at a declared
//! sample rate, positioned on the global sample timeline (sample 0 is the
//! scenario epoch).

use num_complex::Complex64;

/// A contiguous, timestamped segment of complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IqStream {
    /// Sample rate in Hz.
    pub sample_rate: f64,
    /// Index of the first sample on the global timeline.
    pub start_sample: i64,
    /// The samples themselves.
    pub samples: Vec<Complex64>,
}

impl IqStream {
    pub fn new(sample_rate: f64, start_sample: i64, samples: Vec<Complex64>) -> Self {
        Self { sample_rate, start_sample, samples }
    }

    /// Zero-filled stream of `len` samples.
    pub fn zeros(sample_rate: f64, start_sample: i64, len: usize) -> Self {
        Self::new(sample_rate, start_sample, vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// One past the last sample index on the global timeline.
    pub fn end_sample(&self) -> i64 {
        self.start_sample + self.samples.len() as i64
    }

    /// Timestamp of the first sample in seconds since the epoch.
    pub fn start_time(&self) -> f64 {
        self.start_sample as f64 / self.sample_rate
    }

    /// Mean power over all samples (0 for an empty stream).
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Mean power over samples with nonzero magnitude (the occupied part).
    pub fn occupied_power(&self) -> f64 {
        let mut acc = 0.0;
        let mut n = 0usize;
        for s in &self.samples {
            let p = s.norm_sqr();
            if p > 0.0 {
                acc += p;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            acc / n as f64
        }
    }

    /// Total energy (sum of |x|^2).
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// In-place complex scale.
    pub fn scale(&mut self, g: Complex64) {
        for s in &mut self.samples {
            *s *= g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timeline_bookkeeping() {
        let s = IqStream::zeros(30_720_000.0, 30720, 30720);
        assert_eq!(s.end_sample(), 61440);
        assert!((s.start_time() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn occupied_power_ignores_gaps() {
        let mut v = vec![Complex64::new(0.0, 0.0); 10];
        v[3] = Complex64::new(2.0, 0.0);
        v[7] = Complex64::new(0.0, 2.0);
        let s = IqStream::new(1.0, 0, v);
        assert!((s.occupied_power() - 4.0).abs() < 1e-12);
        assert!((s.mean_power() - 0.8).abs() < 1e-12);
    }
}
