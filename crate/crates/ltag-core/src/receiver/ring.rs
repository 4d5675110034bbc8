//! Circular IQ buffer addressed by absolute sample index.
//!
//! The writer appends (or skips over silent gaps); once the buffer is full
//! the oldest samples are overwritten. Reads address absolute sample ranges
//! and fail explicitly when the range is already evicted or not yet
//! ingested — overwritten data is never returned.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RingError {
    #[error("range [{start}, {end}) is stale: oldest retained sample is {oldest}")]
    Stale { start: i64, end: i64, oldest: i64 },
    #[error("range [{start}, {end}) not yet ingested: write head is at {head}")]
    NotYetAvailable { start: i64, end: i64, head: i64 },
}

#[derive(Debug)]
pub struct CircularIqBuffer {
    buf: Vec<Complex64>,
    /// Absolute index of the next sample to be written.
    head: i64,
    /// Absolute index of the first sample ever written.
    origin: i64,
    sample_rate: f64,
}

impl CircularIqBuffer {
    pub fn new(capacity: usize, origin: i64, sample_rate: f64) -> Self {
        assert!(capacity > 0);
        Self { buf: vec![Complex64::new(0.0, 0.0); capacity], head: origin, origin, sample_rate }
    }

    /// Capacity for `millis` of samples at `sample_rate`.
    pub fn with_duration_ms(millis: u64, origin: i64, sample_rate: f64) -> Self {
        let capacity = (sample_rate * millis as f64 / 1e3).round() as usize;
        Self::new(capacity, origin, sample_rate)
    }

    pub fn capacity(&self) -> usize {
        self.buf.len()
    }

    /// Absolute index one past the newest sample.
    pub fn write_head(&self) -> i64 {
        self.head
    }

    /// Absolute index of the oldest retained sample.
    pub fn oldest(&self) -> i64 {
        (self.head - self.buf.len() as i64).max(self.origin)
    }

    /// Timestamp of the newest sample in seconds.
    pub fn last_sample_time(&self) -> f64 {
        (self.head - 1) as f64 / self.sample_rate
    }

    pub fn write(&mut self, samples: &[Complex64]) {
        let cap = self.buf.len();
        for &s in samples {
            self.buf[(self.head.rem_euclid(cap as i64)) as usize] = s;
            self.head += 1;
        }
    }

    /// Advance over `n` silent samples (explicit zeros).
    pub fn skip(&mut self, n: usize) {
        let cap = self.buf.len();
        if n >= cap {
            self.buf.fill(Complex64::new(0.0, 0.0));
            self.head += n as i64;
            return;
        }
        for _ in 0..n {
            self.buf[(self.head.rem_euclid(cap as i64)) as usize] = Complex64::new(0.0, 0.0);
            self.head += 1;
        }
    }

    /// Copy out an absolute sample range.
    pub fn read(&self, start: i64, len: usize) -> Result<Vec<Complex64>, RingError> {
        let end = start + len as i64;
        if start < self.oldest() {
            return Err(RingError::Stale { start, end, oldest: self.oldest() });
        }
        if end > self.head {
            return Err(RingError::NotYetAvailable { start, end, head: self.head });
        }
        let cap = self.buf.len() as i64;
        let mut out = Vec::with_capacity(len);
        for i in start..end {
            out.push(self.buf[(i.rem_euclid(cap)) as usize]);
        }
        Ok(out)
    }
}
