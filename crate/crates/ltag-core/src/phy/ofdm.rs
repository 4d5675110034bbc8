//! OFDM modulation and demodulation with normal cyclic prefix.
//!
//! Subcarrier `i` of an `n_sc`-wide grid maps to FFT bin `(i - n_sc/2) mod F`
//! so the occupied band is centered on DC. Modulation is the unnormalized
//! inverse transform; demodulation applies the matching `1/F` scale, so a
//! modulate/demodulate round trip is the identity.

use super::{PhyError, SubframeGrid, FFT_STANDARD, FFT_WIDEBAND, SYMBOLS_PER_SUBFRAME};
use crate::iq::IqStream;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Shared FFT plan cache. Plans are reused across the whole process.
pub fn fft_for(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap();
    let key = (len, direction == FftDirection::Forward);
    if let Some(fft) = guard.1.get(&key) {
        return Arc::clone(fft);
    }
    let fft = guard.0.plan_fft(len, direction);
    guard.1.insert(key, Arc::clone(&fft));
    fft
}

/// Placement of one OFDM symbol inside a subframe, in samples from the
/// subframe start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolSpan {
    /// Start of the cyclic prefix.
    pub cp_start: usize,
    /// Length of the cyclic prefix.
    pub cp_len: usize,
    /// Start of the FFT body.
    pub body_start: usize,
}

/// Samples in one subframe at the rate implied by `fft_size`.
pub fn subframe_samples(fft_size: usize) -> usize {
    30_720 * fft_size / FFT_STANDARD
}

/// The 14 symbol spans of a subframe for the given FFT size. The first
/// symbol of each 7-symbol slot carries the longer cyclic prefix.
pub fn symbol_spans(fft_size: usize) -> [SymbolSpan; SYMBOLS_PER_SUBFRAME] {
    let scale = fft_size / FFT_STANDARD;
    let mut spans = [SymbolSpan { cp_start: 0, cp_len: 0, body_start: 0 }; SYMBOLS_PER_SUBFRAME];
    let mut pos = 0usize;
    for (s, span) in spans.iter_mut().enumerate() {
        let cp_len = if s % 7 == 0 { 160 * scale } else { 144 * scale };
        *span = SymbolSpan { cp_start: pos, cp_len, body_start: pos + cp_len };
        pos += cp_len + fft_size;
    }
    debug_assert_eq!(pos, subframe_samples(fft_size));
    spans
}

fn check_fft_size(fft_size: usize, n_sc: usize) -> Result<(), PhyError> {
    if fft_size != FFT_STANDARD && fft_size != FFT_WIDEBAND {
        return Err(PhyError::InvalidParameter(format!(
            "FFT size {fft_size} unsupported (expected {FFT_STANDARD} or {FFT_WIDEBAND})"
        )));
    }
    if n_sc > fft_size {
        return Err(PhyError::InvalidParameter(format!(
            "occupied bandwidth of {n_sc} subcarriers exceeds FFT size {fft_size}"
        )));
    }
    Ok(())
}

/// Map a grid subcarrier index to its FFT bin (band centered on DC).
pub fn subcarrier_bin(subcarrier: usize, n_sc: usize, fft_size: usize) -> usize {
    let rel = subcarrier as i64 - (n_sc / 2) as i64;
    rel.rem_euclid(fft_size as i64) as usize
}

/// Render a subframe grid as time-domain samples with cyclic prefixes.
pub fn ofdm_modulate(grid: &SubframeGrid, fft_size: usize) -> Result<IqStream, PhyError> {
    let n_sc = grid.n_subcarriers();
    check_fft_size(fft_size, n_sc)?;
    let ifft = fft_for(fft_size, FftDirection::Inverse);

    let total = subframe_samples(fft_size);
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    let mut body = vec![Complex64::new(0.0, 0.0); fft_size];
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];

    for (s, span) in symbol_spans(fft_size).iter().enumerate() {
        body.fill(Complex64::new(0.0, 0.0));
        for (i, &v) in grid.symbol(s).iter().enumerate() {
            if v != Complex64::new(0.0, 0.0) {
                body[subcarrier_bin(i, n_sc, fft_size)] = v;
            }
        }
        ifft.process_with_scratch(&mut body, &mut scratch);
        out[span.body_start..span.body_start + fft_size].copy_from_slice(&body);
        out[span.cp_start..span.cp_start + span.cp_len]
            .copy_from_slice(&body[fft_size - span.cp_len..]);
    }

    let sample_rate = super::sample_rate_for_fft(fft_size);
    let start = grid.subframe_index as i64 * total as i64;
    Ok(IqStream::new(sample_rate, start, out))
}

/// Recover a subframe grid of `n_prb` PRBs from one subframe of samples.
pub fn ofdm_demodulate(
    samples: &[Complex64],
    fft_size: usize,
    n_prb: usize,
    subframe_index: u64,
) -> Result<SubframeGrid, PhyError> {
    let n_sc = n_prb * super::SC_PER_PRB;
    check_fft_size(fft_size, n_sc)?;
    if samples.len() != subframe_samples(fft_size) {
        return Err(PhyError::InvalidParameter(format!(
            "expected {} samples for one subframe, got {}",
            subframe_samples(fft_size),
            samples.len()
        )));
    }
    let fft = fft_for(fft_size, FftDirection::Forward);
    let mut grid = SubframeGrid::new(n_prb, subframe_index, super::sample_rate_for_fft(fft_size));
    let mut body = vec![Complex64::new(0.0, 0.0); fft_size];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let scale = 1.0 / fft_size as f64;

    for (s, span) in symbol_spans(fft_size).iter().enumerate() {
        body.copy_from_slice(&samples[span.body_start..span.body_start + fft_size]);
        fft.process_with_scratch(&mut body, &mut scratch);
        for i in 0..n_sc {
            grid.set(s, i, body[subcarrier_bin(i, n_sc, fft_size)] * scale);
        }
    }
    Ok(grid)
}
