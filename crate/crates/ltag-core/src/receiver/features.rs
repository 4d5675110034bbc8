//! Signal feature measurement from extracted resource elements.
//!
//! Per antenna port and per reference-signal symbol, the receiver computes
//! the circular cross-correlation of the received resource elements against
//! the known reference sequence (a frequency-domain product followed by an
//! inverse FFT), Fourier-upsamples the correlation 32x by zero-padding the
//! product spectrum, and combines the per-symbol correlation power profiles
//! non-coherently. From the combined profile it derives:
//!
//! * `corr_peak_power` — interpolated peak power normalized by reference
//!   energy; an interference-robust estimate of the received signal power.
//! * `rms2_power` — mean |RE|^2 over the allocated PRBs, the naive power
//!   estimate that soaks up co-channel interference and noise.
//! * `peak_to_avg_snr` — SNR from the peak-to-average ratio R of the
//!   correlation power profile via `snr = (R - 1) / (N - R)`.
//! * `smoothed_snr` — the baseline estimator: the profile is smoothed with
//!   a moving-average filter and the off-peak residual between raw and
//!   smoothed profiles serves as the noise estimate.
//! * `toa_offset` — the upsampled peak lag converted to seconds.

use crate::phy::{
    reference_symbols, CellConfig, MsgType, PhyError, SubframeGrid, UplinkMessageSpec,
    PRACH_SYMBOLS, SC_PER_PRB, SUBCARRIER_SPACING, SYMBOLS_PER_SUBFRAME,
};
use num_complex::Complex64;
use rustfft::FftDirection;

/// Per-port measured features of one uplink message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortFeatures {
    pub corr_peak_power_db: f64,
    pub rms2_power_db: f64,
    pub peak_to_avg_snr_db: f64,
    pub smoothed_snr_db: f64,
    pub toa_offset_s: f64,
}

/// Measurement knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    /// Fourier upsampling factor for the correlation peak.
    pub upsample: usize,
    /// Peak-to-average detection threshold in dB; below it the port reports
    /// no feature. `None` disables the check (used by calibration sweeps).
    pub detection_threshold_db: Option<f64>,
    /// Moving-average width as a fraction of the correlation length
    /// (window = len / fraction).
    pub smoothing_fraction: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self { upsample: 32, detection_threshold_db: Some(3.0), smoothing_fraction: 16 }
    }
}

/// Symbols a message physically occupies (PRACH leaves the subframe tail
/// empty).
pub fn occupied_symbols(msg_type: MsgType) -> std::ops::Range<usize> {
    match msg_type {
        MsgType::Prach => 0..PRACH_SYMBOLS,
        _ => 0..SYMBOLS_PER_SUBFRAME,
    }
}

/// Measure all features from a compact allocation grid (width equal to the
/// allocation). Returns `Ok(None)` when the correlation peak stays below
/// the detection threshold.
pub fn measure_features(
    grid: &SubframeGrid,
    spec: &UplinkMessageSpec,
    cell: &CellConfig,
    cfg: &MeasureConfig,
) -> Result<Option<PortFeatures>, PhyError> {
    let n = spec.n_prb * SC_PER_PRB;
    if grid.n_subcarriers() != n {
        return Err(PhyError::InvalidParameter(format!(
            "grid width {} does not match allocation width {n}",
            grid.n_subcarriers()
        )));
    }
    let refs = reference_symbols(spec, cell)?;
    let s_count = refs.len() as f64;
    let u = cfg.upsample.max(1);
    let un = u * n;

    // Combined upsampled correlation power profile.
    let ifft = crate::phy::fft_for(un, FftDirection::Inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let mut profile = vec![0.0f64; un];
    let mut padded = vec![Complex64::new(0.0, 0.0); un];
    for (pos, &rsym) in spec.rs_symbol_indices.iter().enumerate() {
        let rx = grid.symbol(rsym);
        let reference = &refs[pos];
        padded.fill(Complex64::new(0.0, 0.0));
        for k in 0..n {
            // Zero-pad the product spectrum in the middle so the inverse
            // transform interpolates the correlation.
            let bin = if k < n / 2 { k } else { un - (n - k) };
            padded[bin] = rx[k] * reference[k].conj();
        }
        ifft.process_with_scratch(&mut padded, &mut scratch);
        for (m, v) in padded.iter().enumerate() {
            profile[m] += v.norm_sqr();
        }
    }

    let (peak_idx, peak_val) =
        profile.iter().enumerate().fold((0usize, f64::MIN), |acc, (i, &v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    // The coarse lags are exact samples of the non-upsampled correlation.
    let coarse: Vec<f64> = (0..n).map(|j| profile[j * u]).collect();
    let avg = coarse.iter().sum::<f64>() / n as f64;
    if avg <= 0.0 {
        return Ok(None);
    }
    let ratio = peak_val / avg;
    if let Some(threshold) = cfg.detection_threshold_db {
        if 10.0 * ratio.log10() < threshold {
            return Ok(None);
        }
    }

    let corr_peak_power = peak_val / (s_count * (n as f64) * (n as f64));
    let peak_to_avg_snr = ((ratio - 1.0) / (n as f64 - ratio)).clamp(1e-6, 1e6);

    // Baseline: moving-average smoothing; off-peak residual as noise.
    let smoothed_snr = smoothed_snr_estimate(&coarse, peak_idx / u, s_count, n, cfg);

    // RMS^2 over the allocated PRBs across the message's occupied symbols.
    let mut acc = 0.0;
    let mut count = 0usize;
    for sym in occupied_symbols(spec.msg_type) {
        for v in grid.symbol(sym) {
            acc += v.norm_sqr();
            count += 1;
        }
    }
    let rms2_power = acc / count as f64;

    // Upsampled peak lag as a time offset; lags past the midpoint wrap to
    // negative offsets.
    let lag = if peak_idx > un / 2 { peak_idx as f64 - un as f64 } else { peak_idx as f64 };
    let toa_offset_s = lag / (u as f64 * n as f64 * SUBCARRIER_SPACING);

    Ok(Some(PortFeatures {
        corr_peak_power_db: db(corr_peak_power),
        rms2_power_db: db(rms2_power),
        peak_to_avg_snr_db: db(peak_to_avg_snr),
        smoothed_snr_db: db(smoothed_snr),
        toa_offset_s,
    }))
}

fn db(x: f64) -> f64 {
    10.0 * x.max(1e-300).log10()
}

/// Smoothed-correlation SNR baseline on the coarse power profile.
fn smoothed_snr_estimate(
    coarse: &[f64],
    peak_j: usize,
    s_count: f64,
    n: usize,
    cfg: &MeasureConfig,
) -> f64 {
    let len = coarse.len();
    let mut w = (len / cfg.smoothing_fraction.max(1)).max(3);
    if w % 2 == 0 {
        w += 1;
    }
    let half = w / 2;
    // Circular moving average.
    let mut smoothed = vec![0.0f64; len];
    for (j, s) in smoothed.iter_mut().enumerate() {
        let mut acc = 0.0;
        for d in 0..w {
            let idx = (j + len + d - half) % len;
            acc += coarse[idx];
        }
        *s = acc / w as f64;
    }
    // Off-peak residual between raw and smoothed profile -> noise estimate.
    let excluded = |j: usize| {
        let dist = (j as i64 - peak_j as i64).rem_euclid(len as i64);
        let dist = dist.min(len as i64 - dist);
        dist <= half as i64
    };
    let mut resid_acc = 0.0;
    let mut floor_acc = 0.0;
    let mut count = 0usize;
    for j in 0..len {
        if excluded(j) {
            continue;
        }
        let r = coarse[j] - smoothed[j];
        resid_acc += r * r;
        floor_acc += smoothed[j];
        count += 1;
    }
    if count == 0 {
        return 1e-6;
    }
    let resid_rms = (resid_acc / count as f64).sqrt();
    let floor = floor_acc / count as f64;
    // Per-lag noise power fluctuates with std sqrt(S) * N * sigma^2.
    let sigma2_est = resid_rms / (s_count.sqrt() * n as f64);
    let signal_est = (coarse[peak_j] - floor).max(0.0) / (s_count * (n as f64) * (n as f64));
    if sigma2_est <= 0.0 {
        return 1e6;
    }
    (signal_est / sigma2_est).clamp(1e-6, 1e6)
}
