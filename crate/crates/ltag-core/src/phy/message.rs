//! Uplink message construction on the resource grid and reference-signal
//! extraction.
//!
//! Data symbols carry seeded pseudo-random QPSK for realistic spectral
//! occupancy; measurements never depend on them. Reference signals are the
//! only part the receivers correlate against.

use super::zadoff::{prach_preamble, rs_sequence};
use super::{
    CellConfig, MsgType, PhyError, SubframeGrid, UplinkMessageSpec, PRACH_SYMBOLS, SC_PER_PRB,
    SYMBOLS_PER_SUBFRAME,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Build the subframe grid(s) for one uplink message. Reference signals sit
/// exactly at `spec.rs_symbol_indices` within the allocated PRBs, data
/// symbols are filled with QPSK derived from `payload_seed`, everything else
/// stays zero.
pub fn build_uplink_message(
    spec: &UplinkMessageSpec,
    payload_seed: u64,
    cell: &CellConfig,
    subframe_index: u64,
    sample_rate: f64,
) -> Result<Vec<SubframeGrid>, PhyError> {
    spec.validate(cell)?;
    let mut grid = SubframeGrid::new(cell.n_prb_ul, subframe_index, sample_rate);
    let refs = reference_symbols(spec, cell)?;
    let mut rng = ChaCha8Rng::seed_from_u64(payload_seed);

    for symbol in 0..SYMBOLS_PER_SUBFRAME {
        let (start, len) = spec.occupied_range(symbol, cell.n_prb_ul);
        if let Some(pos) = spec.rs_symbol_indices.iter().position(|&s| s == symbol) {
            for (i, &v) in refs[pos].iter().enumerate() {
                grid.set(symbol, start + i, v);
            }
        } else if spec.msg_type != MsgType::Prach {
            // Data symbol: seeded QPSK across the allocation.
            for i in 0..len {
                let re = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                let im = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                grid.set(symbol, start + i, Complex64::new(re, im));
            }
        }
    }
    Ok(vec![grid])
}

/// Per-RS-symbol reference sequences for a message, in the order of
/// `spec.rs_symbol_indices`. This is what receivers correlate against.
pub fn reference_symbols(
    spec: &UplinkMessageSpec,
    cell: &CellConfig,
) -> Result<Vec<Vec<Complex64>>, PhyError> {
    match spec.msg_type {
        MsgType::Prach => {
            let preamble = prach_preamble(
                cell.prach_root,
                spec.preamble_index.ok_or_else(|| {
                    PhyError::InvalidParameter("PRACH spec without preamble index".into())
                })?,
            )?;
            let width = spec.n_prb * SC_PER_PRB;
            let extended = preamble.extended(PRACH_SYMBOLS * width);
            Ok((0..PRACH_SYMBOLS)
                .map(|s| extended[s * width..(s + 1) * width].to_vec())
                .collect())
        }
        MsgType::Pusch | MsgType::Pucch => {
            let rs = rs_sequence(spec.n_prb * SC_PER_PRB, cell.pci)?;
            Ok(vec![rs; spec.rs_symbol_indices.len()])
        }
    }
}

/// Concatenated reference-signal resource elements in symbol order.
///
/// Accepts either a full cell-bandwidth grid or a compact grid whose width
/// equals the allocation (as produced by the receiver's bin extraction).
pub fn extract_reference(received: &SubframeGrid, spec: &UplinkMessageSpec) -> Vec<Complex64> {
    let compact = received.n_prb() == spec.n_prb;
    let mut out = Vec::with_capacity(spec.rs_len());
    for &symbol in &spec.rs_symbol_indices {
        let (start, len) = if compact {
            (0, spec.n_prb * SC_PER_PRB)
        } else {
            spec.occupied_range(symbol, received.n_prb())
        };
        out.extend_from_slice(&received.symbol(symbol)[start..start + len]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{sample_rate_for_fft, Band};

    fn cell() -> CellConfig {
        CellConfig {
            earfcn: 19500,
            pci: 301,
            n_prb_ul: 50,
            prach_subframes: vec![1],
            prach_root: 129,
            band: Band::Band3,
        }
    }

    fn rate() -> f64 {
        sample_rate_for_fft(2048)
    }

    #[test]
    fn pusch_reference_placement() {
        let spec = UplinkMessageSpec::pusch(10, 4, 17).unwrap();
        let grid = &build_uplink_message(&spec, 7, &cell(), 0, rate()).unwrap()[0];
        for symbol in [4usize, 11] {
            let nonzero: Vec<usize> = (0..grid.n_subcarriers())
                .filter(|&i| grid.get(symbol, i).norm() > 0.0)
                .collect();
            assert_eq!(nonzero.len(), 48);
            assert_eq!(nonzero[0], 120);
            assert_eq!(*nonzero.last().unwrap(), 167);
        }
        // Reference elements are the cell RS sequence, unit magnitude.
        for i in 0..48 {
            assert!((grid.get(4, 120 + i).norm() - 1.0).abs() < 1e-12);
            assert_eq!(grid.get(4, 120 + i), grid.get(11, 120 + i));
        }
    }

    #[test]
    fn pucch_hopping_switches_edges() {
        let spec = UplinkMessageSpec::pucch(true, 17);
        let grid = &build_uplink_message(&spec, 7, &cell(), 0, rate()).unwrap()[0];
        let n_sc = grid.n_subcarriers();
        for symbol in 0..7 {
            let energy_low: f64 = (0..12).map(|i| grid.get(symbol, i).norm_sqr()).sum();
            let energy_rest: f64 =
                (12..n_sc).map(|i| grid.get(symbol, i).norm_sqr()).sum();
            assert!(energy_low > 0.0, "slot 0 symbol {symbol} should light PRB 0");
            assert_eq!(energy_rest, 0.0);
        }
        for symbol in 7..14 {
            let energy_high: f64 =
                (n_sc - 12..n_sc).map(|i| grid.get(symbol, i).norm_sqr()).sum();
            let energy_rest: f64 =
                (0..n_sc - 12).map(|i| grid.get(symbol, i).norm_sqr()).sum();
            assert!(energy_high > 0.0, "slot 1 symbol {symbol} should light PRB 49");
            assert_eq!(energy_rest, 0.0);
        }
    }

    #[test]
    fn prach_spans_six_prbs() {
        let spec = UplinkMessageSpec::prach(20, 5, 17).unwrap();
        let grid = &build_uplink_message(&spec, 7, &cell(), 0, rate()).unwrap()[0];
        let mut occupied: Vec<usize> = Vec::new();
        for symbol in 0..14 {
            for i in 0..grid.n_subcarriers() {
                if grid.get(symbol, i).norm() > 0.0 {
                    occupied.push(i);
                }
            }
        }
        let lo = *occupied.iter().min().unwrap();
        let hi = *occupied.iter().max().unwrap();
        assert_eq!(lo, 20 * 12);
        assert_eq!(hi, 20 * 12 + 71);
        // All 12 mapped symbols fully occupied, nothing in 12..14.
        assert_eq!(occupied.len(), 12 * 72);
    }

    #[test]
    fn extract_reference_lengths() {
        let c = cell();
        let pusch1 = UplinkMessageSpec::pusch(0, 1, 1).unwrap();
        let grid = &build_uplink_message(&pusch1, 3, &c, 0, rate()).unwrap()[0];
        assert_eq!(extract_reference(grid, &pusch1).len(), 24);

        let pucch = UplinkMessageSpec::pucch(true, 1);
        let grid = &build_uplink_message(&pucch, 3, &c, 0, rate()).unwrap()[0];
        let rs = extract_reference(grid, &pucch);
        assert_eq!(rs.len(), 72);
        for v in &rs {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }

        let zero = SubframeGrid::new(c.n_prb_ul, 0, rate());
        let rs = extract_reference(&zero, &pucch);
        assert!(rs.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn allocation_must_fit_bandwidth() {
        let spec = UplinkMessageSpec::pusch(48, 4, 17).unwrap(); // 48+4 > 50 PRB
        assert!(matches!(
            build_uplink_message(&spec, 7, &cell(), 0, rate()),
            Err(PhyError::InvalidAllocation(_))
        ));
    }

    #[test]
    fn multi_subframe_prach_rejected() {
        let mut spec = UplinkMessageSpec::prach(0, 5, 17).unwrap();
        spec.duration_subframes = 2;
        assert!(matches!(
            build_uplink_message(&spec, 7, &cell(), 0, rate()),
            Err(PhyError::InvalidParameter(_))
        ));
    }

    #[test]
    fn payload_seed_changes_data_not_rs() {
        let spec = UplinkMessageSpec::pusch(10, 4, 17).unwrap();
        let a = &build_uplink_message(&spec, 1, &cell(), 0, rate()).unwrap()[0];
        let b = &build_uplink_message(&spec, 2, &cell(), 0, rate()).unwrap()[0];
        assert_eq!(extract_reference(a, &spec), extract_reference(b, &spec));
        assert!(a.max_abs_diff(b) > 0.1); // data symbols differ
    }
}
