//! LTE uplink physical layer: resource grid, message construction and OFDM.
//!
//! The uplink resource grid is 14 OFDM symbols per 1 ms subframe with
//! 12 subcarriers per PRB at 15 kHz spacing. Three message types occupy it:
//!
//! * PRACH — a Zadoff-Chu preamble (839-long underlying sequence, one of 64
//!   versions) spanning 6 PRBs,
//! * PUSCH — data plus reference signals in symbols 4 and 11,
//! * PUCCH — a single edge PRB with reference signals in symbols
//!   3, 4, 5, 10, 11 and 12, optionally hopping between the band edges at
//!   the slot boundary.

mod message;
mod ofdm;
mod zadoff;

pub use message::{build_uplink_message, extract_reference};
pub use ofdm::{fft_for, ofdm_demodulate, ofdm_modulate, subframe_samples, symbol_spans, SymbolSpan};
pub use zadoff::{gen_zadoff_chu, prach_preamble, rs_sequence, ZadoffChuSeq};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// OFDM symbols in one subframe (normal cyclic prefix).
pub const SYMBOLS_PER_SUBFRAME: usize = 14;
/// Subcarriers per physical resource block.
pub const SC_PER_PRB: usize = 12;
/// Subcarrier spacing in Hz.
pub const SUBCARRIER_SPACING: f64 = 15_000.0;
/// FFT size of the standard-rate (30.72 Msps) path.
pub const FFT_STANDARD: usize = 2048;
/// FFT size of the wideband (122.88 Msps) path.
pub const FFT_WIDEBAND: usize = 8192;
/// PRBs occupied by a PRACH preamble.
pub const PRACH_PRBS: usize = 6;
/// Length of the underlying PRACH Zadoff-Chu sequence.
pub const PRACH_ZC_LEN: usize = 839;
/// Number of PRACH preamble versions per cell.
pub const PRACH_PREAMBLE_COUNT: usize = 64;
/// Cyclic-shift stride separating consecutive preamble versions.
pub const PRACH_SHIFT_STRIDE: usize = 13;
/// Symbols of the subframe carrying the PRACH preamble mapping.
pub const PRACH_SYMBOLS: usize = 12;

/// Sample rate implied by an FFT size (15 kHz subcarrier spacing).
pub fn sample_rate_for_fft(fft_size: usize) -> f64 {
    SUBCARRIER_SPACING * fft_size as f64
}

#[derive(Debug, Error)]
pub enum PhyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
}

/// Uplink message type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MsgType {
    Prach,
    Pusch,
    Pucch,
}

impl MsgType {
    pub fn as_u8(self) -> u8 {
        match self {
            MsgType::Prach => 0,
            MsgType::Pusch => 1,
            MsgType::Pucch => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(MsgType::Prach),
            1 => Some(MsgType::Pusch),
            2 => Some(MsgType::Pucch),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MsgType::Prach => "PRACH",
            MsgType::Pusch => "PUSCH",
            MsgType::Pucch => "PUCCH",
        }
    }
}

/// The five FDD bands the deployment country allocates for LTE uplink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    Band1,
    Band3,
    Band7,
    Band8,
    Band20,
}

impl Band {
    /// Lower edge of the uplink allocation in Hz.
    pub fn ul_low_hz(self) -> f64 {
        match self {
            Band::Band1 => 1_920.0e6,
            Band::Band3 => 1_710.0e6,
            Band::Band7 => 2_500.0e6,
            Band::Band8 => 880.0e6,
            Band::Band20 => 832.0e6,
        }
    }

    /// First uplink EARFCN of the band.
    pub fn earfcn_offset(self) -> u32 {
        match self {
            Band::Band1 => 18000,
            Band::Band3 => 19200,
            Band::Band7 => 20750,
            Band::Band8 => 21450,
            Band::Band20 => 24150,
        }
    }

    /// Uplink carrier frequency for an EARFCN on this band (100 kHz raster).
    pub fn ul_freq_hz(self, earfcn: u32) -> f64 {
        self.ul_low_hz() + 100_000.0 * (earfcn - self.earfcn_offset()) as f64
    }
}

/// Static configuration of one monitored cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    /// Center-frequency identifier (uplink EARFCN).
    pub earfcn: u32,
    /// Physical cell identity.
    pub pci: u16,
    /// Uplink bandwidth in PRBs.
    pub n_prb_ul: usize,
    /// Subframe indices (mod 10) in which PRACH transmissions may start.
    pub prach_subframes: Vec<u64>,
    /// Zadoff-Chu root for the cell's PRACH preambles.
    pub prach_root: usize,
    /// FDD band the cell transmits on.
    pub band: Band,
}

impl CellConfig {
    /// Uplink carrier frequency in Hz.
    pub fn ul_freq_hz(&self) -> f64 {
        self.band.ul_freq_hz(self.earfcn)
    }

    /// Subcarriers across the cell's uplink bandwidth.
    pub fn n_subcarriers(&self) -> usize {
        self.n_prb_ul * SC_PER_PRB
    }
}

/// Time/frequency description of one uplink message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UplinkMessageSpec {
    pub msg_type: MsgType,
    /// Occupied PRBs.
    pub n_prb: usize,
    /// First occupied PRB (for PUCCH: the lower-edge PRB of slot 0).
    pub prb_offset: usize,
    /// Symbols carrying reference signals.
    pub rs_symbol_indices: Vec<usize>,
    /// PRACH only: which of the 64 preamble versions was sent.
    pub preamble_index: Option<u8>,
    /// PUCCH only: slot 1 mirrors to the opposite spectrum edge.
    pub hopping: bool,
    /// Connection identifier.
    pub rnti: u16,
    /// 1, 2 or 3 subframes; only the 1-subframe format is supported.
    pub duration_subframes: usize,
}

impl UplinkMessageSpec {
    pub fn prach(prb_offset: usize, preamble_index: u8, rnti: u16) -> Result<Self, PhyError> {
        if preamble_index as usize >= PRACH_PREAMBLE_COUNT {
            return Err(PhyError::InvalidParameter(format!(
                "PRACH preamble index {preamble_index} out of range (0..64)"
            )));
        }
        Ok(Self {
            msg_type: MsgType::Prach,
            n_prb: PRACH_PRBS,
            prb_offset,
            rs_symbol_indices: (0..PRACH_SYMBOLS).collect(),
            preamble_index: Some(preamble_index),
            hopping: false,
            rnti,
            duration_subframes: 1,
        })
    }

    pub fn pusch(prb_offset: usize, n_prb: usize, rnti: u16) -> Result<Self, PhyError> {
        if n_prb == 0 {
            return Err(PhyError::InvalidParameter("PUSCH must occupy at least 1 PRB".into()));
        }
        Ok(Self {
            msg_type: MsgType::Pusch,
            n_prb,
            prb_offset,
            rs_symbol_indices: vec![4, 11],
            preamble_index: None,
            hopping: false,
            rnti,
            duration_subframes: 1,
        })
    }

    pub fn pucch(hopping: bool, rnti: u16) -> Self {
        Self {
            msg_type: MsgType::Pucch,
            n_prb: 1,
            prb_offset: 0,
            rs_symbol_indices: vec![3, 4, 5, 10, 11, 12],
            preamble_index: None,
            hopping,
            rnti,
            duration_subframes: 1,
        }
    }

    /// First occupied subcarrier and occupied width for `symbol`, within a
    /// cell of `n_prb_ul` PRBs. PUCCH hopping moves the second slot to the
    /// mirrored spectrum edge.
    pub fn occupied_range(&self, symbol: usize, n_prb_ul: usize) -> (usize, usize) {
        let prb = match self.msg_type {
            MsgType::Pucch => {
                let second_slot = symbol >= SYMBOLS_PER_SUBFRAME / 2;
                if self.hopping && second_slot {
                    n_prb_ul - 1 - self.prb_offset
                } else {
                    self.prb_offset
                }
            }
            _ => self.prb_offset,
        };
        (prb * SC_PER_PRB, self.n_prb * SC_PER_PRB)
    }

    /// Number of reference-signal resource elements in one subframe.
    pub fn rs_len(&self) -> usize {
        self.rs_symbol_indices.len() * self.n_prb * SC_PER_PRB
    }

    /// Validate against the cell the message is to be sent on.
    pub fn validate(&self, cell: &CellConfig) -> Result<(), PhyError> {
        if self.duration_subframes != 1 {
            return Err(PhyError::InvalidParameter(format!(
                "{}-subframe messages are not supported (only the 1-subframe format)",
                self.duration_subframes
            )));
        }
        match self.msg_type {
            MsgType::Prach => {
                if self.n_prb != PRACH_PRBS {
                    return Err(PhyError::InvalidParameter(format!(
                        "PRACH must span {PRACH_PRBS} PRBs, got {}",
                        self.n_prb
                    )));
                }
                if self.preamble_index.is_none() {
                    return Err(PhyError::InvalidParameter("PRACH needs a preamble index".into()));
                }
            }
            MsgType::Pusch => {
                if self.rs_symbol_indices != [4, 11] {
                    return Err(PhyError::InvalidParameter(
                        "PUSCH reference signals sit in symbols 4 and 11".into(),
                    ));
                }
            }
            MsgType::Pucch => {
                if self.n_prb != 1 {
                    return Err(PhyError::InvalidParameter("PUCCH occupies exactly 1 PRB".into()));
                }
                if self.rs_symbol_indices != [3, 4, 5, 10, 11, 12] {
                    return Err(PhyError::InvalidParameter(
                        "PUCCH reference signals sit in symbols 3,4,5,10,11,12".into(),
                    ));
                }
            }
        }
        for symbol in 0..SYMBOLS_PER_SUBFRAME {
            let (start, len) = self.occupied_range(symbol, cell.n_prb_ul);
            if start + len > cell.n_subcarriers() {
                return Err(PhyError::InvalidAllocation(format!(
                    "allocation [{start}, {}) exceeds cell bandwidth of {} subcarriers",
                    start + len,
                    cell.n_subcarriers()
                )));
            }
        }
        Ok(())
    }
}

/// One subframe of the uplink resource grid: 14 symbols by
/// `12 * n_prb` subcarriers of complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SubframeGrid {
    n_prb: usize,
    /// Index of this subframe on the global timeline.
    pub subframe_index: u64,
    /// Rate the grid renders at (15 kHz times the render FFT size).
    pub sample_rate: f64,
    cells: Vec<Complex64>,
}

impl SubframeGrid {
    pub fn new(n_prb: usize, subframe_index: u64, sample_rate: f64) -> Self {
        Self {
            n_prb,
            subframe_index,
            sample_rate,
            cells: vec![Complex64::new(0.0, 0.0); SYMBOLS_PER_SUBFRAME * n_prb * SC_PER_PRB],
        }
    }

    pub fn n_prb(&self) -> usize {
        self.n_prb
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_prb * SC_PER_PRB
    }

    pub fn n_symbols(&self) -> usize {
        SYMBOLS_PER_SUBFRAME
    }

    pub fn get(&self, symbol: usize, subcarrier: usize) -> Complex64 {
        self.cells[symbol * self.n_subcarriers() + subcarrier]
    }

    pub fn set(&mut self, symbol: usize, subcarrier: usize, value: Complex64) {
        debug_assert!(value.re.is_finite() && value.im.is_finite());
        let idx = symbol * self.n_subcarriers() + subcarrier;
        self.cells[idx] = value;
    }

    /// All resource elements of one symbol.
    pub fn symbol(&self, symbol: usize) -> &[Complex64] {
        let n = self.n_subcarriers();
        &self.cells[symbol * n..(symbol + 1) * n]
    }

    pub fn symbol_mut(&mut self, symbol: usize) -> &mut [Complex64] {
        let n = self.n_subcarriers();
        &mut self.cells[symbol * n..(symbol + 1) * n]
    }

    /// Sum of |amplitude|^2 over the whole grid.
    pub fn energy(&self) -> f64 {
        self.cells.iter().map(|c| c.norm_sqr()).sum()
    }

    /// True when every amplitude is finite.
    pub fn all_finite(&self) -> bool {
        self.cells.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Maximum |a - b| over aligned resource elements.
    pub fn max_abs_diff(&self, other: &SubframeGrid) -> f64 {
        self.cells
            .iter()
            .zip(other.cells.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
