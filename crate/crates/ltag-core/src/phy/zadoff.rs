//! Zadoff-Chu sequences: generation, cyclic shifts and the derived
//! reference-signal sequences for each uplink message type.

use super::{PhyError, PRACH_SHIFT_STRIDE, PRACH_ZC_LEN};
use num_complex::Complex64;
use std::f64::consts::PI;

/// A Zadoff-Chu sequence together with the parameters that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct ZadoffChuSeq {
    pub length: usize,
    pub root: usize,
    pub cyclic_shift: usize,
    pub samples: Vec<Complex64>,
}

impl ZadoffChuSeq {
    /// Cyclic extension to `len >= length` samples (`x[n mod N]`), preserving
    /// the constant-amplitude property.
    pub fn extended(&self, len: usize) -> Vec<Complex64> {
        (0..len).map(|n| self.samples[n % self.length]).collect()
    }
}

/// Generate `x[n] = exp(-i pi root n (n+1) / length)` cyclically shifted by
/// `cyclic_shift`. The length must be odd and the root coprime with it.
pub fn gen_zadoff_chu(
    length: usize,
    root: usize,
    cyclic_shift: usize,
) -> Result<ZadoffChuSeq, PhyError> {
    if length == 0 || length % 2 == 0 {
        return Err(PhyError::InvalidParameter(format!(
            "Zadoff-Chu length must be odd and positive, got {length}"
        )));
    }
    if gcd(root, length) != 1 {
        return Err(PhyError::InvalidParameter(format!(
            "Zadoff-Chu root {root} is not coprime with length {length}"
        )));
    }
    let n_f = length as f64;
    let samples: Vec<Complex64> = (0..length)
        .map(|i| {
            let n = ((i + cyclic_shift) % length) as f64;
            let phase = -PI * root as f64 * n * (n + 1.0) / n_f;
            Complex64::from_polar(1.0, phase)
        })
        .collect();
    Ok(ZadoffChuSeq { length, root, cyclic_shift: cyclic_shift % length, samples })
}

/// PRACH preamble sequence: one of the 64 cyclic-shift versions of the
/// cell's root ZC-839 sequence.
pub fn prach_preamble(prach_root: usize, preamble_index: u8) -> Result<ZadoffChuSeq, PhyError> {
    gen_zadoff_chu(PRACH_ZC_LEN, prach_root, preamble_index as usize * PRACH_SHIFT_STRIDE)
}

/// Reference-signal sequence of `len` samples for PUSCH/PUCCH symbols.
///
/// The underlying sequence is a Zadoff-Chu of the largest prime shorter than
/// `len`, cyclically extended, with the root derived from the cell identity:
/// `root = (pci mod (n_zc - 1)) + 1`.
pub fn rs_sequence(len: usize, pci: u16) -> Result<Vec<Complex64>, PhyError> {
    if len < 3 {
        return Err(PhyError::InvalidParameter(format!(
            "reference sequence length {len} too short"
        )));
    }
    let n_zc = largest_prime_below(len);
    let root = (pci as usize % (n_zc - 1)) + 1;
    Ok(gen_zadoff_chu(n_zc, root, 0)?.extended(len))
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut i = 3;
    while i * i <= n {
        if n % i == 0 {
            return false;
        }
        i += 2;
    }
    true
}

fn largest_prime_below(n: usize) -> usize {
    let mut k = n - 1;
    while k >= 2 {
        if is_prime(k) {
            return k;
        }
        k -= 1;
    }
    2
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct circular cross-correlation, used as the test oracle.
    fn circ_xcorr(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let n = a.len();
        (0..n)
            .map(|lag| {
                (0..n).map(|i| a[i] * b[(i + lag) % n].conj()).sum::<Complex64>()
            })
            .collect()
    }

    #[test]
    fn constant_amplitude() {
        for (len, root) in [(839usize, 1usize), (839, 2), (3, 1), (71, 33)] {
            let zc = gen_zadoff_chu(len, root, 0).unwrap();
            for s in &zc.samples {
                assert!((s.norm() - 1.0).abs() < 1e-12, "len={len} root={root}");
            }
        }
    }

    #[test]
    fn ideal_autocorrelation() {
        let zc = gen_zadoff_chu(839, 1, 0).unwrap();
        let ac = circ_xcorr(&zc.samples, &zc.samples);
        assert!((ac[0].norm() - 839.0).abs() < 1e-6);
        for (lag, v) in ac.iter().enumerate().skip(1) {
            assert!(
                v.norm() < 1e-9 * 839.0,
                "autocorr at lag {lag} = {} too large",
                v.norm()
            );
        }
        // Lag 7 called out explicitly.
        assert!(ac[7].norm() < 1e-9 * 839.0);
    }

    #[test]
    fn short_sequence() {
        let zc = gen_zadoff_chu(3, 1, 0).unwrap();
        assert_eq!(zc.samples.len(), 3);
        for s in &zc.samples {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        // x[1] = exp(-i pi * 1 * 1 * 2 / 3) = exp(-i 2pi/3)
        let expected = Complex64::from_polar(1.0, -2.0 * PI / 3.0);
        assert!((zc.samples[1] - expected).norm() < 1e-12);
    }

    #[test]
    fn cross_root_correlation_is_low() {
        let a = gen_zadoff_chu(839, 1, 0).unwrap();
        let b = gen_zadoff_chu(839, 2, 0).unwrap();
        let xc = circ_xcorr(&a.samples, &b.samples);
        let peak = xc.iter().map(|c| c.norm()).fold(0.0, f64::max) / 839.0;
        assert!(peak < 1.0 / (839.0f64).sqrt() + 0.05, "peak {peak} too high");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gen_zadoff_chu(838, 1, 0).is_err()); // even
        assert!(gen_zadoff_chu(0, 1, 0).is_err());
        assert!(gen_zadoff_chu(9, 3, 0).is_err()); // gcd(3,9) != 1
    }

    #[test]
    fn cyclic_shift_matches_definition() {
        let base = gen_zadoff_chu(71, 5, 0).unwrap();
        let shifted = gen_zadoff_chu(71, 5, 13).unwrap();
        for n in 0..71 {
            assert!((shifted.samples[n] - base.samples[(n + 13) % 71]).norm() < 1e-12);
        }
    }

    #[test]
    fn preambles_are_distinct_shifts() {
        let p0 = prach_preamble(129, 0).unwrap();
        let p1 = prach_preamble(129, 1).unwrap();
        assert_eq!(p0.cyclic_shift, 0);
        assert_eq!(p1.cyclic_shift, PRACH_SHIFT_STRIDE);
        // Shifted versions stay nearly orthogonal at zero lag.
        let dot: Complex64 =
            p0.samples.iter().zip(&p1.samples).map(|(a, b)| a * b.conj()).sum();
        assert!(dot.norm() < 1e-6 * 839.0);
    }

    #[test]
    fn rs_sequence_is_unit_magnitude() {
        for len in [12usize, 24, 72, 144] {
            let rs = rs_sequence(len, 301).unwrap();
            assert_eq!(rs.len(), len);
            for s in &rs {
                assert!((s.norm() - 1.0).abs() < 1e-12);
            }
        }
        // len=144 extends a ZC of length 139 (prime), the LTE match.
        assert_eq!(largest_prime_below(144), 139);
        assert_eq!(largest_prime_below(12), 11);
    }
}
