//! Gray-mapped BPSK / QPSK / 16-QAM with unit average energy and max-log
//! soft demapping.

use alloc::vec::Vec;
use core::str::FromStr;

use libm::sqrt;

use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    /// All constellation points, indexed by their bit label (LSB first).
    pub fn constellation(self) -> Vec<Complex64> {
        let k = self.bits_per_symbol();
        (0..1usize << k)
            .map(|label| {
                let bits: Vec<u8> = (0..k).map(|i| ((label >> i) & 1) as u8).collect();
                map_symbol(self, &bits)
            })
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
        }
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" | "16-qam" => Ok(Modulation::Qam16),
            _ => Err(Error::UnknownScheme),
        }
    }
}

/// Per-axis amplitude levels of 16-QAM, indexed by `(b_sign, b_mag)`.
fn qam16_level(sign: u8, mag: u8) -> f64 {
    let a = if mag == 0 { 3.0 } else { 1.0 };
    if sign == 1 {
        a
    } else {
        -a
    }
}

fn map_symbol(scheme: Modulation, bits: &[u8]) -> Complex64 {
    match scheme {
        Modulation::Bpsk => Complex64::new(2.0 * f64::from(bits[0]) - 1.0, 0.0),
        Modulation::Qpsk => {
            let s = 1.0 / sqrt(2.0);
            Complex64::new(
                (2.0 * f64::from(bits[0]) - 1.0) * s,
                (2.0 * f64::from(bits[1]) - 1.0) * s,
            )
        }
        Modulation::Qam16 => {
            let s = 1.0 / sqrt(10.0);
            Complex64::new(
                qam16_level(bits[0], bits[1]) * s,
                qam16_level(bits[2], bits[3]) * s,
            )
        }
    }
}

pub fn qam_modulate(bits: &[u8], scheme: Modulation) -> Result<Vec<Complex64>> {
    let k = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::LengthMismatch {
            expected: bits.len().next_multiple_of(k),
            got: bits.len(),
        });
    }
    Ok(bits.chunks(k).map(|c| map_symbol(scheme, c)).collect())
}

/// Max-log LLR of one binary-labelled axis: `levels` lists `(value, bit)`.
fn axis_llr(y: f64, levels: &[(f64, u8)], noise_var: f64) -> f64 {
    let mut d0 = f64::INFINITY;
    let mut d1 = f64::INFINITY;
    for &(v, b) in levels {
        let d = (y - v) * (y - v);
        if b == 1 {
            d1 = d1.min(d);
        } else {
            d0 = d0.min(d);
        }
    }
    (d0 - d1) / (2.0 * noise_var)
}

/// Soft demapping with a per-symbol noise variance (per real dimension).
pub fn qam_soft_demod_weighted(
    symbols: &[Complex64],
    noise_vars: &[f64],
    scheme: Modulation,
) -> Result<Vec<f64>> {
    if symbols.len() != noise_vars.len() {
        return Err(Error::LengthMismatch {
            expected: symbols.len(),
            got: noise_vars.len(),
        });
    }
    let mut out = Vec::with_capacity(symbols.len() * scheme.bits_per_symbol());
    for (y, &nv) in symbols.iter().zip(noise_vars) {
        let nv = nv.max(f64::MIN_POSITIVE);
        match scheme {
            Modulation::Bpsk => out.push(2.0 * y.re / nv),
            Modulation::Qpsk => {
                let a = 1.0 / sqrt(2.0);
                out.push(2.0 * a * y.re / nv);
                out.push(2.0 * a * y.im / nv);
            }
            Modulation::Qam16 => {
                let s = 1.0 / sqrt(10.0);
                let sign: [(f64, u8); 4] = [(-3.0 * s, 0), (-s, 0), (s, 1), (3.0 * s, 1)];
                let mag: [(f64, u8); 4] = [(-3.0 * s, 0), (-s, 1), (s, 1), (3.0 * s, 0)];
                for axis in [y.re, y.im] {
                    out.push(axis_llr(axis, &sign, nv));
                    out.push(axis_llr(axis, &mag, nv));
                }
            }
        }
    }
    Ok(out)
}

/// Soft demapping; `noise_var` is the noise variance per real dimension.
/// A positive LLR favours bit 1.
pub fn qam_soft_demod(symbols: &[Complex64], noise_var: f64, scheme: Modulation) -> Vec<f64> {
    let nv = alloc::vec![noise_var; symbols.len()];
    // lengths match by construction
    qam_soft_demod_weighted(symbols, &nv, scheme).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding_modem::hard_decision;
    use alloc::vec;

    #[test]
    fn bpsk_mapping() {
        let s = qam_modulate(&[0, 1], Modulation::Bpsk).unwrap();
        assert_eq!(s, vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn bpsk_llr_closed_form() {
        let l = qam_soft_demod(&[Complex64::new(1.0, 0.0)], 0.5, Modulation::Bpsk);
        assert!((l[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unit_energy_and_gray_round_trip() {
        for scheme in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16] {
            let c = scheme.constellation();
            let e: f64 = c.iter().map(|x| x.norm_sqr()).sum::<f64>() / c.len() as f64;
            assert!((e - 1.0).abs() < 1e-12);
            let k = scheme.bits_per_symbol();
            let bits: Vec<u8> = (0..c.len())
                .flat_map(|label| (0..k).map(move |i| ((label >> i) & 1) as u8))
                .collect();
            let syms = qam_modulate(&bits, scheme).unwrap();
            let back = hard_decision(&qam_soft_demod(&syms, 0.1, scheme));
            assert_eq!(back, bits);
        }
    }

    #[test]
    fn qam16_neighbours_differ_in_one_bit() {
        let c = Modulation::Qam16.constellation();
        let d_min = 2.0 / sqrt(10.0);
        for (a, pa) in c.iter().enumerate() {
            for (b, pb) in c.iter().enumerate() {
                if ((pa - pb).norm() - d_min).abs() < 1e-9 {
                    assert_eq!((a ^ b).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn errors() {
        assert!(qam_modulate(&[1, 0, 1], Modulation::Qpsk).is_err());
        assert_eq!("8psk".parse::<Modulation>(), Err(Error::UnknownScheme));
        assert_eq!("BPSK".parse::<Modulation>(), Ok(Modulation::Bpsk));
    }
}
