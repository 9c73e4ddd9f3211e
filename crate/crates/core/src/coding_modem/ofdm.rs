//! OFDM symbol (de)modulation with cyclic prefix.

use alloc::vec::Vec;

use super::fft::FftPlan;
use crate::{Complex64, Error, Result};

/// IFFT of one symbol's bins followed by cyclic-prefix insertion, appended
/// to `out`.
pub fn modulate_symbol_into(
    bins: &[Complex64],
    cp_len: usize,
    plan: &FftPlan,
    out: &mut Vec<Complex64>,
) {
    let mut body = bins.to_vec();
    plan.inverse(&mut body);
    let n = body.len();
    out.extend_from_slice(&body[n - cp_len..]);
    out.extend_from_slice(&body);
}

/// Modulates consecutive OFDM symbols. `bins` holds `n_fft` frequency
/// values per symbol, back to back; each output symbol is
/// `n_fft + cp_len` samples.
pub fn ofdm_modulate(bins: &[Complex64], n_fft: usize, cp_len: usize) -> Result<Vec<Complex64>> {
    if n_fft == 0 || !bins.len().is_multiple_of(n_fft) {
        return Err(Error::LengthMismatch {
            expected: bins.len().next_multiple_of(n_fft.max(1)),
            got: bins.len(),
        });
    }
    if cp_len > n_fft {
        return Err(Error::Layout("cyclic prefix longer than symbol"));
    }
    let plan = FftPlan::new(n_fft);
    let mut out = Vec::with_capacity(bins.len() / n_fft * (n_fft + cp_len));
    for sym in bins.chunks_exact(n_fft) {
        modulate_symbol_into(sym, cp_len, &plan, &mut out);
    }
    Ok(out)
}

/// FFT of the `n_fft` samples starting at `start`.
pub fn demodulate_at(samples: &[Complex64], start: usize, plan: &FftPlan) -> Result<Vec<Complex64>> {
    let n = plan.len();
    let window = samples.get(start..start + n).ok_or(Error::TooShort {
        needed: start + n,
        got: samples.len(),
    })?;
    let mut body = window.to_vec();
    plan.forward(&mut body);
    Ok(body)
}

/// Strips the cyclic prefix of every symbol and returns the bins, back to
/// back.
pub fn ofdm_demodulate(samples: &[Complex64], n_fft: usize, cp_len: usize) -> Result<Vec<Complex64>> {
    let sym_len = n_fft + cp_len;
    if n_fft == 0 || !samples.len().is_multiple_of(sym_len) {
        return Err(Error::LengthMismatch {
            expected: samples.len().next_multiple_of(sym_len.max(1)),
            got: samples.len(),
        });
    }
    let plan = FftPlan::new(n_fft);
    let mut out = Vec::with_capacity(samples.len() / sym_len * n_fft);
    for sym in samples.chunks_exact(sym_len) {
        let mut body = sym[cp_len..].to_vec();
        plan.forward(&mut body);
        out.extend_from_slice(&body);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn single_tone() {
        let mut bins = vec![Complex64::new(0.0, 0.0); 64];
        bins[10] = Complex64::new(1.0, 0.0);
        let t = ofdm_modulate(&bins, 64, 16).unwrap();
        assert_eq!(t.len(), 80);
        for (n, s) in t[16..].iter().enumerate() {
            let want = Complex64::from_polar(1.0 / 8.0, 2.0 * PI * 10.0 * n as f64 / 64.0);
            assert!((s - want).norm() < 1e-12);
        }
        assert_eq!(&t[..16], &t[64..]);
        let back = ofdm_demodulate(&t, 64, 16).unwrap();
        for (a, b) in back.iter().zip(&bins) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zeros_stay_zero() {
        let t = ofdm_modulate(&[Complex64::new(0.0, 0.0); 128], 64, 16).unwrap();
        assert!(t.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn length_errors() {
        assert!(ofdm_modulate(&[Complex64::new(0.0, 0.0); 65], 64, 16).is_err());
        assert!(ofdm_demodulate(&[Complex64::new(0.0, 0.0); 79], 64, 16).is_err());
    }
}
