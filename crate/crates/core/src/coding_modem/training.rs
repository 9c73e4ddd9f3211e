//! Training sequences: legacy short/long training symbols for the DL and
//! per-user BPSK LTF patterns for the UL.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fft::{bin_index, FftPlan};
use crate::framing::STF_REPETITIONS;
use crate::Complex64;

/// Nonzero STS bins as `(subcarrier, re, im)`.
const STS_BINS: [(i64, f64, f64); 12] = [
    (-24, 1.0, 1.0),
    (-20, -1.0, -1.0),
    (-16, 1.0, 1.0),
    (-12, -1.0, -1.0),
    (-8, -1.0, -1.0),
    (-4, 1.0, 1.0),
    (4, -1.0, -1.0),
    (8, -1.0, -1.0),
    (12, 1.0, 1.0),
    (16, 1.0, 1.0),
    (20, 1.0, 1.0),
    (24, 1.0, 1.0),
];

/// LTS values on subcarriers -26..=26 (DC is zero).
const LTS_VALUES: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1,
    -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

/// Scales `bins` so that the unitary IFFT output has unit mean power.
fn normalize(bins: &mut [Complex64]) {
    let e: f64 = bins.iter().map(|b| b.norm_sqr()).sum();
    if e > 0.0 {
        let s = sqrt(bins.len() as f64 / e);
        for b in bins.iter_mut() {
            *b *= s;
        }
    }
}

pub fn sts_freq(n_fft: usize) -> Vec<Complex64> {
    let mut bins = vec![Complex64::new(0.0, 0.0); n_fft];
    for &(k, re, im) in &STS_BINS {
        bins[bin_index(k, n_fft)] = Complex64::new(re, im);
    }
    normalize(&mut bins);
    bins
}

pub fn lts_freq(n_fft: usize) -> Vec<Complex64> {
    let mut bins = vec![Complex64::new(0.0, 0.0); n_fft];
    for (i, &v) in LTS_VALUES.iter().enumerate() {
        bins[bin_index(i as i64 - 26, n_fft)] = Complex64::new(f64::from(v), 0.0);
    }
    normalize(&mut bins);
    bins
}

/// DL training sequences plus the UL LTF pattern for one FFT size.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSequences {
    pub n_fft: usize,
    /// One short training sequence, `n_fft / 4` samples.
    pub sts: Vec<Complex64>,
    /// Ten repetitions of `sts`.
    pub stf: Vec<Complex64>,
    /// One long training sequence, `n_fft` samples, unit mean power.
    pub lts: Vec<Complex64>,
    pub lts_freq: Vec<Complex64>,
    /// Random BPSK value for every bin; a user's UL LTF keeps only the bins
    /// it owns.
    pub ul_pattern: Vec<Complex64>,
}

impl TrainingSequences {
    /// UL LTF bins for a user: the pattern on `subcarriers`, zero elsewhere.
    pub fn ul_ltf(&self, subcarriers: &[usize]) -> Vec<Complex64> {
        let mut l = vec![Complex64::new(0.0, 0.0); self.n_fft];
        for &m in subcarriers {
            l[m] = self.ul_pattern[m];
        }
        l
    }

    /// Legacy LTF: a double-length prefix then two copies of the LTS.
    pub fn ltf(&self, cp_len: usize) -> Vec<Complex64> {
        let n = self.lts.len();
        let mut out = Vec::with_capacity(2 * cp_len + 2 * n);
        out.extend_from_slice(&self.lts[n - 2 * cp_len..]);
        out.extend_from_slice(&self.lts);
        out.extend_from_slice(&self.lts);
        out
    }

    /// One LTS preceded by a `cp_len` cyclic prefix (M-LTF and P-LTF).
    pub fn lts_with_cp(&self, cp_len: usize) -> Vec<Complex64> {
        let n = self.lts.len();
        let mut out = Vec::with_capacity(cp_len + n);
        out.extend_from_slice(&self.lts[n - cp_len..]);
        out.extend_from_slice(&self.lts);
        out
    }
}

/// Builds the training sequences for `n_fft` (a power of two, at least 64).
/// `seed` fixes the UL LTF pattern.
pub fn synth_training(n_fft: usize, seed: u64) -> TrainingSequences {
    let plan = FftPlan::new(n_fft);
    let mut sts_full = sts_freq(n_fft);
    plan.inverse(&mut sts_full);
    let sts: Vec<Complex64> = sts_full[..n_fft / 4].to_vec();
    let stf = sts
        .iter()
        .copied()
        .cycle()
        .take(STF_REPETITIONS * sts.len())
        .collect();
    let lf = lts_freq(n_fft);
    let mut lts = lf.clone();
    plan.inverse(&mut lts);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ul_pattern = (0..n_fft)
        .map(|_| {
            if rng.next_u32() & 1 == 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        })
        .collect();
    TrainingSequences {
        n_fft,
        sts,
        stf,
        lts,
        lts_freq: lf,
        ul_pattern,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mean_power;

    #[test]
    fn stf_is_periodic() {
        let t = synth_training(64, 1);
        assert_eq!(t.sts.len(), 16);
        assert_eq!(t.stf.len(), 160);
        for p in 0..10 {
            for n in 0..16 {
                assert!((t.stf[n + 16 * p] - t.stf[n]).norm() < 1e-15);
            }
        }
        // the STS really is one period of the full IFFT
        let mut full = sts_freq(64);
        FftPlan::new(64).inverse(&mut full);
        for n in 0..64 {
            assert!((full[n] - full[n % 16]).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_power() {
        let t = synth_training(64, 1);
        assert!((mean_power(&t.lts) - 1.0).abs() < 1e-12);
        assert!((mean_power(&t.stf) - 1.0).abs() < 1e-12);
        assert_eq!(t.ltf(16).len(), 160);
    }

    #[test]
    fn ul_ltf_support() {
        let t = synth_training(64, 9);
        let a = t.ul_ltf(&[10, 13, 16]);
        assert_eq!(a.iter().filter(|v| v.norm() > 0.0).count(), 3);
        let b = t.ul_ltf(&[11, 14, 17]);
        assert!(a.iter().zip(&b).all(|(x, y)| (x * y).norm() == 0.0));
        assert_eq!(synth_training(64, 9), t);
    }
}
