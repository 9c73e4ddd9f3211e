//! Unitary DFT: iterative radix-2 for power-of-two sizes, direct
//! evaluation otherwise. Both directions scale by `1/sqrt(N)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, sin, sqrt};

use crate::Complex64;

/// Precomputed twiddles for one transform size.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    /// `exp(-2*pi*i*k/n)` for `k < n` (full table so the direct path can
    /// reuse it).
    twiddles: Vec<Complex64>,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        let twiddles = (0..n)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(cos(a), sin(a))
            })
            .collect();
        Self { n, twiddles }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform. `buf.len()` must equal the plan size.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, false);
    }

    /// In-place inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }

    fn twiddle(&self, k: usize, inverse: bool) -> Complex64 {
        let w = self.twiddles[k % self.n];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(buf.len(), n, "FFT buffer length does not match plan");
        if n <= 1 {
            return;
        }
        if n.is_power_of_two() {
            self.radix2(buf, inverse);
        } else {
            let src: Vec<Complex64> = buf.to_vec();
            for (k, out) in buf.iter_mut().enumerate() {
                *out = src
                    .iter()
                    .enumerate()
                    .map(|(t, &x)| x * self.twiddle(k * t, inverse))
                    .sum();
            }
        }
        let scale = 1.0 / sqrt(n as f64);
        for x in buf.iter_mut() {
            *x *= scale;
        }
    }

    fn radix2(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for chunk in buf.chunks_exact_mut(len) {
                for k in 0..half {
                    let w = self.twiddle(k * stride, inverse);
                    let a = chunk[k];
                    let b = chunk[k + half] * w;
                    chunk[k] = a + b;
                    chunk[k + half] = a - b;
                }
            }
            len *= 2;
        }
    }
}

pub fn fft(buf: &mut [Complex64]) {
    FftPlan::new(buf.len()).forward(buf);
}

pub fn ifft(buf: &mut [Complex64]) {
    FftPlan::new(buf.len()).inverse(buf);
}

/// Buffer index of signed subcarrier `k` in an `n`-point transform.
pub fn bin_index(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Signed subcarrier number of buffer index `m`.
pub fn signed_bin(m: usize, n: usize) -> i64 {
    if m < n.div_ceil(2) {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, &v)| {
                        let a = -2.0 * PI * (k * t) as f64 / n as f64;
                        v * Complex64::new(cos(a), sin(a))
                    })
                    .sum::<Complex64>()
                    / sqrt(n as f64)
            })
            .collect()
    }

    #[test]
    fn radix2_matches_direct_sum() {
        let x: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new(sin(i as f64 * 0.7), cos(i as f64 * 1.3)))
            .collect();
        let mut y = x.clone();
        fft(&mut y);
        for (a, b) in y.iter().zip(naive(&x)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn odd_size_round_trip() {
        let x: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let mut y = x.clone();
        fft(&mut y);
        ifft(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn impulse_is_flat() {
        let mut x = vec![Complex64::new(0.0, 0.0); 16];
        x[0] = Complex64::new(4.0, 0.0);
        fft(&mut x);
        assert!(x.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn bin_mapping() {
        assert_eq!(bin_index(-1, 64), 63);
        assert_eq!(bin_index(26, 64), 26);
        assert_eq!(signed_bin(63, 64), -1);
        assert_eq!(signed_bin(10, 64), 10);
    }
}
