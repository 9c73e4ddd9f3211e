//! Link-quality metrics and small statistics helpers.

use alloc::vec::Vec;

use libm::{log10, round, sqrt};

use crate::{Complex64, Error, Result};

/// RMS error vector magnitude of `received` against the matching `ideal`
/// points, normalized by the mean power of the distinct points of
/// `constellation`.
pub fn evm(received: &[Complex64], ideal: &[Complex64], constellation: &[Complex64]) -> Result<f64> {
    if received.is_empty() || constellation.is_empty() {
        return Err(Error::EmptyInput);
    }
    if received.len() != ideal.len() {
        return Err(Error::LengthMismatch {
            expected: received.len(),
            got: ideal.len(),
        });
    }
    let mut unique: Vec<Complex64> = Vec::with_capacity(constellation.len());
    for &c in constellation {
        if !unique.iter().any(|u| (u - c).norm() < 1e-12) {
            unique.push(c);
        }
    }
    let p_ideal = unique.iter().map(|c| c.norm_sqr()).sum::<f64>() / unique.len() as f64;
    let err = received
        .iter()
        .zip(ideal)
        .map(|(r, s)| (r - s).norm_sqr())
        .sum::<f64>()
        / received.len() as f64;
    Ok(sqrt(err / p_ideal))
}

/// Fraction of differing bits.
pub fn ber(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            got: rx.len(),
        });
    }
    if tx.is_empty() {
        return Err(Error::EmptyInput);
    }
    let errors = tx.iter().zip(rx).filter(|(a, b)| (*a & 1) != (*b & 1)).count();
    Ok(errors as f64 / tx.len() as f64)
}

/// Fraction of packets whose CRC failed. `crc_ok[i]` is true on success.
pub fn per(crc_ok: &[bool]) -> Result<f64> {
    if crc_ok.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(crc_ok.iter().filter(|ok| !**ok).count() as f64 / crc_ok.len() as f64)
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `P(X <= x)`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `v` with `eval(v) >= q`.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.sorted.is_empty() {
            return None;
        }
        let n = self.sorted.len();
        let k = ((q.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        Some(self.sorted[k - 1])
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }
}

/// Builds an ECDF; NaNs are dropped.
pub fn ecdf(values: &[f64]) -> Ecdf {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    Ecdf { sorted }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    ecdf(values).quantile(0.5)
}

/// Fraction of `values` lying within `tol * spacing` of some multiple of
/// `spacing`.
pub fn fraction_near_levels(values: &[f64], spacing: f64, tol: f64) -> f64 {
    if values.is_empty() || spacing <= 0.0 {
        return 0.0;
    }
    let near = values
        .iter()
        .filter(|&&v| {
            let m = round(v / spacing);
            (v - m * spacing).abs() <= tol * spacing
        })
        .count();
    near as f64 / values.len() as f64
}

/// First crossing of `target` by a decreasing curve, interpolated linearly
/// in `x` against `log10(y)`. Points must be sorted by `x`. A zero after
/// the crossing pins it to that point.
pub fn crossing_point(xs: &[f64], ys: &[f64], target: f64) -> Option<f64> {
    let lt = log10(target);
    for i in 1..xs.len().min(ys.len()) {
        let (y0, y1) = (ys[i - 1], ys[i]);
        if y0 >= target && y1 < target {
            if y1 <= 0.0 {
                // no errors observed: the crossing is at most xs[i]
                return Some(if y0 == target { xs[i - 1] } else { xs[i] });
            }
            let (l0, l1) = (log10(y0), log10(y1));
            let t = (l0 - lt) / (l0 - l1);
            return Some(xs[i - 1] + t * (xs[i] - xs[i - 1]));
        }
    }
    None
}

/// SNR advantage, in dB, of concentrating power on `n_used_a` subcarriers
/// instead of `n_used_b`.
pub fn effective_snr_gain(n_used_a: usize, n_used_b: usize) -> f64 {
    10.0 * log10(n_used_b as f64 / n_used_a as f64)
}
