//! Carrier frequency offset estimation and correction.
//!
//! The estimator runs three stages over the DL preamble and postamble:
//! coarse (adjacent STS pairs), fine (LTS1 against LTS2) and ultra-fine
//! (LTS2 against the P-LTF at the end of the packet). The ultra-fine stage
//! only sees the fractional part of the long-baseline rotation; M-LTFs
//! spread along the payload recover the integer number of turns.
//!
//! All rates are radians per sample. A positive rate means the received
//! signal rotates as `exp(+j*f*n)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{atan2, cos, round, sin};

use crate::framing::{FieldKind, PacketLayout, STF_REPETITIONS};
use crate::{Complex64, Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Largest per-segment rotation (radians) accepted without flagging a
/// possible wrap.
pub const SEGMENT_GUARD: f64 = 0.9 * PI;

/// Output of the full estimation chain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CfoEstimate {
    pub coarse: f64,
    pub fine: f64,
    /// Fractional long-baseline estimate in `[0, 2*pi/lambda_p)`.
    pub ultrafine: f64,
    pub wrap_count: i64,
    /// `ultrafine + wrap_count * 2*pi/lambda_p`.
    pub combined: f64,
    /// Set when a training-segment rotation came close to `pi` or the
    /// segment chain disagreed with the ultra-fine stage.
    pub ambiguous: bool,
}

impl CfoEstimate {
    pub fn total(&self) -> f64 {
        self.coarse + self.fine + self.combined
    }

    /// Precoding phase rate: minus the total estimate.
    pub fn precode_rate(&self) -> f64 {
        -self.total()
    }

    /// Estimate of the opposite direction of a reciprocal link.
    pub fn reciprocal(&self) -> Self {
        Self {
            coarse: -self.coarse,
            fine: -self.fine,
            ultrafine: -self.ultrafine,
            wrap_count: -self.wrap_count,
            combined: -self.combined,
            ambiguous: self.ambiguous,
        }
    }

    /// An estimate holding a single total rate, e.g. an STF-only result.
    pub fn from_total(total: f64) -> Self {
        Self {
            coarse: total,
            ..Self::default()
        }
    }
}

/// Ground truth for one packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfoTruth {
    pub cfo: f64,
}

impl CfoTruth {
    pub fn residual(&self, estimate: f64) -> f64 {
        residual_cfo(estimate, self.cfo)
    }
}

/// Angle in `(-pi, pi]`.
#[inline]
pub fn angle(z: Complex64) -> f64 {
    let a = atan2(z.im, z.re);
    if a <= -PI {
        a + TWO_PI
    } else {
        a
    }
}

#[inline]
fn unit(phase: f64) -> Complex64 {
    Complex64::new(cos(phase), sin(phase))
}

/// `sum_{n < len} conj(x[a + n]) * x[b + n]`.
pub fn lagged_correlation(x: &[Complex64], a: usize, b: usize, len: usize) -> Result<Complex64> {
    let end = a.max(b) + len;
    if x.len() < end {
        return Err(Error::TooShort {
            needed: end,
            got: x.len(),
        });
    }
    Ok(x[a..a + len]
        .iter()
        .zip(&x[b..b + len])
        .map(|(p, q)| p.conj() * q)
        .sum())
}

/// Rotates `x` by `exp(j*f*(n + origin))`.
pub fn rotate(x: &mut [Complex64], f: f64, origin: i64) {
    if f == 0.0 {
        return;
    }
    for (n, s) in x.iter_mut().enumerate() {
        *s *= unit(f * (n as i64 + origin) as f64);
    }
}

/// Removes a CFO of `f`: `out[n] = in[n] * exp(-j*f*n)`.
pub fn compensate(samples: &[Complex64], f: f64) -> Vec<Complex64> {
    let mut out = samples.to_vec();
    rotate(&mut out, -f, 0);
    out
}

/// Averages the phase of the nine adjacent-STS correlations. `stf` starts
/// at the first STF sample and holds at least ten STSs of `delta` samples.
pub fn coarse_estimate(stf: &[Complex64], delta: usize) -> Result<f64> {
    if delta == 0 {
        return Err(Error::EmptyInput);
    }
    let needed = STF_REPETITIONS * delta;
    if stf.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: stf.len(),
        });
    }
    let mut acc = 0.0;
    for p in 1..STF_REPETITIONS {
        let z = lagged_correlation(stf, (p - 1) * delta, p * delta, delta)?;
        acc += angle(z) / delta as f64;
    }
    Ok(acc / (STF_REPETITIONS - 1) as f64)
}

/// LTS1-to-LTS2 estimate in `(-pi/lambda, pi/lambda]`. `samples[0]` is the
/// first sample of LTS1.
pub fn fine_estimate(samples: &[Complex64], gamma: usize, lambda: usize) -> Result<f64> {
    if lambda == 0 {
        return Err(Error::EmptyInput);
    }
    let z = lagged_correlation(samples, 0, lambda, gamma)?;
    Ok(angle(z) / lambda as f64)
}

/// Maps an angle to `[0, 2*pi)`.
fn positive_angle(a: f64) -> f64 {
    let r = if a < 0.0 { a + TWO_PI } else { a };
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Long-baseline estimate in `[0, 2*pi/lambda_p)`. `samples[0]` is the
/// first sample of the reference LTS; the P-LTF body starts `lambda_p`
/// samples later.
pub fn ultrafine_estimate(samples: &[Complex64], gamma: usize, lambda_p: usize) -> Result<f64> {
    if lambda_p == 0 {
        return Err(Error::EmptyInput);
    }
    let z = lagged_correlation(samples, 0, lambda_p, gamma)?;
    Ok(positive_angle(angle(z)) / lambda_p as f64)
}

/// Integer-turn recovery result.
#[derive(Debug, Clone, PartialEq)]
pub struct WrapRecovery {
    pub wrap_count: i64,
    pub combined: f64,
    /// Rotation of each training segment, `(-pi, pi]`.
    pub segment_angles: Vec<f64>,
    pub ambiguous: bool,
}

/// Combines per-segment rotations with the fractional ultra-fine estimate.
///
/// The segment sum tracks the whole rotation between LTS2 and the P-LTF;
/// its distance from the fractional phase, in whole turns, is the wrap
/// count.
pub fn recover_wraps(segment_angles: &[f64], ultrafine: f64, lambda_p: usize) -> WrapRecovery {
    let lp = lambda_p as f64;
    let total: f64 = segment_angles.iter().sum();
    let frac = ultrafine * lp;
    let m = round((total - frac) / TWO_PI);
    let mismatch = (total - frac - m * TWO_PI).abs();
    let ambiguous = segment_angles.iter().any(|a| a.abs() > SEGMENT_GUARD) || mismatch > PI / 2.0;
    WrapRecovery {
        wrap_count: m as i64,
        combined: ultrafine + m * TWO_PI / lp,
        segment_angles: segment_angles.to_vec(),
        ambiguous,
    }
}

/// Runs integer recovery over a fine-compensated packet (`samples[0]` is
/// the first STF sample). Without M-LTFs the chain is the single
/// LTS2-to-P-LTF segment, which can only resolve rotations below half a
/// turn.
pub fn mltf_recover(samples: &[Complex64], layout: &PacketLayout, ultrafine: f64) -> Result<WrapRecovery> {
    let chain = layout.recovery_chain();
    if chain.len() < 2 {
        return Err(Error::Layout("layout has no LTS2 / P-LTF pair"));
    }
    let lambda_p = layout.pltf_dist.ok_or(Error::Layout("layout has no P-LTF"))?;
    let angles = chain
        .windows(2)
        .map(|w| lagged_correlation(samples, w[0], w[1], layout.lts_len).map(angle))
        .collect::<Result<Vec<_>>>()?;
    Ok(recover_wraps(&angles, ultrafine, lambda_p))
}

/// Full coarse / fine / ultra-fine chain over a received DL packet whose
/// first sample is the first STF sample.
///
/// Compensating by a rate `f` multiplies a lag-`d` correlation by
/// `exp(-j*f*d)`, so each stage applies earlier corrections to its
/// correlation instead of rotating the whole packet.
pub fn slp_estimate(samples: &[Complex64], layout: &PacketLayout) -> Result<CfoEstimate> {
    let coarse = coarse_estimate(samples, layout.sts_len)?;
    let lts1 = layout
        .body_start(FieldKind::Lts1)
        .ok_or(Error::Layout("layout has no LTS1"))?;
    let lts2 = layout
        .body_start(FieldKind::Lts2)
        .ok_or(Error::Layout("layout has no LTS2"))?;
    let lambda_p = layout.pltf_dist.ok_or(Error::Layout("layout has no P-LTF"))?;
    let gamma = layout.lts_len;

    let lambda = lts2 - lts1;
    let z = lagged_correlation(samples, lts1, lts2, gamma)? * unit(-coarse * lambda as f64);
    let fine = angle(z) / lambda as f64;
    let pre = coarse + fine;

    let z = lagged_correlation(samples, lts2, lts2 + lambda_p, gamma)? * unit(-pre * lambda_p as f64);
    let ultrafine = positive_angle(angle(z)) / lambda_p as f64;

    let angles = layout
        .recovery_chain()
        .windows(2)
        .map(|w| {
            lagged_correlation(samples, w[0], w[1], gamma)
                .map(|z| angle(z * unit(-pre * (w[1] - w[0]) as f64)))
        })
        .collect::<Result<Vec<_>>>()?;
    let r = recover_wraps(&angles, ultrafine, lambda_p);
    Ok(CfoEstimate {
        coarse,
        fine,
        ultrafine,
        wrap_count: r.wrap_count,
        combined: r.combined,
        ambiguous: r.ambiguous,
    })
}

/// STF-only and STF+LTF estimates, for comparison with the full chain.
pub fn stf_ltf_estimates(samples: &[Complex64], layout: &PacketLayout) -> Result<(f64, f64)> {
    let coarse = coarse_estimate(samples, layout.sts_len)?;
    let lts1 = layout
        .body_start(FieldKind::Lts1)
        .ok_or(Error::Layout("layout has no LTS1"))?;
    let lambda = layout.lts_gap;
    let z = lagged_correlation(samples, lts1, lts1 + lambda, layout.lts_len)?
        * unit(-coarse * lambda as f64);
    Ok((coarse, coarse + angle(z) / lambda as f64))
}

/// Applies `x'[n] = x[n] * exp(-j*total*n)` where `total` is the sum of
/// the estimate's components. To pre-cancel the UL CFO, pass the
/// UL-direction estimate (see [`CfoEstimate::reciprocal`]).
pub fn precode(samples: &[Complex64], estimate: &CfoEstimate) -> Vec<Complex64> {
    let mut out = samples.to_vec();
    rotate(&mut out, estimate.precode_rate(), 0);
    out
}

pub fn rad_per_sample_to_hz(f: f64, sample_rate: f64) -> f64 {
    f * sample_rate / TWO_PI
}

pub fn hz_to_rad_per_sample(hz: f64, sample_rate: f64) -> f64 {
    hz * TWO_PI / sample_rate
}

/// Absolute difference between an estimate and the true offset.
pub fn residual_cfo(estimate: f64, truth: f64) -> f64 {
    (estimate - truth).abs()
}
