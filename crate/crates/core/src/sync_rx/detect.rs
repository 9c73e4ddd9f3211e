use alloc::vec::Vec;

use libm::{cos, sin};

use crate::cfo::angle;
use crate::coding_modem::training::TrainingSequences;
use crate::framing::STF_REPETITIONS;
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Threshold on the normalized STF autocorrelation `|P| / R`.
    pub gate_threshold: f64,
    /// Consecutive positions above the gate threshold needed to fire.
    pub gate_run: usize,
    /// Threshold on the normalized LTS cross-correlation score, in `[0, 1]`.
    pub lts_threshold: f64,
    /// Cyclic prefix of the packet; the LTF prefix is twice as long.
    pub cp_len: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            gate_threshold: 0.5,
            gate_run: 32,
            lts_threshold: 0.3,
            cp_len: 16,
        }
    }
}

/// Finds the first STF sample of a DL (or TDMA) packet.
///
/// A sliding STS-lag autocorrelation opens a gate on the STF plateau and
/// gives a coarse CFO; the LTS position is then the peak of the
/// CFO-compensated cross-correlation with the known LTS, summed over both
/// copies. The start is that peak minus the STF and the double prefix.
pub fn detect_dl_start(
    samples: &[Complex64],
    training: &TrainingSequences,
    cfg: &DetectorConfig,
) -> Result<usize> {
    let delta = training.sts.len();
    let n = training.lts.len();
    let win = 4 * delta;
    let preamble = STF_REPETITIONS * delta + 2 * cfg.cp_len;
    if samples.len() < preamble + 2 * n + win {
        return Err(Error::TooShort {
            needed: preamble + 2 * n + win,
            got: samples.len(),
        });
    }

    // sliding P(d) = sum conj(r[d+k]) r[d+k+delta], R(d) = sum |r[d+k+delta]|^2
    let last = samples.len() - win - delta;
    let mut p: Complex64 = (0..win).map(|k| samples[k].conj() * samples[k + delta]).sum();
    let mut r: f64 = (0..win).map(|k| samples[k + delta].norm_sqr()).sum();
    let mut run = 0;
    let mut gate = None;
    for d in 0..=last {
        if r > 0.0 && p.norm() > cfg.gate_threshold * r {
            run += 1;
            if run == cfg.gate_run {
                gate = Some((d + 1 - run, p));
                break;
            }
        } else {
            run = 0;
        }
        if d < last {
            p += samples[d + win].conj() * samples[d + win + delta] - samples[d].conj() * samples[d + delta];
            r += samples[d + win + delta].norm_sqr() - samples[d + delta].norm_sqr();
        }
    }
    let (gate_start, p_gate) = gate.ok_or(Error::DetectionFailed)?;
    let coarse = angle(p_gate) / delta as f64;

    // LTS1 is expected about `preamble` samples after the gate opens
    let lo = gate_start.saturating_sub(2 * delta);
    let hi = (gate_start + preamble + 4 * delta).min(samples.len() - 2 * n);
    if hi <= lo {
        return Err(Error::DetectionFailed);
    }
    let seg: Vec<Complex64> = samples[lo..hi + 2 * n]
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let ph = -coarse * k as f64;
            s * Complex64::new(cos(ph), sin(ph))
        })
        .collect();
    let e_lts: f64 = training.lts.iter().map(|x| x.norm_sqr()).sum();
    let xcorr = |at: usize| -> (f64, f64) {
        let c: Complex64 = training
            .lts
            .iter()
            .zip(&seg[at..at + n])
            .map(|(l, s)| l.conj() * s)
            .sum();
        let e: f64 = seg[at..at + n].iter().map(|s| s.norm_sqr()).sum();
        (c.norm_sqr(), e)
    };
    let mut best = (0.0, 0usize);
    for at in 0..(hi - lo) {
        let (c1, e1) = xcorr(at);
        let (c2, e2) = xcorr(at + n);
        let denom = e_lts * (e1 + e2);
        let score = if denom > 0.0 { (c1 + c2) / denom } else { 0.0 };
        if score > best.0 {
            best = (score, at);
        }
    }
    if best.0 < cfg.lts_threshold {
        return Err(Error::DetectionFailed);
    }
    let lts1 = lo + best.1;
    lts1.checked_sub(preamble).ok_or(Error::DetectionFailed)
}
