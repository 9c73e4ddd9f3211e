use alloc::vec::Vec;

use libm::sqrt;

use crate::coding_modem::fft::FftPlan;
use crate::coding_modem::hard_decision;
use crate::coding_modem::ofdm::demodulate_at;
use crate::coding_modem::qam::{qam_modulate, qam_soft_demod_weighted};
use crate::coding_modem::training::TrainingSequences;
use crate::packet::{decode_payload, PayloadFormat};
use crate::{linear_to_db, mean_power, Complex64, Error, Result};

/// Samples by which the FFT window starts ahead of the nominal symbol
/// body, inside the cyclic prefix.
pub const CP_CUT: usize = 2;

/// Per-subcarrier channel estimate of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub subcarriers: Vec<usize>,
    /// `H[m]` for each entry of `subcarriers`.
    pub gains: Vec<Complex64>,
    /// Received LTS bins of the two copies, same order.
    pub lts1: Vec<Complex64>,
    pub lts2: Vec<Complex64>,
}

impl ChannelEstimate {
    pub fn gain(&self, m: usize) -> Option<Complex64> {
        self.subcarriers
            .iter()
            .position(|&s| s == m)
            .map(|i| self.gains[i])
    }
}

/// Averages the two LTS observations divided by the known LTF values on
/// `subcarriers`. `reference` holds the transmitted bin values.
pub fn estimate_ul_channel(
    lts1_bins: &[Complex64],
    lts2_bins: &[Complex64],
    reference: &[Complex64],
    subcarriers: &[usize],
) -> Result<ChannelEstimate> {
    let n = reference.len();
    if lts1_bins.len() != n || lts2_bins.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: lts1_bins.len().min(lts2_bins.len()),
        });
    }
    let mut gains = Vec::with_capacity(subcarriers.len());
    for &m in subcarriers {
        let l = *reference.get(m).ok_or(Error::Allocation("subcarrier out of range"))?;
        if l.norm_sqr() == 0.0 {
            return Err(Error::Allocation("LTF reference is zero on an allocated bin"));
        }
        gains.push(0.5 * (lts1_bins[m] / l + lts2_bins[m] / l));
    }
    Ok(ChannelEstimate {
        subcarriers: subcarriers.to_vec(),
        gains,
        lts1: subcarriers.iter().map(|&m| lts1_bins[m]).collect(),
        lts2: subcarriers.iter().map(|&m| lts2_bins[m]).collect(),
    })
}

/// `|S| * P / (N_FFT * N0)` in dB.
pub fn ul_snr_db(n_sc: usize, p_i: f64, n0: f64, n_fft: usize) -> f64 {
    linear_to_db(n_sc as f64 * p_i / (n_fft as f64 * n0))
}

/// UL received SNR from the LTF bins (`P_i`: mean power over
/// `subcarriers`) and a noise-only guard window (`N0`: mean sample power,
/// equal to the per-bin noise power under the unitary FFT).
pub fn measure_ul_snr(
    ltf_bins: &[Complex64],
    guard: &[Complex64],
    subcarriers: &[usize],
    n_fft: usize,
) -> Result<f64> {
    if guard.is_empty() || subcarriers.is_empty() {
        return Err(Error::EmptyInput);
    }
    let p_i = subcarriers.iter().map(|&m| ltf_bins[m].norm_sqr()).sum::<f64>()
        / subcarriers.len() as f64;
    Ok(ul_snr_db(subcarriers.len(), p_i, mean_power(guard), n_fft))
}

/// Per-user outcome of UL reception.
#[derive(Debug, Clone, PartialEq)]
pub struct UlDecodeResult {
    pub user: u8,
    /// Decoded information bits; unreliable when `crc_ok` is false.
    pub bits: Vec<u8>,
    pub crc_ok: bool,
    /// Equalized constellation points, padding included.
    pub equalized: Vec<Complex64>,
    /// Nearest constellation points to `equalized`.
    pub decided: Vec<Complex64>,
    /// Hard decisions on the coded bits before Viterbi decoding.
    pub raw_bits: Vec<u8>,
    pub ul_snr_db: f64,
}

/// One user as the AP knows it from the allocation map.
#[derive(Debug, Clone, PartialEq)]
pub struct UlUser {
    pub user: u8,
    pub subcarriers: Vec<usize>,
    pub format: PayloadFormat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlReceiverConfig {
    pub n_fft: usize,
    pub cp_len: usize,
    /// Payload symbols in the UL slot (shared by all users).
    pub n_symbols: usize,
    /// Noise-only samples immediately before the trigger.
    pub guard: usize,
}

pub(crate) fn snap(symbols: &[Complex64], scheme: crate::coding_modem::Modulation, llrs: &[f64]) -> Vec<Complex64> {
    qam_modulate(&hard_decision(llrs), scheme).unwrap_or_else(|_| symbols.to_vec())
}

/// Equalizes `bins` on `subcarriers` and appends symbols and per-symbol
/// noise variance (per real dimension).
pub(crate) fn equalize_into(
    bins: &[Complex64],
    subcarriers: &[usize],
    gains: &[Complex64],
    scale: f64,
    n0: f64,
    symbols: &mut Vec<Complex64>,
    noise: &mut Vec<f64>,
) {
    for (&m, &h) in subcarriers.iter().zip(gains) {
        let hs = h * scale;
        let p = hs.norm_sqr();
        if p > 0.0 && p.is_finite() {
            symbols.push(bins[m] / hs);
            noise.push(0.5 * n0 / p);
        } else {
            symbols.push(Complex64::new(0.0, 0.0));
            noise.push(f64::MAX);
        }
    }
}

/// Multiuser UL reception starting at the scheduled index `trigger` (the
/// first sample of the UL LTF). Every user is demultiplexed from the same
/// FFT outputs; a user that did not transmit simply fails its CRC.
pub fn decode_ul(
    rx: &[Complex64],
    trigger: usize,
    users: &[UlUser],
    training: &TrainingSequences,
    cfg: &UlReceiverConfig,
) -> Result<Vec<UlDecodeResult>> {
    let n = cfg.n_fft;
    let cp = cfg.cp_len;
    let sym = n + cp;
    let plan = FftPlan::new(n);
    let cut = CP_CUT.min(cp);
    let window = |k: usize| trigger + k * sym + cp - cut;

    let y1 = demodulate_at(rx, window(0), &plan)?;
    let y2 = demodulate_at(rx, window(1), &plan)?;
    let guard = &rx[trigger.saturating_sub(cfg.guard)..trigger.saturating_sub(cut)];

    let n0_from_ltf = |sc: &[usize]| {
        sc.iter().map(|&m| (y1[m] - y2[m]).norm_sqr()).sum::<f64>() / (2 * sc.len()) as f64
    };

    let mut payload_bins = Vec::with_capacity(cfg.n_symbols);
    for k in 0..cfg.n_symbols {
        payload_bins.push(demodulate_at(rx, window(2 + k), &plan)?);
    }

    let mut results = Vec::with_capacity(users.len());
    for u in users {
        let scale = sqrt(n as f64 / u.subcarriers.len() as f64);
        let reference: Vec<Complex64> = training
            .ul_ltf(&u.subcarriers)
            .iter()
            .map(|l| l * scale)
            .collect();
        let est = estimate_ul_channel(&y1, &y2, &reference, &u.subcarriers)?;
        let n0 = if guard.is_empty() {
            n0_from_ltf(&u.subcarriers)
        } else {
            mean_power(guard)
        }
        .max(1e-30);
        let avg: Vec<Complex64> = y1.iter().zip(&y2).map(|(a, b)| 0.5 * (a + b)).collect();
        let p_i = u.subcarriers.iter().map(|&m| avg[m].norm_sqr()).sum::<f64>()
            / u.subcarriers.len() as f64;
        let snr = ul_snr_db(u.subcarriers.len(), p_i, n0, n);

        let mut symbols = Vec::with_capacity(cfg.n_symbols * u.subcarriers.len());
        let mut noise = Vec::with_capacity(symbols.capacity());
        for bins in &payload_bins {
            equalize_into(bins, &u.subcarriers, &est.gains, scale, n0, &mut symbols, &mut noise);
        }
        let llrs = qam_soft_demod_weighted(&symbols, &noise, u.format.modulation)?;
        let (bits, crc_ok) = decode_payload(&llrs, u.format.info_bits())?;
        let decided = snap(&symbols, u.format.modulation, &llrs);
        results.push(UlDecodeResult {
            user: u.user,
            bits,
            crc_ok,
            raw_bits: hard_decision(&llrs[..u.format.coded_bits().min(llrs.len())]),
            equalized: symbols,
            decided,
            ul_snr_db: snr,
        });
    }
    Ok(results)
}
