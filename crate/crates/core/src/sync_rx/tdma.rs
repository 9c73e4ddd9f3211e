use alloc::vec::Vec;

use libm::{cos, sin, sqrt};

use super::detect::{detect_dl_start, DetectorConfig};
use super::receiver::{equalize_into, estimate_ul_channel, snap, ul_snr_db, UlDecodeResult, CP_CUT};
use crate::cfo::{angle, coarse_estimate, lagged_correlation};
use crate::coding_modem::fft::FftPlan;
use crate::coding_modem::hard_decision;
use crate::coding_modem::ofdm::demodulate_at;
use crate::coding_modem::qam::qam_soft_demod_weighted;
use crate::coding_modem::training::TrainingSequences;
use crate::framing::{usable_bins, STF_REPETITIONS};
use crate::packet::{tdma_data_bins, tdma_pilot_bins, PayloadFormat};
use crate::{Complex64, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdmaReceiverConfig {
    pub n_fft: usize,
    pub cp_len: usize,
    pub n_symbols: usize,
    pub detector: DetectorConfig,
}

/// Single-user OFDM receiver: packet detection, STF/LTF CFO correction,
/// LTF channel estimate, per-symbol common phase correction from the four
/// pilots, zero-forcing, soft Viterbi and CRC. Detection failure is
/// returned as an error.
pub fn tdma_baseline_decode(
    rx: &[Complex64],
    training: &TrainingSequences,
    format: &PayloadFormat,
    cfg: &TdmaReceiverConfig,
) -> Result<UlDecodeResult> {
    let n = cfg.n_fft;
    let cp = cfg.cp_len;
    let start = detect_dl_start(rx, training, &cfg.detector)?;
    let pkt = &rx[start..];
    let delta = n / 4;
    let lts1 = STF_REPETITIONS * delta + 2 * cp;

    let coarse = coarse_estimate(pkt, delta)?;
    let z = lagged_correlation(pkt, lts1, lts1 + n, n)?;
    let ph = -coarse * n as f64;
    let fine = angle(z * Complex64::new(cos(ph), sin(ph))) / n as f64;
    let f = coarse + fine;

    let sym = n + cp;
    let body_end = lts1 + 2 * n + cfg.n_symbols * sym;
    let end = body_end.min(pkt.len());
    let comp: Vec<Complex64> = pkt[..end]
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let a = -f * k as f64;
            s * Complex64::new(cos(a), sin(a))
        })
        .collect();

    let plan = FftPlan::new(n);
    let cut = CP_CUT.min(cp);
    let y1 = demodulate_at(&comp, lts1 - cut, &plan)?;
    let y2 = demodulate_at(&comp, lts1 + n - cut, &plan)?;
    let used = usable_bins(n);
    let scale = sqrt(n as f64 / used.len() as f64);
    let est = estimate_ul_channel(&y1, &y2, &training.lts_freq, &used)?;
    let n0 = (used.iter().map(|&m| (y1[m] - y2[m]).norm_sqr()).sum::<f64>()
        / (2 * used.len()) as f64)
        .max(1e-30);

    let data = tdma_data_bins(n);
    let pilots = tdma_pilot_bins(n);
    let gain_of = |m: usize| est.gain(m).unwrap_or(Complex64::new(0.0, 0.0));
    let data_gains: Vec<Complex64> = data.iter().map(|&m| gain_of(m)).collect();
    let p_i = data
        .iter()
        .map(|&m| (0.5 * (y1[m] + y2[m])).norm_sqr())
        .sum::<f64>()
        / data.len() as f64;

    let mut symbols = Vec::with_capacity(cfg.n_symbols * data.len());
    let mut noise = Vec::with_capacity(symbols.capacity());
    for k in 0..cfg.n_symbols {
        let at = lts1 + 2 * n + k * sym + cp - cut;
        let mut bins = demodulate_at(&comp, at, &plan)?;
        let cpe: Complex64 = pilots
            .iter()
            .map(|&(m, v)| bins[m] * (gain_of(m) * scale * v).conj())
            .sum();
        if cpe.norm_sqr() > 0.0 {
            let rot = Complex64::from_polar(1.0, -angle(cpe));
            for b in &mut bins {
                *b *= rot;
            }
        }
        equalize_into(&bins, &data, &data_gains, scale, n0, &mut symbols, &mut noise);
    }
    let llrs = qam_soft_demod_weighted(&symbols, &noise, format.modulation)?;
    let (bits, crc_ok) = crate::packet::decode_payload(&llrs, format.info_bits())?;
    let decided = snap(&symbols, format.modulation, &llrs);
    Ok(UlDecodeResult {
        user: 0,
        bits,
        crc_ok,
        raw_bits: hard_decision(&llrs[..format.coded_bits().min(llrs.len())]),
        equalized: symbols,
        decided,
        ul_snr_db: ul_snr_db(data.len(), p_i, n0, n),
    })
}
