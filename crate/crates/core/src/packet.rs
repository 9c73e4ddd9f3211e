//! Transmit-side packet assembly: DL packets (with CI, M-LTFs, P-LTF),
//! per-user UL packets, and single-user OFDM-TDMA packets with pilots.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::coding_modem::conv::{conv_encode, viterbi_decode_soft, TAIL_BITS};
use crate::coding_modem::crc::{crc32_append, crc32_check};
use crate::coding_modem::fft::{bin_index, FftPlan};
use crate::coding_modem::ofdm::modulate_symbol_into;
use crate::coding_modem::qam::{qam_modulate, Modulation};
use crate::coding_modem::training::TrainingSequences;
use crate::framing::{
    build_dl_layout, build_ul_layout, usable_bins, FieldKind, LayoutParams, PacketLayout,
};
use crate::{Complex64, Error, Result};

/// Size of a coded payload. `packet_bytes` counts the encoder input:
/// information bits, the CRC32 and the six tail bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayloadFormat {
    pub packet_bytes: usize,
    pub modulation: Modulation,
}

impl PayloadFormat {
    pub fn new(packet_bytes: usize, modulation: Modulation) -> Result<Self> {
        if 8 * packet_bytes < 32 + TAIL_BITS {
            return Err(Error::Layout("packet too small for CRC and tail"));
        }
        Ok(Self {
            packet_bytes,
            modulation,
        })
    }

    pub fn info_bits(&self) -> usize {
        8 * self.packet_bytes - 32 - TAIL_BITS
    }

    pub fn coded_bits(&self) -> usize {
        16 * self.packet_bytes
    }

    /// OFDM symbols needed with `n_sc` data subcarriers.
    pub fn n_symbols(&self, n_sc: usize) -> usize {
        self.coded_bits()
            .div_ceil(n_sc * self.modulation.bits_per_symbol())
    }
}

/// CRC32 then rate-1/2 convolutional encoding.
pub fn encode_payload(info: &[u8]) -> Vec<u8> {
    conv_encode(&crc32_append(info))
}

/// Soft Viterbi over the first `2 * (n_info + 38)` LLRs (the rest is
/// padding), then the CRC check. Returns the information bits and whether
/// the CRC passed.
pub fn decode_payload(llrs: &[f64], n_info: usize) -> Result<(Vec<u8>, bool)> {
    let n_coded = 2 * (n_info + 32 + TAIL_BITS);
    let coded = llrs.get(..n_coded).ok_or(Error::TooShort {
        needed: n_coded,
        got: llrs.len(),
    })?;
    let mut msg = viterbi_decode_soft(coded)?;
    let ok = crc32_check(&msg)?;
    msg.truncate(n_info);
    Ok((msg, ok))
}

/// Places `symbols` on `bins`, one OFDM symbol at a time, zero-padding the
/// last one, and scales so that the time-domain power is one.
fn fill_symbols(
    symbols: &[Complex64],
    bins: &[usize],
    n_symbols: usize,
    n_fft: usize,
    extra: &[(usize, Complex64)],
) -> Vec<Vec<Complex64>> {
    let used = (bins.len() + extra.len()) as f64;
    let scale = sqrt(n_fft as f64 / used);
    (0..n_symbols)
        .map(|s| {
            let mut f = vec![Complex64::new(0.0, 0.0); n_fft];
            for (i, &m) in bins.iter().enumerate() {
                if let Some(&v) = symbols.get(s * bins.len() + i) {
                    f[m] = v * scale;
                }
            }
            for &(m, v) in extra {
                f[m] = v * scale;
            }
            f
        })
        .collect()
}

fn bpsk(bits: &[u8]) -> Vec<Complex64> {
    bits.iter()
        .map(|&b| Complex64::new(2.0 * f64::from(b & 1) - 1.0, 0.0))
        .collect()
}

/// An assembled DL packet.
#[derive(Debug, Clone, PartialEq)]
pub struct DlPacket {
    pub layout: PacketLayout,
    pub samples: Vec<Complex64>,
}

/// Number of CI symbols needed for `n_ci_bits` on all usable bins.
pub fn ci_symbols_needed(n_ci_bits: usize, n_fft: usize) -> usize {
    n_ci_bits.div_ceil(usable_bins(n_fft).len())
}

/// Builds a DL packet. CI bits go uncoded BPSK on every usable bin of the
/// first `n_ci` payload symbols; `payload_bits` fill the remaining
/// symbols the same way. Both are zero-padded.
pub fn assemble_dl(
    params: &LayoutParams,
    training: &TrainingSequences,
    ci_bits: &[u8],
    payload_bits: &[u8],
) -> Result<DlPacket> {
    let layout = build_dl_layout(params)?;
    let n_fft = layout.n_fft;
    let cp = layout.cp_len;
    if training.n_fft != n_fft {
        return Err(Error::LengthMismatch {
            expected: n_fft,
            got: training.n_fft,
        });
    }
    let bins = usable_bins(n_fft);
    if ci_bits.len() > layout.n_ci * bins.len() {
        return Err(Error::ControlInfo("CI does not fit the CI symbols"));
    }
    if payload_bits.len() > (layout.n_data - layout.n_ci) * bins.len() {
        return Err(Error::Layout("payload does not fit the DL packet"));
    }
    let mut ci_bits = ci_bits.to_vec();
    ci_bits.resize(layout.n_ci * bins.len(), 0);
    let mut payload_bits = payload_bits.to_vec();
    payload_bits.resize((layout.n_data - layout.n_ci) * bins.len(), 0);
    let ci = fill_symbols(&bpsk(&ci_bits), &bins, layout.n_ci, n_fft, &[]);
    let data = fill_symbols(
        &bpsk(&payload_bits),
        &bins,
        layout.n_data - layout.n_ci,
        n_fft,
        &[],
    );
    let plan = FftPlan::new(n_fft);
    let mut samples = Vec::with_capacity(layout.duration());
    let ltf = training.ltf(cp);
    let lts_cp = training.lts_with_cp(cp);
    for f in &layout.fields {
        match f.kind {
            FieldKind::Stf => samples.extend_from_slice(&training.stf),
            FieldKind::Lts1 => samples.extend_from_slice(&ltf[..2 * cp + n_fft]),
            FieldKind::Lts2 => samples.extend_from_slice(&training.lts),
            FieldKind::Ci(k) => modulate_symbol_into(&ci[k], cp, &plan, &mut samples),
            FieldKind::Payload(k) => {
                modulate_symbol_into(&data[k - layout.n_ci], cp, &plan, &mut samples)
            }
            FieldKind::Mltf(_) | FieldKind::Pltf => samples.extend_from_slice(&lts_cp),
            FieldKind::ProbeLts(_) => samples.extend_from_slice(&training.lts),
        }
    }
    debug_assert_eq!(samples.len(), layout.duration());
    Ok(DlPacket { layout, samples })
}

/// Builds a channel-probe packet: STF then back-to-back LTSs.
pub fn assemble_probe(training: &TrainingSequences, n_lts: usize) -> Result<DlPacket> {
    let layout = crate::framing::build_probe_layout(training.n_fft, n_lts)?;
    let mut samples = Vec::with_capacity(layout.duration());
    samples.extend_from_slice(&training.stf);
    for _ in 0..n_lts {
        samples.extend_from_slice(&training.lts);
    }
    Ok(DlPacket { layout, samples })
}

/// An assembled UL packet for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UlPacket {
    pub layout: PacketLayout,
    pub samples: Vec<Complex64>,
    pub subcarriers: Vec<usize>,
    /// Unscaled constellation points in transmission order, padding
    /// included.
    pub symbols: Vec<Complex64>,
}

/// Builds one user's UL packet: the user's LTF pattern (twice, each with a
/// cyclic prefix) followed by `n_symbols` payload symbols carrying `coded`
/// bits on `subcarriers`. Power is normalized so every user transmits at
/// unit mean power regardless of its allocation size.
pub fn assemble_ul(
    training: &TrainingSequences,
    cp_len: usize,
    subcarriers: &[usize],
    coded: &[u8],
    modulation: Modulation,
    n_symbols: usize,
) -> Result<UlPacket> {
    let n_fft = training.n_fft;
    if subcarriers.is_empty() {
        return Err(Error::Allocation("empty allocation"));
    }
    let bps = modulation.bits_per_symbol();
    let capacity = n_symbols * subcarriers.len() * bps;
    if coded.len() > capacity {
        return Err(Error::Layout("coded payload exceeds UL capacity"));
    }
    let mut bits = coded.to_vec();
    bits.resize(capacity, 0);
    let symbols = qam_modulate(&bits, modulation)?;
    let layout = build_ul_layout(n_fft, cp_len, n_symbols)?;

    let plan = FftPlan::new(n_fft);
    let ltf = fill_symbols(
        &subcarriers
            .iter()
            .map(|&m| training.ul_pattern[m])
            .collect::<Vec<_>>(),
        subcarriers,
        1,
        n_fft,
        &[],
    );
    let data = fill_symbols(&symbols, subcarriers, n_symbols, n_fft, &[]);
    let mut samples = Vec::with_capacity(layout.duration());
    modulate_symbol_into(&ltf[0], cp_len, &plan, &mut samples);
    modulate_symbol_into(&ltf[0], cp_len, &plan, &mut samples);
    for d in &data {
        modulate_symbol_into(d, cp_len, &plan, &mut samples);
    }
    Ok(UlPacket {
        layout,
        samples,
        subcarriers: subcarriers.to_vec(),
        symbols,
    })
}

/// Pilot subcarriers of the OFDM-TDMA baseline and their values.
pub const TDMA_PILOTS: [(i64, f64); 4] = [(-21, 1.0), (-7, 1.0), (7, 1.0), (21, -1.0)];

pub fn tdma_pilot_bins(n_fft: usize) -> Vec<(usize, Complex64)> {
    TDMA_PILOTS
        .iter()
        .map(|&(k, v)| (bin_index(k, n_fft), Complex64::new(v, 0.0)))
        .collect()
}

/// The 48 data subcarriers of the OFDM-TDMA baseline.
pub fn tdma_data_bins(n_fft: usize) -> Vec<usize> {
    let pilots: Vec<usize> = tdma_pilot_bins(n_fft).iter().map(|p| p.0).collect();
    usable_bins(n_fft)
        .into_iter()
        .filter(|m| !pilots.contains(m))
        .collect()
}

/// Layout of an OFDM-TDMA packet: STF, legacy LTF, then data symbols.
pub fn tdma_layout(n_fft: usize, cp_len: usize, n_symbols: usize) -> Result<PacketLayout> {
    let mut layout = build_dl_layout(&LayoutParams {
        n_fft,
        cp_len,
        n_data: n_symbols,
        n_ci: 0,
        n_mltf: 0,
        mltf_gap: 0,
    })?;
    layout.fields.retain(|f| f.kind != FieldKind::Pltf);
    layout.pltf_dist = None;
    Ok(layout)
}

/// A single-user OFDM-TDMA packet.
#[derive(Debug, Clone, PartialEq)]
pub struct TdmaPacket {
    pub layout: PacketLayout,
    pub samples: Vec<Complex64>,
    pub symbols: Vec<Complex64>,
}

pub fn assemble_tdma(
    training: &TrainingSequences,
    cp_len: usize,
    coded: &[u8],
    modulation: Modulation,
    n_symbols: usize,
) -> Result<TdmaPacket> {
    let n_fft = training.n_fft;
    let data_bins = tdma_data_bins(n_fft);
    let capacity = n_symbols * data_bins.len() * modulation.bits_per_symbol();
    if coded.len() > capacity {
        return Err(Error::Layout("coded payload exceeds TDMA capacity"));
    }
    let mut bits = coded.to_vec();
    bits.resize(capacity, 0);
    let symbols = qam_modulate(&bits, modulation)?;
    let layout = tdma_layout(n_fft, cp_len, n_symbols)?;
    let data = fill_symbols(&symbols, &data_bins, n_symbols, n_fft, &tdma_pilot_bins(n_fft));
    let plan = FftPlan::new(n_fft);
    let mut samples = Vec::with_capacity(layout.duration());
    samples.extend_from_slice(&training.stf);
    samples.extend_from_slice(&training.ltf(cp_len));
    for d in &data {
        modulate_symbol_into(d, cp_len, &plan, &mut samples);
    }
    debug_assert_eq!(samples.len(), layout.duration());
    Ok(TdmaPacket {
        layout,
        samples,
        symbols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding_modem::training::synth_training;
    use crate::framing::table2a;
    use crate::mean_power;

    #[test]
    fn payload_sizing() {
        let f = PayloadFormat::new(24, Modulation::Bpsk).unwrap();
        assert_eq!(f.info_bits(), 154);
        assert_eq!(f.n_symbols(3), 128);
        assert_eq!(f.n_symbols(48), 8);
        let f = PayloadFormat::new(12, Modulation::Bpsk).unwrap();
        assert_eq!(f.n_symbols(3), 64);
        assert_eq!(f.n_symbols(13), 15);
        assert_eq!(f.n_symbols(48), 4);
        assert!(PayloadFormat::new(4, Modulation::Bpsk).is_err());
    }

    #[test]
    fn payload_round_trip() {
        let info: Vec<u8> = (0..154).map(|i| ((i * 7) % 3 == 0) as u8).collect();
        let coded = encode_payload(&info);
        assert_eq!(coded.len(), 16 * 24);
        let mut llr: Vec<f64> = coded.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect();
        llr.extend([0.0; 10]);
        let (bits, ok) = decode_payload(&llr, 154).unwrap();
        assert!(ok);
        assert_eq!(bits, info);
    }

    #[test]
    fn dl_packet_shape() {
        let t = synth_training(64, 0);
        let p = assemble_dl(
            &LayoutParams {
                n_ci: 1,
                n_mltf: 3,
                ..LayoutParams::default()
            },
            &t,
            &[1, 0, 1],
            &[1; 100],
        )
        .unwrap();
        assert_eq!(p.samples.len(), p.layout.duration());
        for f in p.layout.payload_fields() {
            let body = &p.samples[f.body_start()..f.end()];
            assert!((mean_power(body) - 1.0).abs() < 1e-9);
        }
        let pl = p.layout.body_start(FieldKind::Pltf).unwrap();
        assert_eq!(&p.samples[pl..pl + 64], &t.lts[..]);
    }

    #[test]
    fn ul_symbols_have_unit_power() {
        let t = synth_training(64, 4);
        for a in table2a() {
            let f = PayloadFormat::new(24, Modulation::Bpsk).unwrap();
            let coded = encode_payload(&vec![1; f.info_bits()]);
            let p = assemble_ul(&t, 16, &a.subcarriers, &coded, f.modulation, f.n_symbols(3)).unwrap();
            assert_eq!(p.samples.len(), 10400);
            for f in &p.layout.fields {
                let body = &p.samples[f.body_start()..f.end()];
                assert!((mean_power(body) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tdma_shape() {
        assert_eq!(tdma_data_bins(64).len(), 48);
        let t = synth_training(64, 4);
        let f = PayloadFormat::new(24, Modulation::Bpsk).unwrap();
        let coded = encode_payload(&vec![0; f.info_bits()]);
        let p = assemble_tdma(&t, 16, &coded, f.modulation, f.n_symbols(48)).unwrap();
        assert_eq!(p.samples.len(), 320 + 8 * 80);
        assert!(p.layout.is_contiguous());
    }
}
