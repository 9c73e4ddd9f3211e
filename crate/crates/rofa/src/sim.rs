//! Frame-level building blocks shared by the experiments.

use rand::Rng;

use rofa_core::cfo::{precode, rad_per_sample_to_hz, residual_cfo, slp_estimate, CfoEstimate};
use rofa_core::channel::{add_awgn, propagate, superimpose, Direction, LinkModel, RngStream};
use rofa_core::coding_modem::{synth_training, TrainingSequences};
use rofa_core::framing::{encode_ci, usable_bins, ControlInfo, LayoutParams, SubcarrierAllocation};
use rofa_core::metrics::evm;
use rofa_core::packet::{
    assemble_dl, assemble_tdma, assemble_ul, ci_symbols_needed, encode_payload, DlPacket,
    PayloadFormat,
};
use rofa_core::sync_rx::{
    decode_ul, detect_dl_start, tdma_baseline_decode, DetectorConfig, TdmaReceiverConfig,
    UlDecodeResult, UlReceiverConfig, UlUser,
};
use rofa_core::{db_to_linear, Complex64};

use crate::config::Phy;
use crate::Result;

/// Noise-only samples ahead of a DL packet in the receive buffer.
pub const LEAD: usize = 100;

/// UL noise variance; received SNRs are set through the link gains.
pub const UL_NOISE_VAR: f64 = 1.0;

/// Stream index for trial `trial` at sweep point `point`. Variants at the
/// same point share it.
pub fn stream_id(point: usize, trial: usize) -> u64 {
    ((point as u64) << 32) | trial as u64
}

pub fn trial_rng(seed: u64, point: usize, trial: usize) -> impl Rng {
    RngStream::new(seed, stream_id(point, trial)).rng()
}

/// Resolved PHY parameters.
#[derive(Debug, Clone)]
pub struct Radio {
    pub n_fft: usize,
    pub cp_len: usize,
    pub sample_rate_hz: f64,
    pub guard: usize,
    pub n_data: usize,
    pub format: PayloadFormat,
    pub training: TrainingSequences,
    phy: Phy,
}

impl Radio {
    pub fn new(phy: &Phy) -> Result<Self> {
        Ok(Self {
            n_fft: phy.n_fft,
            cp_len: phy.cp_len,
            sample_rate_hz: phy.sample_rate_hz,
            guard: phy.guard,
            n_data: phy.n_data,
            format: phy.format()?,
            training: synth_training(phy.n_fft, phy.training_seed),
            phy: phy.clone(),
        })
    }

    pub fn hz(&self, rad_per_sample: f64) -> f64 {
        rad_per_sample_to_hz(rad_per_sample, self.sample_rate_hz)
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            cp_len: self.cp_len,
            ..DetectorConfig::default()
        }
    }

    /// A DL packet with `n_mltf` M-LTFs. `ci` is carried in the leading
    /// payload symbols; the rest of the payload is a fixed pseudo-random
    /// pattern.
    pub fn dl_packet(&self, n_mltf: usize, ci: Option<&ControlInfo>) -> Result<DlPacket> {
        let ci_bits = ci.map(encode_ci).unwrap_or_default();
        let n_ci = ci_symbols_needed(ci_bits.len(), self.n_fft);
        let params = LayoutParams {
            n_fft: self.n_fft,
            cp_len: self.cp_len,
            n_data: self.n_data.max(n_ci),
            n_ci,
            n_mltf,
            mltf_gap: self.phy.mltf_gap(n_mltf)?,
        };
        let per_symbol = usable_bins(self.n_fft).len();
        let mut rng = RngStream::new(self.phy.training_seed, u64::MAX).rng();
        let payload: Vec<u8> = (0..(params.n_data - n_ci) * per_symbol)
            .map(|_| rng.random_range(0..2u8))
            .collect();
        Ok(assemble_dl(&params, &self.training, &ci_bits, &payload)?)
    }

    /// Payload symbols for a ROFA slot: the largest allocation's need.
    pub fn ul_symbols(&self, allocations: &[SubcarrierAllocation]) -> usize {
        allocations
            .iter()
            .map(|a| self.format.n_symbols(a.len()))
            .max()
            .unwrap_or(0)
    }

    pub fn tdma_symbols(&self) -> usize {
        self.format.n_symbols(rofa_core::packet::tdma_data_bins(self.n_fft).len())
    }
}

/// What one user got out of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct UserOutcome {
    pub info_bits: usize,
    pub bit_errors: usize,
    pub coded_bits: usize,
    pub raw_errors: usize,
    pub crc_ok: bool,
    /// False when the user never locked onto the DL (ROFA) or the AP
    /// missed the packet (TDMA).
    pub synced: bool,
    pub ul_snr_db: Option<f64>,
    /// |UL CFO - precoded rate|, Hz.
    pub residual_hz: Option<f64>,
    pub evm: Option<f64>,
}

impl UserOutcome {
    /// A lost packet: no CRC pass and half the bits wrong, as a coin flip
    /// would give.
    pub fn lost(info_bits: usize, coded_bits: usize) -> Self {
        Self {
            info_bits,
            bit_errors: info_bits / 2,
            coded_bits,
            raw_errors: coded_bits / 2,
            crc_ok: false,
            synced: false,
            ul_snr_db: None,
            residual_hz: None,
            evm: None,
        }
    }
}

fn count_errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len())
}

fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// DL synchronization as seen by one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlSync {
    /// Detected start minus the AP's transmit instant, in samples. It
    /// includes the DL propagation delay.
    pub start_error: i64,
    pub estimate: CfoEstimate,
}

/// Sends `dl` over the DL direction of `link` at `snr_db` (relative to the
/// received signal power), detects it and runs the CFO estimator.
pub fn receive_dl<R: Rng + ?Sized>(
    radio: &Radio,
    dl: &DlPacket,
    link: &LinkModel,
    snr_db: f64,
    rng: &mut R,
) -> Option<DlSync> {
    let rx_sig = propagate(link, Direction::Dl, &dl.samples);
    let mut buf = superimpose(&[(&rx_sig, LEAD as i64)]);
    buf.resize(buf.len() + 2 * radio.n_fft, Complex64::new(0.0, 0.0));
    let power = link.dl_gain * link.dl_gain;
    add_awgn(&mut buf, power / db_to_linear(snr_db), rng);
    let start = detect_dl_start(&buf, &radio.training, &radio.detector()).ok()?;
    let estimate = slp_estimate(&buf[start..], &dl.layout).ok()?;
    Some(DlSync {
        start_error: start as i64 - LEAD as i64,
        estimate,
    })
}

/// One ROFA user in a frame.
#[derive(Debug, Clone)]
pub struct RofaUser<'a> {
    pub allocation: &'a SubcarrierAllocation,
    /// `ul_gain` sets the UL received SNR against [`UL_NOISE_VAR`].
    pub link: LinkModel,
    pub dl_snr_db: f64,
    pub precode: bool,
}

/// One ROFA frame: every user synchronizes to the DL packet, precodes its
/// UL packet with the reciprocal CFO estimate and transmits at the
/// scheduled instant (offset by its detection error); the AP decodes the
/// superposition at the Auto-trigger index.
pub fn rofa_frame<R: Rng + ?Sized>(
    radio: &Radio,
    dl: &DlPacket,
    users: &[RofaUser<'_>],
    rng: &mut R,
) -> Result<Vec<UserOutcome>> {
    let format = radio.format;
    let allocations: Vec<SubcarrierAllocation> = users.iter().map(|u| u.allocation.clone()).collect();
    let n_symbols = radio.ul_symbols(&allocations);

    struct Sent {
        info: Vec<u8>,
        coded: Vec<u8>,
        symbols: Vec<Complex64>,
        residual_hz: f64,
    }
    let mut streams = Vec::with_capacity(users.len());
    let mut sent: Vec<Option<Sent>> = Vec::with_capacity(users.len());
    for u in users {
        let sync = receive_dl(radio, dl, &u.link, u.dl_snr_db, rng);
        let info = random_bits(rng, format.info_bits());
        let Some(sync) = sync else {
            sent.push(None);
            continue;
        };
        let coded = encode_payload(&info);
        let pkt = assemble_ul(
            &radio.training,
            radio.cp_len,
            &u.allocation.subcarriers,
            &coded,
            format.modulation,
            n_symbols,
        )?;
        let (tx, applied) = if u.precode {
            let rate = sync.estimate.reciprocal();
            (precode(&pkt.samples, &rate), rate.total())
        } else {
            (pkt.samples.clone(), 0.0)
        };
        let rx = propagate(&u.link, Direction::Ul, &tx);
        // counting-before-sending: the UL leaves dl_to_ul samples after the
        // detected DL start, so the detection error and the DL delay carry
        // over; propagate adds the UL delay
        let at = radio.guard as i64 + sync.start_error;
        streams.push((rx, at));
        sent.push(Some(Sent {
            info,
            coded,
            symbols: pkt.symbols,
            residual_hz: radio.hz(residual_cfo(applied, u.link.cfo)),
        }));
    }

    let refs: Vec<(&[Complex64], i64)> = streams.iter().map(|(s, a)| (s.as_slice(), *a)).collect();
    let mut rx = superimpose(&refs);
    let needed = radio.guard + (2 + n_symbols) * (radio.n_fft + radio.cp_len) + 2 * radio.n_fft;
    rx.resize(rx.len().max(needed), Complex64::new(0.0, 0.0));
    add_awgn(&mut rx, UL_NOISE_VAR, rng);

    let ap_users: Vec<UlUser> = allocations
        .iter()
        .map(|a| UlUser {
            user: a.user,
            subcarriers: a.subcarriers.clone(),
            format,
        })
        .collect();
    let cfg = UlReceiverConfig {
        n_fft: radio.n_fft,
        cp_len: radio.cp_len,
        n_symbols,
        guard: radio.guard,
    };
    let decoded = decode_ul(&rx, radio.guard, &ap_users, &radio.training, &cfg)?;
    let constellation = format.modulation.constellation();
    Ok(decoded
        .iter()
        .zip(&sent)
        .map(|(d, s)| match s {
            None => UserOutcome::lost(format.info_bits(), format.coded_bits()),
            Some(s) => {
                let mut o = outcome(d, &s.info, &s.coded);
                o.residual_hz = Some(s.residual_hz);
                o.evm = evm(&d.equalized, &s.symbols, &constellation).ok();
                o
            }
        })
        .collect())
}

fn outcome(d: &UlDecodeResult, info: &[u8], coded: &[u8]) -> UserOutcome {
    UserOutcome {
        info_bits: info.len(),
        bit_errors: count_errors(&d.bits, info),
        coded_bits: coded.len(),
        raw_errors: count_errors(&d.raw_bits, coded),
        crc_ok: d.crc_ok,
        synced: true,
        ul_snr_db: Some(d.ul_snr_db),
        residual_hz: None,
        evm: None,
    }
}

/// One user's OFDM-TDMA slot: the AP detects the packet itself, corrects
/// the CFO from the preamble and tracks phase with the pilots.
pub fn tdma_slot<R: Rng + ?Sized>(radio: &Radio, link: &LinkModel, rng: &mut R) -> Result<UserOutcome> {
    let format = radio.format;
    let n_symbols = radio.tdma_symbols();
    let info = random_bits(rng, format.info_bits());
    let coded = encode_payload(&info);
    let pkt = assemble_tdma(&radio.training, radio.cp_len, &coded, format.modulation, n_symbols)?;
    let sig = propagate(link, Direction::Ul, &pkt.samples);
    let mut rx = superimpose(&[(&sig, radio.guard as i64)]);
    rx.resize(rx.len() + 2 * radio.n_fft, Complex64::new(0.0, 0.0));
    add_awgn(&mut rx, UL_NOISE_VAR, rng);
    let cfg = TdmaReceiverConfig {
        n_fft: radio.n_fft,
        cp_len: radio.cp_len,
        n_symbols,
        detector: radio.detector(),
    };
    Ok(match tdma_baseline_decode(&rx, &radio.training, &format, &cfg) {
        Ok(d) => {
            let mut o = outcome(&d, &info, &coded);
            o.evm = evm(&d.equalized, &pkt.symbols, &format.modulation.constellation()).ok();
            o
        }
        Err(_) => UserOutcome::lost(format.info_bits(), format.coded_bits()),
    })
}

/// UL gain that puts a ROFA user at UL received SNR `snr_db`.
pub fn rofa_gain(snr_db: f64) -> f64 {
    (db_to_linear(snr_db) * UL_NOISE_VAR).sqrt()
}

/// UL gain that puts an OFDM-TDMA user at UL received SNR `snr_db`,
/// measured on the 48 data subcarriers of the 52 that carry power.
pub fn tdma_gain(radio: &Radio, snr_db: f64) -> f64 {
    let used = usable_bins(radio.n_fft).len() as f64;
    let data = rofa_core::packet::tdma_data_bins(radio.n_fft).len() as f64;
    (db_to_linear(snr_db) * UL_NOISE_VAR * used / data).sqrt()
}
