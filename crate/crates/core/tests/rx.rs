use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rofa_core::channel::{add_awgn, convolve, superimpose, RngStream};
use rofa_core::coding_modem::fft::FftPlan;
use rofa_core::coding_modem::ofdm::demodulate_at;
use rofa_core::coding_modem::{synth_training, Modulation, TrainingSequences};
use rofa_core::framing::{table2a, LayoutParams};
use rofa_core::packet::{assemble_dl, assemble_tdma, assemble_ul, encode_payload, PayloadFormat};
use rofa_core::sync_rx::{
    decode_ul, detect_dl_start, estimate_ul_channel, tdma_baseline_decode, DetectorConfig,
    TdmaReceiverConfig, UlReceiverConfig, UlUser, CP_CUT,
};
use rofa_core::Complex64;

const N: usize = 64;
const CP: usize = 16;

fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn ul_reference(t: &TrainingSequences, sc: &[usize]) -> Vec<Complex64> {
    let s = (N as f64 / sc.len() as f64).sqrt();
    t.ul_ltf(sc).iter().map(|l| l * s).collect()
}

/// Receives the two UL LTS copies of a packet that starts at `at`.
fn ltf_bins(rx: &[Complex64], at: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let plan = FftPlan::new(N);
    let w = |k: usize| at + k * (N + CP) + CP - CP_CUT;
    (
        demodulate_at(rx, w(0), &plan).unwrap(),
        demodulate_at(rx, w(1), &plan).unwrap(),
    )
}

fn ul_packet(t: &TrainingSequences, sc: &[usize], rng: &mut impl Rng, n_sym: usize) -> Vec<Complex64> {
    let coded = random_bits(rng, n_sym * sc.len());
    assemble_ul(t, CP, sc, &coded, Modulation::Bpsk, n_sym).unwrap().samples
}

#[test]
fn channel_estimate_equals_dft_of_taps() {
    let t = synth_training(N, 3);
    let sc: Vec<usize> = vec![3, 10, 13, 16, 40, 55];
    let taps = [
        Complex64::new(0.8, 0.1),
        Complex64::new(-0.3, 0.25),
        Complex64::new(0.05, -0.12),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tx = ul_packet(&t, &sc, &mut rng, 2);
    let rx = convolve(&tx, &taps);
    let (y1, y2) = ltf_bins(&rx, 0);
    let est = estimate_ul_channel(&y1, &y2, &ul_reference(&t, &sc), &sc).unwrap();
    for (&m, g) in sc.iter().zip(&est.gains) {
        // the FFT window opens CP_CUT samples early, adding that much delay
        let h: Complex64 = taps
            .iter()
            .enumerate()
            .map(|(k, &h)| h * Complex64::from_polar(1.0, -2.0 * PI * (m * (k + CP_CUT)) as f64 / N as f64))
            .sum();
        assert!((g - h).norm() < 1e-9, "bin {m}: {g} vs {h}");
    }
}

#[test]
fn two_lts_average_halves_estimator_variance() {
    let t = synth_training(N, 3);
    let sc = vec![10, 13, 16];
    let reference = ul_reference(&t, &sc);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tx = ul_packet(&t, &sc, &mut rng, 1);
    let (mut v_pair, mut v_single) = (0.0, 0.0);
    let trials = 4000;
    for _ in 0..trials {
        let mut rx = tx.clone();
        add_awgn(&mut rx, 0.05, &mut rng);
        let (y1, y2) = ltf_bins(&rx, 0);
        let est = estimate_ul_channel(&y1, &y2, &reference, &sc).unwrap();
        let single = estimate_ul_channel(&y1, &y1, &reference, &sc).unwrap();
        // the noiseless estimate is exp(-j 2 pi m cut / N)
        for (i, &m) in sc.iter().enumerate() {
            let h = Complex64::from_polar(1.0, -2.0 * PI * (m * CP_CUT) as f64 / N as f64);
            v_pair += (est.gains[i] - h).norm_sqr();
            v_single += (single.gains[i] - h).norm_sqr();
        }
    }
    let ratio = v_pair / v_single;
    assert!((ratio - 0.5).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn misaligned_users_stay_orthogonal_within_the_safe_range() {
    let t = synth_training(N, 3);
    let alloc = table2a();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = ul_packet(&t, &alloc[0].subcarriers, &mut rng, 4);
    let b = ul_packet(&t, &alloc[1].subcarriers, &mut rng, 4);
    let plan = FftPlan::new(N);
    let lead = 40;
    // window opens CP_CUT early, so arrival may be CP_CUT early or
    // CP - CP_CUT late without crossing a symbol boundary
    for d in -(CP_CUT as i64)..=(CP - CP_CUT) as i64 {
        let rx = superimpose(&[(&a, lead), (&b, lead + d)]);
        for k in 0..6 {
            let at = lead as usize + k * (N + CP) + CP - CP_CUT;
            let bins = demodulate_at(&rx, at, &plan).unwrap();
            let alone = demodulate_at(&superimpose(&[(&a, lead)]), at, &plan).unwrap();
            for &m in &alloc[0].subcarriers {
                let leak = (bins[m] - alone[m]).norm_sqr() / alone[m].norm_sqr();
                assert!(leak < 1e-6, "offset {d} symbol {k} bin {m}: {leak}");
            }
        }
    }
}

struct MuFrame {
    rx: Vec<Complex64>,
    users: Vec<UlUser>,
    info: Vec<Vec<u8>>,
    cfg: UlReceiverConfig,
}

const GUARD: usize = 80;

/// Three `table2a` users; `gains[i] == 0` means user i stays silent.
fn mu_frame(t: &TrainingSequences, gains: &[f64], payload_seed: &[u64], noise_seed: u64, noise_var: f64) -> MuFrame {
    let format = PayloadFormat::new(24, Modulation::Bpsk).unwrap();
    let n_sym = format.n_symbols(3);
    let mut tx = Vec::new();
    let mut users = Vec::new();
    let mut info = Vec::new();
    for (i, a) in table2a().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(payload_seed[i]);
        let bits = random_bits(&mut rng, format.info_bits());
        let p = assemble_ul(t, CP, &a.subcarriers, &encode_payload(&bits), format.modulation, n_sym).unwrap();
        let s: Vec<Complex64> = p.samples.iter().map(|x| x * gains[i]).collect();
        tx.push(s);
        users.push(UlUser {
            user: a.user,
            subcarriers: a.subcarriers,
            format,
        });
        info.push(bits);
    }
    let streams: Vec<(&[Complex64], i64)> = tx.iter().map(|s| (s.as_slice(), GUARD as i64)).collect();
    let mut rx = superimpose(&streams);
    rx.resize(rx.len() + 40, Complex64::new(0.0, 0.0));
    add_awgn(&mut rx, noise_var, &mut RngStream::new(noise_seed, 0).rng());
    MuFrame {
        rx,
        users,
        info,
        cfg: UlReceiverConfig {
            n_fft: N,
            cp_len: CP,
            n_symbols: n_sym,
            guard: GUARD,
        },
    }
}

#[test]
fn three_users_decode_noiseless() {
    let t = synth_training(N, 9);
    let f = mu_frame(&t, &[1.0, 1.0, 1.0], &[1, 2, 3], 0, 0.0);
    let res = decode_ul(&f.rx, GUARD, &f.users, &t, &f.cfg).unwrap();
    for (r, bits) in res.iter().zip(&f.info) {
        assert!(r.crc_ok);
        assert_eq!(&r.bits, bits);
    }
}

#[test]
fn silent_user_fails_alone() {
    let t = synth_training(N, 9);
    let f = mu_frame(&t, &[1.0, 0.0, 1.0], &[1, 2, 3], 5, 1e-3);
    let res = decode_ul(&f.rx, GUARD, &f.users, &t, &f.cfg).unwrap();
    assert!(res[0].crc_ok && res[2].crc_ok);
    assert!(!res[1].crc_ok);
    assert_eq!(res[0].bits, f.info[0]);
    assert_eq!(res[2].bits, f.info[2]);
}

#[test]
fn near_far_isolation_is_bit_exact() {
    let t = synth_training(N, 9);
    // user 1 sits near its decoding threshold; user 2 changes power and data
    let reference = mu_frame(&t, &[0.06, 1.0, 1.0], &[1, 2, 3], 11, 1.0);
    let base = decode_ul(&reference.rx, GUARD, &reference.users, &t, &reference.cfg).unwrap();
    for (g, seed) in [(0.0, 2), (0.1, 20), (10.0, 21), (300.0, 22)] {
        let f = mu_frame(&t, &[0.06, g, 1.0], &[1, seed, 3], 11, 1.0);
        let res = decode_ul(&f.rx, GUARD, &f.users, &t, &f.cfg).unwrap();
        assert_eq!(res[0].bits, base[0].bits, "gain {g}");
        assert_eq!(res[0].raw_bits, base[0].raw_bits, "gain {g}");
        assert_eq!(res[0].crc_ok, base[0].crc_ok);
        assert_eq!(res[2].bits, base[2].bits);
    }
}

#[test]
fn equalized_symbols_land_on_the_constellation() {
    // power normalization must be undone per user, or anything beyond
    // BPSK decodes wrongly
    let t = synth_training(N, 9);
    let format = PayloadFormat::new(24, Modulation::Qam16).unwrap();
    let alloc = table2a();
    let n_sym = format.n_symbols(3);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut streams = Vec::new();
    let mut sent = Vec::new();
    for (a, g) in alloc.iter().zip([0.3, 1.0, 2.5]) {
        let bits = random_bits(&mut rng, format.info_bits());
        let p = assemble_ul(&t, CP, &a.subcarriers, &encode_payload(&bits), format.modulation, n_sym).unwrap();
        streams.push(p.samples.iter().map(|x| x * g).collect::<Vec<_>>());
        sent.push((bits, p.symbols));
    }
    let refs: Vec<(&[Complex64], i64)> = streams.iter().map(|s| (s.as_slice(), GUARD as i64)).collect();
    let mut rx = superimpose(&refs);
    rx.resize(rx.len() + 40, Complex64::new(0.0, 0.0));
    add_awgn(&mut rx[..GUARD], 1e-6, &mut rng);
    let users: Vec<UlUser> = alloc
        .iter()
        .map(|a| UlUser {
            user: a.user,
            subcarriers: a.subcarriers.clone(),
            format,
        })
        .collect();
    let cfg = UlReceiverConfig {
        n_fft: N,
        cp_len: CP,
        n_symbols: n_sym,
        guard: GUARD,
    };
    let res = decode_ul(&rx, GUARD, &users, &t, &cfg).unwrap();
    for (r, (bits, symbols)) in res.iter().zip(&sent) {
        assert!(r.crc_ok);
        assert_eq!(&r.bits, bits);
        for (e, s) in r.equalized.iter().zip(symbols) {
            assert!((e - s).norm() < 1e-9, "{e} vs {s}");
        }
    }
}

fn preamble_stream(t: &TrainingSequences, offset: usize, noise_var: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let p = assemble_dl(
        &LayoutParams {
            n_data: 4,
            ..LayoutParams::default()
        },
        t,
        &[],
        &[1, 0, 1, 1],
    )
    .unwrap();
    let mut rx = superimpose(&[(&p.samples, offset as i64)]);
    rx.resize(rx.len() + 200, Complex64::new(0.0, 0.0));
    add_awgn(&mut rx, noise_var, rng);
    rx
}

#[test]
fn detector_is_exact_without_noise() {
    let t = synth_training(N, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rx = preamble_stream(&t, 1234, 0.0, &mut rng);
    assert_eq!(detect_dl_start(&rx, &t, &DetectorConfig::default()).unwrap(), 1234);
}

#[test]
fn detector_within_one_sample_at_15_db() {
    let t = synth_training(N, 1);
    let cfg = DetectorConfig::default();
    let trials = 10_000;
    let mut hits = 0;
    for k in 0..trials {
        let mut rng = RngStream::new(15, k).rng();
        let rx = preamble_stream(&t, 1234, 10f64.powf(-1.5), &mut rng);
        if let Ok(s) = detect_dl_start(&rx, &t, &cfg) {
            if (s as i64 - 1234).abs() <= 1 {
                hits += 1;
            }
        }
    }
    assert!(hits as f64 >= 0.99 * trials as f64, "{hits}");
}

#[test]
fn detector_never_fires_on_noise() {
    let t = synth_training(N, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut noise = vec![Complex64::new(0.0, 0.0); 1_000_000];
    add_awgn(&mut noise, 1.0, &mut rng);
    assert!(detect_dl_start(&noise, &t, &DetectorConfig::default()).is_err());
}

struct Tdma {
    rx: Vec<Complex64>,
    coded: Vec<u8>,
    info: Vec<u8>,
}

fn tdma_stream(t: &TrainingSequences, format: &PayloadFormat, noise_var: f64, rng: &mut impl Rng) -> Tdma {
    let info = random_bits(rng, format.info_bits());
    let coded = encode_payload(&info);
    let n_sym = format.n_symbols(48);
    let p = assemble_tdma(t, CP, &coded, format.modulation, n_sym).unwrap();
    let mut rx = superimpose(&[(&p.samples, 300)]);
    rx.resize(rx.len() + 100, Complex64::new(0.0, 0.0));
    add_awgn(&mut rx, noise_var, rng);
    Tdma { rx, coded, info }
}

fn tdma_cfg(format: &PayloadFormat) -> TdmaReceiverConfig {
    TdmaReceiverConfig {
        n_fft: N,
        cp_len: CP,
        n_symbols: format.n_symbols(48),
        detector: DetectorConfig::default(),
    }
}

#[test]
fn tdma_noiseless_round_trip() {
    let t = synth_training(N, 1);
    let format = PayloadFormat::new(24, Modulation::Bpsk).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = tdma_stream(&t, &format, 0.0, &mut rng);
    let r = tdma_baseline_decode(&s.rx, &t, &format, &tdma_cfg(&format)).unwrap();
    assert!(r.crc_ok);
    assert_eq!(r.bits, s.info);
    assert_eq!(r.raw_bits, s.coded);
}

/// Gaussian tail via the complementary error function series.
fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / 2f64.sqrt())
}

fn erfc(x: f64) -> f64 {
    // Numerical Recipes erfcc, relative error below 1.2e-7
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Uncoded BPSK with a Gaussian phase error on the decision, at per-bin SNR
/// `g`. For BPSK only the phase of the channel estimate matters: the
/// two-LTS average leaves relative error variance 1/(2g), i.e. phase
/// variance 1/(4g); the four-pilot common-phase estimate adds
/// (1/(2g) + 1/(4g))/4 = 3/(16g). The sum 7/(16g) is averaged over by
/// Simpson's rule.
fn bpsk_ber_with_phase_noise(g: f64) -> f64 {
    let sd = (7.0 / (16.0 * g)).sqrt();
    let steps = 2000;
    let h = 12.0 * sd / steps as f64;
    let f = |k: usize| {
        let phi = -6.0 * sd + k as f64 * h;
        let w = (-phi * phi / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt());
        w * q_function((2.0 * g).sqrt() * phi.cos())
    };
    let mut acc = f(0) + f(steps);
    for k in 1..steps {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
    }
    acc * h / 3.0
}

#[test]
fn tdma_raw_ber_tracks_uncoded_bpsk() {
    let t = synth_training(N, 1);
    let format = PayloadFormat::new(24, Modulation::Bpsk).unwrap();
    let cfg = tdma_cfg(&format);
    // per-subcarrier SNR grid; each used bin carries N/52 of the unit power
    let grid: Vec<f64> = (0..=16).map(|k| 3.0 + 0.5 * k as f64).collect();
    let mut measured = Vec::new();
    for (i, &snr) in grid.iter().enumerate() {
        let noise_var = (N as f64 / 52.0) / 10f64.powf(snr / 10.0);
        let (mut errors, mut total) = (0usize, 0usize);
        for k in 0..400 {
            let mut rng = RngStream::new(i as u64, k).rng();
            let s = tdma_stream(&t, &format, noise_var, &mut rng);
            // a missed packet counts as coin-flip bits
            errors += match tdma_baseline_decode(&s.rx, &t, &format, &cfg) {
                Ok(r) => r.raw_bits.iter().zip(&s.coded).filter(|(a, b)| a != b).count(),
                Err(_) => s.coded.len() / 2,
            };
            total += s.coded.len();
        }
        measured.push(errors as f64 / total as f64);
    }
    let perfect: Vec<f64> = grid.iter().map(|&s| q_function((2.0 * db(s)).sqrt())).collect();
    let with_phase_noise: Vec<f64> = grid.iter().map(|&s| bpsk_ber_with_phase_noise(db(s))).collect();
    let at = |ys: &[f64]| rofa_core::metrics::crossing_point(&grid, ys, 1e-3).unwrap();
    let (m, a, p) = (at(&measured), at(&with_phase_noise), at(&perfect));
    assert!((p - 6.79).abs() < 0.05, "perfect-CSI crossing {p}");
    assert!((m - a).abs() <= 0.5, "measured {m} dB vs analytic {a} dB: {measured:?}");
    // estimation costs something, but less than a dB
    assert!(m > p && m - p < 1.0, "{m} vs {p}");
}
