//! Simulated links between users and the AP.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cfo::rotate;
use crate::{db_to_linear, Complex64};

/// Deterministic random stream keyed by `(seed, stream)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Dl,
    Ul,
}

/// Bounded random walk of a link's CFO between frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    /// Largest per-frame change, rad/sample.
    pub step: f64,
    /// Largest distance from `nominal`, rad/sample.
    pub bound: f64,
    pub nominal: f64,
}

/// One user-AP link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    /// UL-direction CFO, rad/sample. The DL sees `-cfo`.
    pub cfo: f64,
    pub dl_gain: f64,
    pub ul_gain: f64,
    pub taps: Vec<Complex64>,
    pub timing_offset: i64,
    /// Complex noise variance per sample at the receiver.
    pub noise_var: f64,
    pub drift: Option<DriftModel>,
}

impl LinkModel {
    /// Unit-gain, single-tap, noiseless, aligned link with the given CFO.
    pub fn ideal(cfo: f64) -> Self {
        Self {
            cfo,
            dl_gain: 1.0,
            ul_gain: 1.0,
            taps: vec![Complex64::new(1.0, 0.0)],
            timing_offset: 0,
            noise_var: 0.0,
            drift: None,
        }
    }

    pub fn cfo_for(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Ul => self.cfo,
            Direction::Dl => -self.cfo,
        }
    }

    pub fn gain_for(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Ul => self.ul_gain,
            Direction::Dl => self.dl_gain,
        }
    }

    /// Scales the CFO and its drift, emulating a less stable oscillator.
    pub fn with_oscillator_factor(mut self, factor: f64) -> Self {
        self.cfo *= factor;
        if let Some(d) = self.drift.as_mut() {
            d.step *= factor;
            d.bound *= factor;
            d.nominal *= factor;
        }
        self
    }
}

/// Exponentially decaying taps normalized to unit energy.
pub fn exponential_taps(n_taps: usize, decay_db_per_tap: f64) -> Vec<Complex64> {
    let mut taps: Vec<Complex64> = (0..n_taps.max(1))
        .map(|k| Complex64::new(libm::sqrt(db_to_linear(-decay_db_per_tap * k as f64)), 0.0))
        .collect();
    let e: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
    for t in &mut taps {
        *t /= libm::sqrt(e);
    }
    taps
}

/// `out[n] = in[n] * exp(j*rate*n)`.
pub fn apply_cfo(samples: &[Complex64], rate: f64) -> Vec<Complex64> {
    let mut out = samples.to_vec();
    rotate(&mut out, rate, 0);
    out
}

/// Full linear convolution.
pub fn convolve(x: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    if taps.len() == 1 {
        return x.iter().map(|s| s * taps[0]).collect();
    }
    if x.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); x.len() + taps.len() - 1];
    for (n, &s) in x.iter().enumerate() {
        for (k, &h) in taps.iter().enumerate() {
            out[n + k] += s * h;
        }
    }
    out
}

/// Adds circularly symmetric complex Gaussian noise of variance `noise_var`.
pub fn add_awgn<R: Rng + ?Sized>(samples: &mut [Complex64], noise_var: f64, rng: &mut R) {
    if noise_var <= 0.0 {
        return;
    }
    let s = libm::sqrt(noise_var / 2.0);
    for x in samples.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *x += Complex64::new(re * s, im * s);
    }
}

/// Gain, multipath, timing shift and CFO, without noise. A positive
/// timing offset delays the signal by prepending zeros; a negative one
/// drops leading samples. The CFO phase is counted from the first output
/// sample.
pub fn propagate(link: &LinkModel, direction: Direction, samples: &[Complex64]) -> Vec<Complex64> {
    let g = link.gain_for(direction);
    let mut y = convolve(samples, &link.taps);
    for s in &mut y {
        *s *= g;
    }
    let mut out = if link.timing_offset >= 0 {
        let mut v = vec![Complex64::new(0.0, 0.0); link.timing_offset as usize];
        v.extend_from_slice(&y);
        v
    } else {
        y.split_off(((-link.timing_offset) as usize).min(y.len()))
    };
    rotate(&mut out, link.cfo_for(direction), 0);
    out
}

/// [`propagate`] followed by receiver noise of the link's variance.
pub fn traverse<R: Rng + ?Sized>(
    link: &LinkModel,
    direction: Direction,
    samples: &[Complex64],
    rng: &mut R,
) -> Vec<Complex64> {
    let mut out = propagate(link, direction, samples);
    add_awgn(&mut out, link.noise_var, rng);
    out
}

/// Sums streams placed at the given start indices on a common timeline
/// that begins at zero. Samples before zero are dropped.
pub fn superimpose(streams: &[(&[Complex64], i64)]) -> Vec<Complex64> {
    let len = streams
        .iter()
        .map(|(s, start)| (start + s.len() as i64).max(0) as usize)
        .max()
        .unwrap_or(0);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for &(s, start) in streams {
        for (k, &x) in s.iter().enumerate() {
            let n = start + k as i64;
            if n >= 0 {
                out[n as usize] += x;
            }
        }
    }
    out
}

/// Moves the CFO by a uniform step in `[-step, step]`, clamped to
/// `nominal +- bound`. No-op without a drift model.
pub fn step_drift<R: Rng + ?Sized>(link: &LinkModel, rng: &mut R) -> LinkModel {
    let mut next = link.clone();
    if let Some(d) = link.drift {
        let delta = if d.step > 0.0 {
            rng.random_range(-d.step..=d.step)
        } else {
            0.0
        };
        next.cfo = (link.cfo + delta).clamp(d.nominal - d.bound, d.nominal + d.bound);
    }
    next
}

/// Complex noise variance giving `snr_db` relative to `signal_power`.
pub fn noise_var_for_snr(signal_power: f64, snr_db: f64) -> f64 {
    signal_power / db_to_linear(snr_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfo::hz_to_rad_per_sample;
    use crate::{linear_to_db, mean_power};
    use core::f64::consts::PI;

    fn ramp(n: usize) -> Vec<Complex64> {
        (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect()
    }

    #[test]
    fn identity_link() {
        let x = ramp(50);
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(traverse(&LinkModel::ideal(0.0), Direction::Ul, &x, &mut rng), x);
    }

    #[test]
    fn apply_cfo_closed_form() {
        let x = vec![Complex64::new(1.0, 0.0); 64];
        let y = apply_cfo(&x, 2.0 * PI / 64.0);
        let want = Complex64::from_polar(1.0, 2.0 * PI * 63.0 / 64.0);
        assert!((y[63] - want).norm() < 1e-12);
        let back = apply_cfo(&y, -2.0 * PI / 64.0);
        assert!(back.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn reciprocity() {
        let l = LinkModel::ideal(0.0123);
        assert_eq!(l.cfo_for(Direction::Dl), -l.cfo_for(Direction::Ul));
        let x = vec![Complex64::new(1.0, 0.0); 8];
        let d = propagate(&l, Direction::Dl, &x);
        let u = propagate(&l, Direction::Ul, &x);
        for (a, b) in d.iter().zip(&u) {
            assert!((a * b - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_variance_and_reproducibility() {
        let x = vec![Complex64::new(1.0, 0.0); 1_000_000];
        let mut link = LinkModel::ideal(0.0);
        link.noise_var = noise_var_for_snr(1.0, 10.0);
        let y = traverse(&link, Direction::Dl, &x, &mut RngStream::new(5, 2).rng());
        let noise: Vec<Complex64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let snr = linear_to_db(1.0 / mean_power(&noise));
        assert!((snr - 10.0).abs() < 0.2, "{snr}");
        let y2 = traverse(&link, Direction::Dl, &x[..1000], &mut RngStream::new(5, 2).rng());
        assert_eq!(&y[..1000], &y2[..]);
    }

    #[test]
    fn timing_and_taps() {
        let mut l = LinkModel::ideal(0.0);
        l.timing_offset = 3;
        l.taps = vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        let y = propagate(&l, Direction::Ul, &[Complex64::new(1.0, 0.0)]);
        assert_eq!(y.len(), 5);
        assert_eq!(y[3], Complex64::new(1.0, 0.0));
        assert_eq!(y[4], Complex64::new(0.5, 0.0));
        l.timing_offset = -1;
        let y = propagate(&l, Direction::Ul, &[Complex64::new(1.0, 0.0)]);
        assert_eq!(y, vec![Complex64::new(0.5, 0.0)]);
        let t = exponential_taps(3, 3.0);
        assert!((t.iter().map(|v| v.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn superposition() {
        let a = ramp(4);
        assert_eq!(superimpose(&[(&a, 0)]), a);
        let s = superimpose(&[(&a, 2), (&a, -1)]);
        assert_eq!(s.len(), 6);
        assert_eq!(s[0], a[1]);
        assert_eq!(s[2], a[0] + a[3]);
    }

    #[test]
    fn drift_bounded() {
        let nominal = hz_to_rad_per_sample(930.0, 10e6);
        let bound = hz_to_rad_per_sample(110.0, 10e6);
        let mut l = LinkModel::ideal(nominal);
        l.drift = Some(DriftModel {
            step: bound / 2.0,
            bound,
            nominal,
        });
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..25 {
            l = step_drift(&l, &mut rng);
            assert!((l.cfo - nominal).abs() <= bound + 1e-18);
            assert_eq!(l.cfo_for(Direction::Dl), -l.cfo);
        }
        let mut still = LinkModel::ideal(0.1);
        still.drift = Some(DriftModel {
            step: 0.0,
            bound: 0.0,
            nominal: 0.1,
        });
        assert_eq!(step_drift(&still, &mut rng).cfo, 0.1);
    }
}
