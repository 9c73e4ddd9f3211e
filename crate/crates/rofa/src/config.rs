//! Scenario files.
//!
//! A scenario is a JSON document mirroring [`Scenario`]. Frequencies are
//! written either as `{"hz": 930}` or `{"rad_per_sample": 0.0126}`; Hz
//! values are converted with the sample rate from `phy`.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use rofa_core::cfo::hz_to_rad_per_sample;
use rofa_core::channel::exponential_taps;
use rofa_core::coding_modem::Modulation;
use rofa_core::framing::{
    interleaved_allocation, table2a, table2b, validate_allocations, SubcarrierAllocation,
};
use rofa_core::packet::PayloadFormat;
use rofa_core::Complex64;

use crate::error::{config_err, Error, Result};

pub const DEFAULT_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Required: every random draw derives from it.
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Multiplies every configured CFO, drift step and drift bound.
    #[serde(default = "unity")]
    pub oscillator_factor: f64,
    #[serde(default)]
    pub phy: Phy,
    pub experiment: Experiment,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn unity() -> f64 {
    1.0
}

/// PHY parameters shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Phy {
    pub n_fft: usize,
    pub cp_len: usize,
    pub sample_rate_hz: f64,
    /// DL payload symbols.
    pub n_data: usize,
    /// M-LTFs in the DL packet used for UL experiments.
    pub n_mltf: usize,
    /// Noise-only samples between slots.
    pub guard: usize,
    /// UL packet size: information, CRC32 and tail, in bytes.
    pub packet_bytes: usize,
    pub modulation: String,
    /// Seed of the UL LTF pattern.
    pub training_seed: u64,
}

impl Default for Phy {
    fn default() -> Self {
        Self {
            n_fft: 64,
            cp_len: 16,
            sample_rate_hz: 10e6,
            n_data: 128,
            n_mltf: 3,
            guard: 80,
            packet_bytes: 24,
            modulation: "bpsk".into(),
            training_seed: 1,
        }
    }
}

impl Phy {
    pub fn modulation(&self) -> Result<Modulation> {
        Modulation::from_str(&self.modulation)
            .map_err(|_| Error::Config(format!("unknown modulation `{}`", self.modulation)))
    }

    pub fn format(&self) -> Result<PayloadFormat> {
        Ok(PayloadFormat::new(self.packet_bytes, self.modulation()?)?)
    }

    pub fn freq(&self, f: Freq) -> f64 {
        f.rad_per_sample(self.sample_rate_hz)
    }

    /// M-LTF spacing that yields exactly `n_mltf` M-LTFs.
    pub fn mltf_gap(&self, n_mltf: usize) -> Result<usize> {
        if n_mltf == 0 {
            return Ok(self.n_data.max(1));
        }
        let gap = self.n_data.div_ceil(n_mltf + 1);
        if gap == 0 || self.n_data.div_ceil(gap) - 1 != n_mltf {
            return config_err(format!(
                "{n_mltf} M-LTFs cannot be spaced evenly over {} payload symbols",
                self.n_data
            ));
        }
        Ok(gap)
    }

    fn validate(&self) -> Result<()> {
        if !self.n_fft.is_power_of_two() || self.n_fft < 64 {
            return config_err("n_fft must be a power of two, at least 64");
        }
        if self.cp_len == 0 || 2 * self.cp_len > self.n_fft {
            return config_err("cp_len must be in 1..=n_fft/2");
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return config_err("sample_rate_hz must be positive");
        }
        if self.guard < 2 * self.cp_len {
            return config_err("guard must cover at least two cyclic prefixes");
        }
        self.format()?;
        self.mltf_gap(self.n_mltf)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Freq {
    Hz(f64),
    RadPerSample(f64),
}

impl Default for Freq {
    fn default() -> Self {
        Freq::Hz(0.0)
    }
}

impl Freq {
    pub fn rad_per_sample(self, sample_rate_hz: f64) -> f64 {
        match self {
            Freq::Hz(h) => hz_to_rad_per_sample(h, sample_rate_hz),
            Freq::RadPerSample(f) => f,
        }
    }

    fn is_finite(self) -> bool {
        match self {
            Freq::Hz(v) | Freq::RadPerSample(v) => v.is_finite(),
        }
    }
}

/// A sweep axis, either an inclusive range or explicit points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range { start: f64, stop: f64, step: f64 },
    Points { points: Vec<f64> },
}

impl Grid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Grid::Range { start, stop, step }
    }

    pub fn points(points: &[f64]) -> Self {
        Grid::Points {
            points: points.to_vec(),
        }
    }

    /// The grid values, ascending. Range points are rounded to 1e-9 so
    /// fractional steps print cleanly.
    pub fn values(&self) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            Grid::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                    return config_err("grid bounds must be finite");
                }
                if *step <= 0.0 || stop < start {
                    return config_err(format!("invalid grid {start}..{stop} step {step}"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n)
                    .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
                    .collect()
            }
            Grid::Points { points } => points.clone(),
        };
        if v.is_empty() {
            return config_err("grid is empty");
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return config_err("grid points must be finite and strictly increasing");
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    ResidualCfo(ResidualCfoSpec),
    Evm(EvmSpec),
    Uplink(UplinkSpec),
    CoherenceProbe(ProbeSpec),
    TriggerOffset(TriggerSpec),
}

/// Residual CFO of single DL packets after each estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualCfoSpec {
    pub snr_db: Grid,
    /// CFO seen by the DL receiver.
    pub cfo: Freq,
    pub variants: Vec<CfoVariant>,
    /// Skip the noise entirely (exactness checks).
    #[serde(default)]
    pub noiseless: bool,
    /// Also emit quantiles and staircase statistics.
    #[serde(default)]
    pub distribution: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CfoVariant {
    /// Coarse stage only.
    Stf,
    /// Coarse plus fine.
    StfLtf,
    /// Full chain on a packet without M-LTFs.
    Slp,
    /// Full chain on a packet with this many M-LTFs.
    SlpMltf(usize),
}

impl CfoVariant {
    pub fn label(self) -> String {
        match self {
            CfoVariant::Stf => "stf".into(),
            CfoVariant::StfLtf => "stf-ltf".into(),
            CfoVariant::Slp => "slp".into(),
            CfoVariant::SlpMltf(n) => format!("slp-mltf{n}"),
        }
    }

    /// M-LTF count of the packet this variant is evaluated on, if it
    /// needs a particular one.
    pub fn n_mltf(self) -> Option<usize> {
        match self {
            CfoVariant::Stf | CfoVariant::StfLtf => None,
            CfoVariant::Slp => Some(0),
            CfoVariant::SlpMltf(n) => Some(n),
        }
    }
}

/// Precoded versus unprecoded single-subcarrier UL, with an OFDM-TDMA
/// reference, on an Eb/N0 axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvmSpec {
    pub ebn0_db: Grid,
    /// UL-direction CFO of the user.
    pub cfo: Freq,
    #[serde(default = "thirty")]
    pub dl_snr_db: f64,
    #[serde(default = "ten")]
    pub subcarrier: usize,
    #[serde(default = "yes")]
    pub tdma: bool,
}

fn thirty() -> f64 {
    30.0
}

fn ten() -> usize {
    10
}

fn yes() -> bool {
    true
}

/// Multiuser UL on the UL-received-SNR axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UplinkSpec {
    pub ul_snr_db: Grid,
    #[serde(default = "twenty")]
    pub dl_snr_db: f64,
    pub systems: Vec<SystemSpec>,
}

fn twenty() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    pub access: Access,
    pub users: Vec<UserSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Access {
    Table2a,
    Table2b,
    Interleaved { per_user: usize },
    Explicit { subcarriers: Vec<Vec<usize>> },
    /// One user per UL slot on all 48 data subcarriers.
    OfdmTdma,
}

impl Access {
    /// ROFA allocations; `None` for OFDM-TDMA.
    pub fn allocations(&self, n_users: usize, n_fft: usize) -> Result<Option<Vec<SubcarrierAllocation>>> {
        let a = match self {
            Access::Table2a => table2a(),
            Access::Table2b => table2b(),
            Access::Interleaved { per_user } => interleaved_allocation(n_users, *per_user, n_fft)?,
            Access::Explicit { subcarriers } => subcarriers
                .iter()
                .enumerate()
                .map(|(i, s)| SubcarrierAllocation::new(i as u8 + 1, s.clone()))
                .collect(),
            Access::OfdmTdma => return Ok(None),
        };
        validate_allocations(&a, n_fft)?;
        if a.len() != n_users {
            return config_err(format!(
                "allocation has {} users but {n_users} are configured",
                a.len()
            ));
        }
        Ok(Some(a))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserSpec {
    /// UL-direction CFO; the DL sees the negative.
    pub cfo: Freq,
    /// Holds the user at this UL received SNR instead of following the
    /// sweep.
    pub fixed_snr_db: Option<f64>,
    /// Overrides the experiment's DL SNR for this user.
    pub dl_snr_db: Option<f64>,
    pub channel: Channel,
    /// Extra propagation delay in samples, both directions.
    pub delay: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Channel {
    #[default]
    Los,
    /// Unit-energy exponential profile.
    Exponential { n_taps: usize, decay_db: f64 },
    /// Explicit taps as `[re, im]` pairs.
    Taps(Vec<[f64; 2]>),
}

impl Channel {
    pub fn taps(&self) -> Vec<Complex64> {
        match self {
            Channel::Los => vec![Complex64::new(1.0, 0.0)],
            Channel::Exponential { n_taps, decay_db } => exponential_taps(*n_taps, *decay_db),
            Channel::Taps(t) => t.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        }
    }
}

/// Alternating probe packets over a drifting reciprocal link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub rounds: usize,
    /// Nominal CFO from node B's point of view (B to A direction).
    pub cfo: Freq,
    pub drift_step: Freq,
    pub drift_bound: Freq,
    #[serde(default = "thirty")]
    pub snr_db: f64,
    /// LTS repetitions after the STF.
    pub n_lts: usize,
}

/// Distribution of the UL start error under Auto-trigger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSpec {
    /// Clock skew drawn uniformly from `-max_skew..=max_skew` per frame.
    pub max_skew: i64,
    pub detection: Detection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Detection {
    /// Detection error on {-1, 0, +1} with `P(0) = p_zero`, the rest split
    /// evenly.
    Model { p_zero: f64 },
    /// The real packet detector on a noisy DL preamble.
    Detector { snr_db: f64 },
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return config_err("scenario name is empty");
        }
        if self.trials == 0 {
            return config_err("trials must be positive");
        }
        if !(self.oscillator_factor.is_finite() && self.oscillator_factor > 0.0) {
            return config_err("oscillator_factor must be positive");
        }
        self.phy.validate()?;
        match &self.experiment {
            Experiment::ResidualCfo(s) => {
                s.snr_db.values()?;
                check_freq(s.cfo)?;
                if s.variants.is_empty() {
                    return config_err("no estimator variants");
                }
                for v in &s.variants {
                    if let Some(n) = v.n_mltf() {
                        self.phy.mltf_gap(n)?;
                    }
                }
            }
            Experiment::Evm(s) => {
                s.ebn0_db.values()?;
                check_freq(s.cfo)?;
                if !rofa_core::framing::usable_bins(self.phy.n_fft).contains(&s.subcarrier) {
                    return config_err(format!("subcarrier {} is not usable", s.subcarrier));
                }
            }
            Experiment::Uplink(s) => {
                s.ul_snr_db.values()?;
                if s.systems.is_empty() {
                    return config_err("no systems to simulate");
                }
                let mut names: Vec<&str> = s.systems.iter().map(|x| x.name.as_str()).collect();
                names.sort_unstable();
                if names.windows(2).any(|w| w[0] == w[1]) {
                    return config_err("system names must be unique");
                }
                for sys in &s.systems {
                    if sys.users.is_empty() {
                        return config_err(format!("system `{}` has no users", sys.name));
                    }
                    sys.access.allocations(sys.users.len(), self.phy.n_fft)?;
                    for u in &sys.users {
                        check_freq(u.cfo)?;
                        if u.channel.taps().iter().all(|t| t.norm_sqr() == 0.0) {
                            return config_err("channel taps are all zero");
                        }
                        if u.delay < 0 {
                            return config_err("delay must be non-negative");
                        }
                        // round trip plus excess delay must stay inside the
                        // part of the prefix the receiver leaves unused
                        let spread = u.channel.taps().len() + 2 * u.delay as usize;
                        if spread > self.phy.cp_len - rofa_core::sync_rx::CP_CUT.min(self.phy.cp_len) {
                            return config_err("delay spread exceeds the cyclic prefix");
                        }
                    }
                }
            }
            Experiment::CoherenceProbe(s) => {
                if s.rounds == 0 || s.n_lts < 2 {
                    return config_err("probe needs at least one round and two LTSs");
                }
                for f in [s.cfo, s.drift_step, s.drift_bound] {
                    check_freq(f)?;
                }
            }
            Experiment::TriggerOffset(s) => {
                if s.max_skew < 0 {
                    return config_err("max_skew must be non-negative");
                }
                if let Detection::Model { p_zero } = s.detection {
                    if !(0.0..=1.0).contains(&p_zero) {
                        return config_err("p_zero must be a probability");
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_freq(f: Freq) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        config_err("frequency must be finite")
    }
}
